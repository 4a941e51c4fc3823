# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging
import math

logger = logging.getLogger(__name__)


class PlanBidder:
    '''
    Bids from a receding horizon controller
    :param controller: RecedingHorizonController
    :param sigma: standard deviation of the Gaussian noise added to every nominal bid
    :param rng: numpy Generator for noise and allocation draws
    '''

    def __init__(self, controller, sigma, rng):
        self.controller = controller
        self.sigma = float(sigma)
        self.rng = rng
        self.bid_path = []

    def bid(self, t, j):
        '''
        :return: submitted bid, or None when the plan buys nothing of type j at t
        '''
        ctrl = self.controller
        if ctrl.needs_replan(t):
            ctrl.replan(t)
            self.bid_path.extend({'time': t, 'type': k, 'bid': ctrl.bid(k, t)}
                                 for k in range(ctrl.decomposition.n_types))
        nominal = ctrl.bid(j, t)
        if math.isnan(nominal):
            return None
        if self.sigma > 0:
            # negative draws are submitted as they are and lose
            return nominal + self.sigma * self.rng.standard_normal()
        return nominal

    def win(self, t, j, price):
        '''
        Allocate a won item
        :return: index of the receiving contract, None when the item is discarded
        '''
        probs = self.controller.allocation(j, t)
        if probs.sum() <= 0:
            logger.debug('type %d item won at t=%.4f has no live contract, discarded', j, t)
            return None
        i = int(self.rng.choice(len(probs), p=probs))
        if not self.controller.record_win(i, t):
            return None
        return i
