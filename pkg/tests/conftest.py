import numpy as np
import pytest

from RTBContracts.scenario import SyntheticMarketSpec, campaign_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope='session')
def campaign():
    # coarser bid grid keeps the session fixture quick
    return campaign_scenario(SyntheticMarketSpec(resolution=256))
