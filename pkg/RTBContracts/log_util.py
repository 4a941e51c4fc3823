# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

import logging
import os

LOG_LEVEL_ENV = 'RTB_LOG_LEVEL'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def resolve_level(level=None, default='WARNING'):
    '''
    Resolve a logging level from an explicit value or the environment
    :param level: int or level name, takes precedence when given
    :param default: level name used when neither level nor env var is set
    :return: numeric logging level
    '''
    if level is None:
        level = os.environ.get(LOG_LEVEL_ENV, default)
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    if not isinstance(value, int):
        raise ValueError('unknown log level %r' % level)
    return value


def setup_logging(level=None, default='WARNING'):
    level = resolve_level(level, default)
    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    root.setLevel(level)
    return level


def progress_disabled():
    # tqdm bars only when someone is watching INFO output
    return logging.getLogger().getEffectiveLevel() > logging.INFO
