# config/settings/dev.py
from .base import *  # noqa: F401,F403
from .base import LCRANK, LOGGING

DEBUG = True

LOGGING = {
    **LOGGING,
    "loggers": {"apps": {"handlers": ["console"], "level": "DEBUG", "propagate": False}},
}

# quicker rankers while iterating
LCRANK = {**LCRANK, "STEPS": 300, "PAIRS_PER_STEP": 64}
