"""
Settings for running automated tests.
"""

from .base import *  # noqa: F401,F403
from .base import LCRANK, LOGGING

DEBUG = False
SECRET_KEY = "test-key"

# ---------- Speed Optimizations ----------
# `full` profile so the reduced STEPS / PAIRS_PER_STEP below are what tests train with
LCRANK = {
    **LCRANK,
    "SEED": 42,
    "STEPS": 40,
    "PAIRS_PER_STEP": 16,
    "LEARNING_RATE": 1e-2,
    "PROFILE": "full",
}

LOGGING = {**LOGGING, "loggers": {"apps": {"handlers": ["console"], "level": "WARNING"}}}
