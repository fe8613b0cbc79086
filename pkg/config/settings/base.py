"""
Base settings for lcrank-bench (Django 5.x, no web surface)
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# ---------- Paths ----------
BASE_DIR = Path(__file__).resolve().parent.parent.parent  # <project-root>

# ---------- Env ----------
env_path = BASE_DIR / ".env"
if env_path.exists():
    load_dotenv(env_path, override=True)

# ---------- Core ----------
SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "insecure-key")
DEBUG = os.getenv("DJANGO_DEBUG", "False") == "True"
ALLOWED_HOSTS: list[str] = []

LANGUAGE_CODE = "en-us"
TIME_ZONE = os.getenv("TIME_ZONE", "UTC")
USE_I18N = False
USE_TZ = True

# ---------- Apps ----------
INSTALLED_APPS = [
    "apps.tensors",
    "apps.corpus",
    "apps.ranker",
    "apps.termination",
    "apps.search",
    "apps.core",
]

# ---------- Templates (SVG charts) ----------
TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {"context_processors": []},
    },
]

# ---------- Database ----------
# Nothing is persisted; an in-memory default keeps `check` and the test runner quiet.
DATABASES = {"default": {"ENGINE": "django.db.backends.sqlite3", "NAME": ":memory:"}}

# ---------- LCRankNet ----------
LCRANK = {
    "SEED": int(os.getenv("LCRANK_SEED", "42")),
    "DELTA": float(os.getenv("LCRANK_DELTA", "0.45")),
    "CADENCE": int(os.getenv("LCRANK_CADENCE", "3")),
    "ALPHA": float(os.getenv("LCRANK_ALPHA", "0.8")),
    "STEPS": int(os.getenv("LCRANK_STEPS", "2000")),
    "PAIRS_PER_STEP": int(os.getenv("LCRANK_PAIRS_PER_STEP", "256")),
    "LEARNING_RATE": float(os.getenv("LCRANK_LEARNING_RATE", "1e-3")),
    # `acceptance` caps steps and pairs per step for laptop-scale protocol runs
    "PROFILE": os.getenv("LCRANK_PROFILE", "acceptance"),
    "RESULTS_DIR": Path(os.getenv("LCRANK_RESULTS_DIR", BASE_DIR / "results")),
}

# ---------- Logging ----------
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "simple"},
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        "apps": {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False},
    },
}
