"""
Django settings for piezosaw project.

Generated by 'django-admin startproject' using Django 5.2.6 and trimmed down to
what a command-line toolkit needs: no database, no URL routing, no templates.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env file
load_dotenv(BASE_DIR / '.env')


# SECURITY WARNING: the toolkit never serves requests, but Django still wants a key
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-piezosaw-local-runs-only')

DEBUG = os.getenv('DJANGO_DEBUG', 'false').lower() == 'true'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'piezosawapp',
]

# Sweeps, traces and profiles are files, never database rows
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging
# Only the verbosity comes from the environment; run parameters live in the
# run configuration document passed to `manage.py saw`.

PIEZOSAW_LOG_LEVEL = os.getenv('PIEZOSAW_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'piezosawapp': {
            'handlers': ['console'],
            'level': PIEZOSAW_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Artifacts written by `manage.py saw` when no --output-dir is given
PIEZOSAW_OUTPUT_DIR = Path(os.getenv('PIEZOSAW_OUTPUT_DIR', BASE_DIR / 'runs'))
