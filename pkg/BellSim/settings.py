"""
Django settings for BellSim project.

BellSim has no web surface: Django provides settings, logging configuration,
management commands and the test runner. Celery (configured below with the
CELERY_ namespace) executes Monte Carlo shards.
"""

from pathlib import Path
import os

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')


def env_bool(name, default):
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


VERSION = '0.1.0'

# Not used for anything security related: no sessions, no HTTP.
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'bellsim-local-only')

DEBUG = env_bool('DEBUG', False)


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'Chsh',
]

REST_FRAMEWORK = {
    'COERCE_DECIMAL_TO_STRING': False,
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Toolkit configuration

BELLSIM = {
    'DEFAULT_SEED': int(os.getenv('BELLSIM_SEED', '0')),
    'QUADRATURE_RESOLUTION': int(os.getenv('BELLSIM_QUADRATURE_RESOLUTION', '100000')),
    'DEFAULT_TRIALS': int(os.getenv('BELLSIM_TRIALS', '100000')),
    'DEFAULT_SHARDS': int(os.getenv('BELLSIM_SHARDS', '1')),
    # 'celery' dispatches shards as tasks, 'inline' loops in-process
    'SHARD_BACKEND': os.getenv('BELLSIM_SHARD_BACKEND', 'celery'),
    'SELF_CHECK_Z': float(os.getenv('BELLSIM_SELF_CHECK_Z', '5.0')),
    'BUILD_ID': os.getenv('BELLSIM_BUILD_ID', f'bellsim {VERSION}'),
}


# Celery

CELERY_BROKER_URL = os.getenv('CELERY_BROKER_URL', 'redis://localhost:6379/0')
CELERY_RESULT_BACKEND = os.getenv('CELERY_RESULT_BACKEND', 'redis://localhost:6379/0')
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_ACCEPT_CONTENT = ['json']
# Eager by default so the CLI needs no broker; set to false with a worker running.
CELERY_TASK_ALWAYS_EAGER = env_bool('CELERY_TASK_ALWAYS_EAGER', True)
CELERY_TASK_EAGER_PROPAGATES = True


# Logging
# Reports go to stdout; everything here goes to stderr.

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'Chsh': {
            'handlers': ['console'],
            'level': os.getenv('BELLSIM_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
        'celery': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
    },
}
