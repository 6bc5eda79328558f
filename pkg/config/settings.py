"""
Django settings for the pulseclust project.

Generated by 'django-admin startproject' using Django 5.2.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""
import dj_database_url  # Pour parser l'URL de la BD en production
import environ  # Pour gérer les variables d'environnement
from corsheaders.defaults import default_methods, default_headers
from pathlib import Path
from datetime import timedelta

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialisation de django-environ
env = environ.Env(
    # Définir le type et la valeur par défaut si la variable n'est pas trouvée
    DEBUG=(bool, True),
    # Clé locale par défaut à NE PAS UTILISER en production
    SECRET_KEY=(str, "django-insecure-pulseclust-local-only-0c9f1d2e7b6a"),
    PULSECLUST_DATA_DIR=(str, str(BASE_DIR / "data")),
    PULSECLUST_OUTPUT_DIR=(str, str(BASE_DIR / "runs")),
    PULSECLUST_WORKERS=(int, 4),
    PULSECLUST_LOG_LEVEL=(str, "INFO"),
    PULSECLUST_SLOW_TESTS=(bool, False),
)


# -----------------
# 1. Variables de Sécurité et Environnement
# -----------------
SECRET_KEY = env("SECRET_KEY")
DEBUG = env("DEBUG")

if not DEBUG:
    ALLOWED_HOSTS = env.list("ALLOWED_HOSTS", default=["localhost"])
    CSRF_TRUSTED_ORIGINS = env.list("CSRF_TRUSTED_ORIGINS", default=[])
    SECURE_SSL_REDIRECT = True
    SECURE_PROXY_SSL_HEADER = ("HTTP_X_FORWARDED_PROTO", "https")
else:
    # En développement, on autorise tout
    ALLOWED_HOSTS = ["*"]


# Application definition

INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",
    "corsheaders",
    "rest_framework",
    "rest_framework_simplejwt",
    "drf_spectacular",
    "drf_spectacular_sidecar",
    "waveforms",
    "clustering",
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    # Whitenoise DOIT être après SecurityMiddleware
    "whitenoise.middleware.WhiteNoiseMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    # CORS DOIT être avant CommonMiddleware
    "corsheaders.middleware.CorsMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

ROOT_URLCONF = "config.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]

WSGI_APPLICATION = "config.wsgi.application"


# -----------------
# 2. Base de Données
# -----------------
if not DEBUG:
    # En production, on lit DATABASE_URL (PostgreSQL)
    DATABASES = {
        "default": dj_database_url.config(
            conn_max_age=600,
            ssl_require=True,
        )
    }
else:
    # En développement, SQLite suffit pour le catalogue des runs
    DATABASES = {
        "default": env.db("DATABASE_URL", default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}")
    }

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Password validation
# https://docs.djangoproject.com/en/5.2/ref/settings/#auth-password-validators
AUTH_PASSWORD_VALIDATORS = [
    {
        "NAME": "django.contrib.auth.password_validation.UserAttributeSimilarityValidator",
    },
    {
        "NAME": "django.contrib.auth.password_validation.MinimumLengthValidator",
    },
    {
        "NAME": "django.contrib.auth.password_validation.CommonPasswordValidator",
    },
    {
        "NAME": "django.contrib.auth.password_validation.NumericPasswordValidator",
    },
]


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = True
USE_TZ = True


# -----------------
# 3. Fichiers Statiques (Static Files)
# -----------------
STATIC_ROOT = BASE_DIR / "staticfiles"
STATIC_URL = "/static/"

if not DEBUG:
    STATICFILES_STORAGE = "whitenoise.storage.CompressedManifestStaticFilesStorage"


# -----------------
# 4. Pulseclust (données, runs, parallélisme)
# -----------------
PULSECLUST = {
    "DATA_DIR": Path(env("PULSECLUST_DATA_DIR")),
    "OUTPUT_DIR": Path(env("PULSECLUST_OUTPUT_DIR")),
    # Nombre de threads pour la synthèse des échantillons
    "WORKERS": env("PULSECLUST_WORKERS"),
    # Active les tests d'acceptation longs (entraînement complet, datasets pleine échelle)
    "SLOW_TESTS": env("PULSECLUST_SLOW_TESTS"),
}


# -----------------
# 5. Journalisation
# -----------------
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "console": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "console",
        },
    },
    "loggers": {
        "waveforms": {
            "handlers": ["console"],
            "level": env("PULSECLUST_LOG_LEVEL"),
            "propagate": False,
        },
        "clustering": {
            "handlers": ["console"],
            "level": env("PULSECLUST_LOG_LEVEL"),
            "propagate": False,
        },
    },
}


# REST Framework, JWT, CORS, SPECTACULAR

REST_FRAMEWORK = {
    "DEFAULT_PAGINATION_CLASS": "rest_framework.pagination.LimitOffsetPagination",
    "PAGE_SIZE": 10,
    "DEFAULT_AUTHENTICATION_CLASSES": (
        "rest_framework_simplejwt.authentication.JWTAuthentication",
        "rest_framework.authentication.SessionAuthentication",
    ),
    "DEFAULT_PERMISSION_CLASSES": ("rest_framework.permissions.IsAuthenticated",),
    "DEFAULT_SCHEMA_CLASS": "drf_spectacular.openapi.AutoSchema",
}

SIMPLE_JWT = {
    "ACCESS_TOKEN_LIFETIME": timedelta(minutes=360),
    "REFRESH_TOKEN_LIFETIME": timedelta(days=1),
}

# Le catalogue est consulté depuis des notebooks et tableaux de bord internes
CORS_ALLOWED_ORIGINS = env.list("CORS_ALLOWED_ORIGINS", default=[])
CORS_ALLOW_METHODS = [
    *default_methods,
]
CORS_ALLOW_HEADERS = [
    *default_headers,
]

SPECTACULAR_SETTINGS = {
    "TITLE": "Pulseclust",
    "DESCRIPTION": "Catalogue des datasets radar et des runs de clustering.",
    "VERSION": "1.0.0",
}
