DEBUG = False

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.mysql",
        "NAME": "library",
        "USER": "librarian",
        "PASSWORD": "Bq7ZmN4xeW",
        "HOST": "47.106.1.12",
        "PORT": "3306",
    }
}
