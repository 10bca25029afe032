import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "piezosaw.settings")
django.setup()
