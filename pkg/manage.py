#!/usr/bin/env python
"""
Command-line entry point for the piezosaw toolkit.

    python manage.py saw simulate --config run.env
    python manage.py saw extract-k2 --set s21_res=-99dB
    python manage.py test piezosawapp
"""
import os
import sys


def main():
    """Run a piezosaw management command."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'piezosaw.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the requirements "
            "(pip install -r requirements.txt) inside the environment "
            "used to run piezosaw."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
