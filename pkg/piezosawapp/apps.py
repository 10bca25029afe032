from django.apps import AppConfig


class PiezosawappConfig(AppConfig):
    name = 'piezosawapp'
    verbose_name = 'Interface-piezoelectric SAW delay-line toolkit'
