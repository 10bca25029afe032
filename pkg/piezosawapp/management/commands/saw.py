"""
Django management command running the SAW delay-line pipelines
"""

from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from piezosawapp.pipelines import EXIT_OK, EXIT_VALIDATION, SUBCOMMANDS, USAGE, run_subcommand
from piezosawapp.run_config import RunConfigError, load_run_config


class Command(BaseCommand):
    help = 'Simulate, gate and fit SAW delay-line sweeps, predict qubit Q and solve junction charge profiles'

    def add_arguments(self, parser):
        parser.add_argument(
            'subcommand',
            help=f"One of: {', '.join(SUBCOMMANDS)}",
        )
        parser.add_argument(
            '--config',
            help='KEY=value run configuration file',
        )
        parser.add_argument(
            '--set',
            action='append',
            default=[],
            metavar='KEY=VALUE',
            help='Override one configuration key (repeatable)',
        )
        parser.add_argument(
            '--output-dir',
            help='Directory for CSV/Touchstone artifacts (default: PIEZOSAW_OUTPUT_DIR)',
        )

    def handle(self, *args, **options):
        name = options['subcommand']
        if name not in SUBCOMMANDS:
            self.stderr.write(f"❌ Unknown subcommand '{name}'")
            raise CommandError(USAGE, returncode=EXIT_VALIDATION)

        try:
            config = load_run_config(path=options.get('config'), overrides=options['set'])
        except RunConfigError as e:
            raise CommandError(f"Invalid run configuration: {e}", returncode=EXIT_VALIDATION)

        output_dir = Path(options.get('output_dir') or settings.PIEZOSAW_OUTPUT_DIR)
        self.stdout.write(f"🚀 Running {name} (artifacts in {output_dir})...")

        result = run_subcommand(name, config, output_dir)
        for line in result.summary:
            self.stdout.write(f"📊 {line}")
        if result.status != EXIT_OK:
            raise CommandError(f"{name} failed: {result.error}", returncode=result.status)

        self.stdout.write(f"✅ {name} finished: {len(result.artifacts)} artifact(s) written")
