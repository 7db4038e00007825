import argparse

from django.core.management.base import BaseCommand, CommandError

from experiments.cli import cli_main


class Command(BaseCommand):
    help = "Heavy-tail experiments CLI: simulate, estimate-c, corridor, run, verify."

    def add_arguments(self, parser):
        parser.add_argument('args', nargs=argparse.REMAINDER, help="A heavytail command and its options.")

    def handle(self, *args, **options):
        code = cli_main(list(args))
        if code:
            raise CommandError(f"heavytail exited with status {code}", returncode=code)
