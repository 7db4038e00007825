# experiments/tests/test_cli.py

import json
import os
import tempfile

from click.testing import CliRunner
from django.conf import settings
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase

from experiments.cli import EXIT_CONFIG, EXIT_OK, EXIT_VERIFY_FAILED, cli, cli_main

CONFIGS_DIR = os.path.join(settings.BASE_DIR, 'configs')

SMALL_OPTIMA = """
scenario = "multiple_optima"
seed = 1
n_list = [20, 40]
samples_per_n = 1000
batch_size = 500
limit_samples = 5000

[pos]
c = 1.0
alpha = 2.0

[neg]
c = 1.0
beta = 2.0
"""

FLAT_CORRIDOR = """
scenario = "corridor"

[corridor]
knots = [0.0, 1.0]
lower = [-1.0, -1.0]
upper = [1.0, 1.0]
"""


def config_file(folder, name, text):
    path = os.path.join(folder, name)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(text)
    return path


class ExitCodeTests(SimpleTestCase):

    def test_unknown_command_is_a_usage_error(self):
        self.assertEqual(cli_main(['frobnicate']), 2)

    def test_missing_config_option(self):
        self.assertEqual(cli_main(['corridor']), 2)

    def test_bad_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = config_file(tmp, 'bad.toml', 'scenario = "corridor"\ncolour = "red"\n')
            self.assertEqual(cli_main(['corridor', '--config', path]), EXIT_CONFIG)
            self.assertEqual(cli_main(['corridor', '--config', os.path.join(tmp, 'absent.toml')]), EXIT_CONFIG)

    def test_command_needs_its_table(self):
        self.assertEqual(cli_main(['estimate-c', '--config', os.path.join(CONFIGS_DIR, 'flat.toml')]), EXIT_CONFIG)

    def test_success(self):
        self.assertEqual(cli_main(['corridor', '--config', os.path.join(CONFIGS_DIR, 'flat.toml')]), EXIT_OK)


class CorridorCommandTests(SimpleTestCase):

    def test_flat_corridor_needs_no_jumps(self):
        result = CliRunner().invoke(cli, ['corridor', '--config', os.path.join(CONFIGS_DIR, 'flat.toml')])
        self.assertEqual(result.exit_code, 0, result.output)
        record = json.loads(result.output)
        self.assertEqual((record['J'], record['K']), (0, 0))
        self.assertEqual(record['breakpoints'], [])

    def test_up_then_down(self):
        result = CliRunner().invoke(cli, ['corridor', '--config', os.path.join(CONFIGS_DIR, 'up_then_down.toml')])
        self.assertEqual(result.exit_code, 0, result.output)
        record = json.loads(result.output)
        self.assertEqual((record['J'], record['K']), (1, 2))
        self.assertEqual(len(record['levels']), 3)


class RunCommandTests(SimpleTestCase):

    def test_reruns_are_byte_identical(self):
        runner = CliRunner()
        with tempfile.TemporaryDirectory() as tmp:
            path = config_file(tmp, 'optima.toml', SMALL_OPTIMA)
            outputs = []
            for name in ('first', 'second'):
                out = os.path.join(tmp, name)
                result = runner.invoke(cli, ['run', '--config', path, '--seed', '7', '--out', out])
                self.assertEqual(result.exit_code, 0, result.output)
                self.assertIn('multiple_optima:', result.output)
                with open(os.path.join(out, 'report.json'), 'rb') as report, \
                        open(os.path.join(out, 'ratios.csv'), 'rb') as ratios:
                    outputs.append((report.read(), ratios.read()))
            self.assertEqual(outputs[0], outputs[1])
            self.assertEqual(json.loads(outputs[0][0])['config']['seed'], 7)

    def test_seed_must_fit_in_64_bits(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = config_file(tmp, 'optima.toml', SMALL_OPTIMA)
            self.assertEqual(cli_main(['run', '--config', path, '--seed', str(2**64)]), 2)


class VerifyCommandTests(SimpleTestCase):

    def test_passing_scenario(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = config_file(tmp, 'flat.toml', FLAT_CORRIDOR)
            result = CliRunner().invoke(cli, ['verify', '--config', path, '--out', os.path.join(tmp, 'out')])
            self.assertEqual(result.exit_code, EXIT_OK, result.output)
            self.assertIn('corridor: PASS', result.output)
            self.assertTrue(os.path.isfile(os.path.join(tmp, 'out', 'corridor', 'report.json')))

    def test_failing_suite_exits_with_three(self):
        with tempfile.TemporaryDirectory() as tmp:
            config_file(tmp, 'flat.toml', FLAT_CORRIDOR)
            config_file(tmp, 'optima.toml', SMALL_OPTIMA + '\n[bands]\nratio_hi = 0.0\n')
            suite = config_file(tmp, 'suite.toml', '[suite]\nconfigs = ["flat.toml", "optima.toml"]\n')
            out = os.path.join(tmp, 'out')
            self.assertEqual(cli_main(['verify', '--config', suite, '--out', out]), EXIT_VERIFY_FAILED)
            self.assertTrue(os.path.isdir(os.path.join(out, 'corridor')))
            with open(os.path.join(out, 'multiple_optima', 'report.json'), encoding='utf-8') as handle:
                record = json.load(handle)
            self.assertFalse(record['checks']['ratio_hi'])
            self.assertFalse(record['passed'])


class EstimateAndSimulateTests(SimpleTestCase):

    def test_estimate_c(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = CliRunner().invoke(cli, [
                'estimate-c', '--config', os.path.join(CONFIGS_DIR, 'estimate_c.toml'),
                '--samples', '50000', '--out', tmp,
            ])
            self.assertEqual(result.exit_code, 0, result.output)
            record = json.loads(result.output)
            self.assertEqual(record['n_samples'], 50_000)
            self.assertLess(abs(record['value'] - 2.0), 5 * record['stderr'])
            with open(os.path.join(tmp, 'estimate.json'), encoding='utf-8') as handle:
                self.assertEqual(json.load(handle), record)

    def test_simulate_dumps_paths(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = config_file(tmp, 'optima.toml', SMALL_OPTIMA)
            out = os.path.join(tmp, 'out')
            result = CliRunner().invoke(cli, ['simulate', '--config', path, '--samples', '3', '--out', out,
                                              '--dump-paths'])
            self.assertEqual(result.exit_code, 0, result.output)
            record = json.loads(result.output)
            self.assertEqual(sorted(record['functionals']), ['20', '40'])
            self.assertEqual(record['functionals']['20']['samples'], 3)
            self.assertEqual(sorted(os.listdir(os.path.join(out, 'paths', 'n20'))),
                             ['path_000000.csv', 'path_000001.csv', 'path_000002.csv'])


class ManagementCommandTests(SimpleTestCase):

    def test_call_command(self):
        call_command('heavytail', 'corridor', '--config', os.path.join(CONFIGS_DIR, 'flat.toml'))

    def test_failures_raise_command_error(self):
        with self.assertRaises(CommandError) as caught:
            call_command('heavytail', 'corridor', '--config', os.path.join(CONFIGS_DIR, 'absent.toml'))
        self.assertEqual(caught.exception.returncode, EXIT_CONFIG)
