# experiments/tests/test_api.py

import io
import os
import shutil
import tempfile
import time
import uuid
import zipfile

from django.conf import settings
from django.contrib.auth import get_user_model
from django.test import override_settings
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase

from experiments.models import ScenarioRun
from experiments.tasks import cleanup_old_reports, run_scenario_task

FLAT_CORRIDOR = {
    'scenario': 'corridor',
    'seed': 4,
    'corridor': {'knots': [0.0, 1.0], 'lower': [-1.0, -1.0], 'upper': [1.0, 1.0]},
}

SMALL_OPTIMA = {
    'scenario': 'multiple_optima',
    'seed': 2,
    'n_list': [20],
    'samples_per_n': 500,
    'limit_samples': 2000,
    'pos': {'c': 1.0, 'alpha': 2.0},
    'neg': {'c': 1.0, 'beta': 2.0},
}


class ReportsDirMixin:

    def setUp(self):
        super().setUp()
        self.reports_dir = tempfile.mkdtemp()
        self.override = override_settings(HEAVYTAIL_REPORTS_DIR=self.reports_dir)
        self.override.enable()

    def tearDown(self):
        self.override.disable()
        shutil.rmtree(self.reports_dir, ignore_errors=True)
        super().tearDown()


class ScenarioRunApiTests(ReportsDirMixin, APITestCase):

    def post_run(self, config):
        return self.client.post(reverse('experiments_run_list'), {'config': config}, format='json')

    def test_run_completes_and_report_downloads(self):
        response = self.post_run(FLAT_CORRIDOR)
        self.assertEqual(response.status_code, status.HTTP_202_ACCEPTED, response.data)
        self.assertEqual(response.data['scenario'], 'corridor')
        run_id = response.data['id']

        response = self.client.get(reverse('experiments_run_status', kwargs={'id': run_id}))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['status'], 'COMPLETED', response.data['error_message'])
        self.assertTrue(response.data['passed'])
        download_url = reverse('experiments_run_download', kwargs={'job_id': run_id})
        self.assertEqual(response.data['output_url'], download_url)

        response = self.client.get(download_url)
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response['Content-Type'], 'application/zip')
        self.assertIn(f'corridor_{run_id}.zip', response['Content-Disposition'])
        payload = b''.join(response.streaming_content)
        response.close()
        with zipfile.ZipFile(io.BytesIO(payload)) as archive:
            self.assertEqual(sorted(archive.namelist()), ['ratios.csv', 'report.json'])

    @override_settings(HEAVYTAIL_ANON_RUN_LIMIT=10)
    def test_invalid_config(self):
        response = self.post_run({'scenario': 'corridor'})
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('config', response.data)

        response = self.post_run({**FLAT_CORRIDOR, 'output_dir': '/etc'})
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)

        response = self.post_run({'corridor': FLAT_CORRIDOR['corridor']})
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertEqual(ScenarioRun.objects.count(), 0)

    @override_settings(HEAVYTAIL_ANON_RUN_LIMIT=2)
    def test_anonymous_run_limit(self):
        for _ in range(2):
            self.assertEqual(self.post_run(FLAT_CORRIDOR).status_code, status.HTTP_202_ACCEPTED)
        response = self.post_run(FLAT_CORRIDOR)
        self.assertEqual(response.status_code, status.HTTP_403_FORBIDDEN)
        self.assertEqual(response.data['code'], 'run_limit_exceeded')
        # listing does not count against the allowance
        self.assertEqual(self.client.get(reverse('experiments_run_list')).status_code, status.HTTP_200_OK)

    @override_settings(HEAVYTAIL_ANON_RUN_LIMIT=0)
    def test_signed_in_users_have_no_limit(self):
        user = get_user_model().objects.create_user(username='analyst', password='not-a-real-password')
        self.client.force_authenticate(user=user)
        response = self.post_run(FLAT_CORRIDOR)
        self.assertEqual(response.status_code, status.HTTP_202_ACCEPTED)
        self.assertEqual(ScenarioRun.objects.get(id=response.data['id']).user, user)

    def test_list_filters_by_scenario(self):
        self.post_run(FLAT_CORRIDOR)
        self.post_run(SMALL_OPTIMA)
        response = self.client.get(reverse('experiments_run_list'), {'scenario': 'multiple_optima'})
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 1)
        self.assertEqual(response.data['results'][0]['scenario'], 'multiple_optima')

    def test_unknown_run(self):
        missing = uuid.uuid4()
        response = self.client.get(reverse('experiments_run_status', kwargs={'id': missing}))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)
        self.assertEqual(response.data['error'], 'Run not found.')
        response = self.client.get(reverse('experiments_run_download', kwargs={'job_id': missing}))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)

    def test_reports_are_served_only_through_download(self):
        self.assertEqual(settings.MEDIA_URL, '')
        self.post_run(FLAT_CORRIDOR)
        self.assertEqual(self.client.get('/media/reports/').status_code, status.HTTP_404_NOT_FOUND)

    def test_pending_run_has_nothing_to_download(self):
        run = ScenarioRun.objects.create(scenario='corridor', config=FLAT_CORRIDOR, seed=4)
        response = self.client.get(reverse('experiments_run_download', kwargs={'job_id': run.id}))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)


class ScenarioRunTaskTests(ReportsDirMixin, APITestCase):

    def test_failed_run_records_the_error(self):
        run = ScenarioRun.objects.create(scenario='corridor', config={'scenario': 'corridor'}, seed=0)
        run_scenario_task.apply(kwargs={'job_id': run.id})
        run.refresh_from_db()
        self.assertEqual(run.status, 'FAILED')
        self.assertIn('corridor', run.error_message)
        self.assertIsNone(run.passed)

    def test_missing_run_is_logged(self):
        with self.assertLogs('experiments.tasks', level='ERROR'):
            run_scenario_task.apply(kwargs={'job_id': uuid.uuid4()})

    def test_delete_removes_the_report_directory(self):
        run = ScenarioRun.objects.create(scenario='corridor', config=FLAT_CORRIDOR, seed=4)
        run_scenario_task.apply(kwargs={'job_id': run.id})
        run.refresh_from_db()
        self.assertEqual(run.status, 'COMPLETED')
        self.assertTrue(os.path.isdir(run.report_dir()))
        run.delete()
        self.assertFalse(os.path.exists(run.report_dir()))

    @override_settings(HEAVYTAIL_REPORT_RETENTION_DAYS=7)
    def test_cleanup_old_reports(self):
        old_dir = os.path.join(self.reports_dir, 'runs', 'old')
        os.makedirs(old_dir)
        old_file = os.path.join(old_dir, 'report.json')
        new_file = os.path.join(self.reports_dir, 'fresh.json')
        for path in (old_file, new_file):
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write('{}\n')
        ten_days_ago = time.time() - 10 * 24 * 3600
        os.utime(old_file, (ten_days_ago, ten_days_ago))

        self.assertEqual(cleanup_old_reports(), 1)
        self.assertFalse(os.path.exists(old_dir))
        self.assertTrue(os.path.exists(new_file))
