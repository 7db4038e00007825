# experiments/tasks.py

import os
import datetime
import logging
import zipfile

from celery import shared_task
from django.conf import settings
from django.urls import reverse

from .config import ConfigError, validate_tree
from .models import ScenarioRun
from .reports import RATIOS_FILE, REPORT_FILE
from .scenarios import run_scenario

logger = logging.getLogger(__name__)

REPORT_ARCHIVE = 'report.zip'


def write_archive(report_dir):
    """Zip report.json and ratios.csv of one run next to them."""
    archive_path = os.path.join(report_dir, REPORT_ARCHIVE)
    with zipfile.ZipFile(archive_path, 'w', zipfile.ZIP_DEFLATED) as archive:
        for name in (REPORT_FILE, RATIOS_FILE):
            archive.write(os.path.join(report_dir, name), arcname=name)
    return archive_path


@shared_task(bind=True)
def run_scenario_task(self, job_id):
    """
    Celery task running the scenario of one ScenarioRun and storing its zipped report.
    """
    job = None
    try:
        job = ScenarioRun.objects.get(id=job_id)
        job.status = 'PROCESSING'
        job.save()
        logger.info(f"Task {self.request.id}: Starting scenario {job.scenario} for run ID: {job_id}")

        cfg = validate_tree(job.config).with_overrides(output_dir=job.report_dir())
        report = run_scenario(cfg)
        report.write(cfg.output_dir)
        write_archive(cfg.output_dir)

        job.passed = report.passed
        job.output_url = reverse('experiments_run_download', kwargs={'job_id': job.id})
        job.status = 'COMPLETED'
        job.save()
        logger.info(f"Task {self.request.id}: Run {job_id} status updated to COMPLETED (passed={report.passed}).")

    except ScenarioRun.DoesNotExist:
        logger.error(f"Task {self.request.id}: ScenarioRun with ID {job_id} does not exist. Cannot update run status.", exc_info=True)
    except ConfigError as e:
        logger.error(f"Task {self.request.id}: Invalid config for run {job_id}: {e}", exc_info=True)
        if job:
            job.status = 'FAILED'
            job.error_message = f"Run failed: {e}"
            job.save()
    except Exception as e:
        logger.error(f"Task {self.request.id}: An unexpected error occurred for run {job_id}: {e}", exc_info=True)
        if job:
            job.status = 'FAILED'
            job.error_message = f"Run failed due to an internal error: {str(e)}"
            job.save()


@shared_task
def cleanup_old_reports():
    """Delete report files older than HEAVYTAIL_REPORT_RETENTION_DAYS, then empty directories."""
    reports_path = settings.HEAVYTAIL_REPORTS_DIR
    threshold = datetime.datetime.now() - datetime.timedelta(days=settings.HEAVYTAIL_REPORT_RETENTION_DAYS)

    deleted = 0
    for dirpath, _, filenames in os.walk(reports_path, topdown=False):
        for file in filenames:
            file_path = os.path.join(dirpath, file)
            if os.path.isfile(file_path):
                modified_time = datetime.datetime.fromtimestamp(os.path.getmtime(file_path))
                if modified_time < threshold:
                    os.remove(file_path)
                    deleted += 1
        if dirpath != reports_path and not os.listdir(dirpath):
            os.rmdir(dirpath)

    logger.info(f"Deleted {deleted} report files older than {settings.HEAVYTAIL_REPORT_RETENTION_DAYS} days")
    return deleted
