# --- models.py ---
import os
import shutil
import uuid
import logging

from django.conf import settings
from django.contrib.auth import get_user_model
from django.db import models

from .config import SCENARIOS

logger = logging.getLogger(__name__)

User = get_user_model()


def run_report_dir(run_id):
    """
    Directory holding the files of one run:
    HEAVYTAIL_REPORTS_DIR/runs/<uuid>/
    """
    return os.path.join(settings.HEAVYTAIL_REPORTS_DIR, 'runs', str(run_id))


class ScenarioRun(models.Model):
    """
    One scenario run requested through the API, executed by a Celery worker.
    """
    STATUS_CHOICES = [
        ('PENDING', 'Pending'),
        ('PROCESSING', 'Processing'),
        ('COMPLETED', 'Completed'),
        ('FAILED', 'Failed'),
    ]

    SCENARIO_CHOICES = [(name, name.replace('_', ' ').capitalize()) for name in SCENARIOS]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    user = models.ForeignKey(User, on_delete=models.SET_NULL, null=True, blank=True, related_name='scenario_runs')

    scenario = models.CharField(
        max_length=50,
        choices=SCENARIO_CHOICES,
        help_text="The scenario named by the config."
    )
    config = models.JSONField(help_text="The experiment config tree as posted.")
    # seeds span the full unsigned 64-bit range
    seed = models.DecimalField(max_digits=20, decimal_places=0, default=0)

    status = models.CharField(
        max_length=20,
        choices=STATUS_CHOICES,
        default='PENDING',
        help_text="Current status of the run."
    )
    passed = models.BooleanField(
        null=True, blank=True,
        help_text="Whether every acceptance band held; empty until the run completes."
    )
    output_url = models.CharField(
        max_length=500,
        null=True, blank=True,
        help_text="URL of the zipped report."
    )
    error_message = models.TextField(
        null=True, blank=True,
        help_text="Detailed message if the run failed."
    )

    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        verbose_name = "Scenario Run"
        verbose_name_plural = "Scenario Runs"
        db_table = 'experiment_scenario_runs'
        ordering = ['-created_at']

    def __str__(self):
        return f"Scenario Run {self.id} | Scenario: {self.scenario} | Status: {self.status}"

    def report_dir(self):
        return run_report_dir(self.id)

    def delete(self, *args, **kwargs):
        """
        Deletes the run's report directory when the run is deleted.
        """
        report_dir = self.report_dir()
        if os.path.isdir(report_dir):
            try:
                shutil.rmtree(report_dir)
                logger.info(f"Deleted report directory: {report_dir}")
            except OSError as e:
                logger.error(f"Error deleting report directory for run {self.id}: {e}", exc_info=True)
        super().delete(*args, **kwargs)
