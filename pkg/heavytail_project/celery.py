import os
from celery import Celery
from celery.schedules import crontab

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'heavytail_project.settings')

app = Celery('heavytail_project')
app.config_from_object('django.conf:settings', namespace='CELERY')
app.autodiscover_tasks()

app.conf.beat_schedule = {
    'cleanup-old-reports-daily': {
        'task': 'experiments.tasks.cleanup_old_reports',
        'schedule': crontab(hour=0, minute=0),  # every day at midnight
    },
}
