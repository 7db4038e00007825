# experiments/urls.py

from django.urls import path
from .views import (
    ScenarioRunListCreateView,
    ScenarioRunStatusView,
    ScenarioRunDownloadView,
)

urlpatterns = [
    # Listing runs and starting a new one
    # GET, POST to /api/experiments/runs/
    path('runs/', ScenarioRunListCreateView.as_view(), name='experiments_run_list'),

    # Endpoint for checking the status of a run
    # GET to /api/experiments/runs/<uuid:id>/status/
    path('runs/<uuid:id>/status/', ScenarioRunStatusView.as_view(), name='experiments_run_status'),

    # Endpoint for downloading the zipped report
    # GET to /api/experiments/runs/<uuid:job_id>/download/
    path('runs/<uuid:job_id>/download/', ScenarioRunDownloadView.as_view(), name='experiments_run_download'),
]
