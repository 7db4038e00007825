import os

from django.http import FileResponse, Http404
from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import generics, status
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from .models import ScenarioRun
from .permissions import HasRunAllowance
from .serializers import ScenarioRunSerializer
from .tasks import REPORT_ARCHIVE, run_scenario_task


class ScenarioRunListCreateView(generics.ListCreateAPIView):
    serializer_class = ScenarioRunSerializer
    permission_classes = [HasRunAllowance]
    filter_backends = [DjangoFilterBackend]
    filterset_fields = ['scenario', 'status']

    def get_queryset(self):
        # Signed-in users see their own runs; anonymous users see anonymous runs
        if self.request.user.is_authenticated:
            return ScenarioRun.objects.filter(user=self.request.user)
        return ScenarioRun.objects.filter(user__isnull=True)

    def post(self, request, *args, **kwargs):
        serializer = self.get_serializer(data=request.data)

        if serializer.is_valid():
            run = serializer.save(user=request.user if request.user.is_authenticated else None)
            run_scenario_task.delay(job_id=run.id)
            return Response(serializer.data, status=status.HTTP_202_ACCEPTED)
        else:
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)


class ScenarioRunStatusView(generics.RetrieveAPIView):
    queryset = ScenarioRun.objects.all()
    serializer_class = ScenarioRunSerializer
    lookup_field = 'id'
    permission_classes = [AllowAny]

    def get(self, request, *args, **kwargs):
        try:
            instance = self.get_object()
            serializer = self.get_serializer(instance)
            return Response(serializer.data)
        except Http404:
            return Response({"error": "Run not found."}, status=status.HTTP_404_NOT_FOUND)


class ScenarioRunDownloadView(generics.GenericAPIView):
    permission_classes = [AllowAny]

    def get(self, request, job_id, *args, **kwargs):
        try:
            run = ScenarioRun.objects.get(id=job_id)
        except ScenarioRun.DoesNotExist:
            return Response({"error": "Run not found."}, status=status.HTTP_404_NOT_FOUND)

        if run.status != 'COMPLETED' or not run.output_url:
            return Response({"error": "Report not ready for download or the run failed."}, status=status.HTTP_404_NOT_FOUND)

        archive_path = os.path.join(run.report_dir(), REPORT_ARCHIVE)
        if not os.path.exists(archive_path):
            return Response({"error": "Report archive not found on server."}, status=status.HTTP_404_NOT_FOUND)

        file_name = f"{run.scenario}_{run.id}.zip"
        response = FileResponse(open(archive_path, 'rb'), content_type='application/zip')
        response['Content-Disposition'] = f'attachment; filename="{file_name}"'
        return response
