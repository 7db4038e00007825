from django.contrib import admin

from .models import ScenarioRun


@admin.register(ScenarioRun)
class ScenarioRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'scenario', 'status', 'passed', 'created_at')
    list_filter = ('scenario', 'status', 'passed')
    readonly_fields = ('output_url', 'error_message', 'created_at', 'updated_at')
