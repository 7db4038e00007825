import uuid

import django.db.models.deletion
from django.conf import settings
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
        migrations.swappable_dependency(settings.AUTH_USER_MODEL),
    ]

    operations = [
        migrations.CreateModel(
            name='ScenarioRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('scenario', models.CharField(choices=[('moderate_jumps', 'Moderate jumps'), ('ou_barrier', 'Ou barrier'), ('multiple_optima', 'Multiple optima'), ('ldp_slope', 'Ldp slope'), ('corridor', 'Corridor'), ('subordination', 'Subordination')], help_text='The scenario named by the config.', max_length=50)),
                ('config', models.JSONField(help_text='The experiment config tree as posted.')),
                ('seed', models.DecimalField(decimal_places=0, default=0, max_digits=20)),
                ('status', models.CharField(choices=[('PENDING', 'Pending'), ('PROCESSING', 'Processing'), ('COMPLETED', 'Completed'), ('FAILED', 'Failed')], default='PENDING', help_text='Current status of the run.', max_length=20)),
                ('passed', models.BooleanField(blank=True, help_text='Whether every acceptance band held; empty until the run completes.', null=True)),
                ('output_url', models.CharField(blank=True, help_text='URL of the zipped report.', max_length=500, null=True)),
                ('error_message', models.TextField(blank=True, help_text='Detailed message if the run failed.', null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('user', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.SET_NULL, related_name='scenario_runs', to=settings.AUTH_USER_MODEL)),
            ],
            options={
                'verbose_name': 'Scenario Run',
                'verbose_name_plural': 'Scenario Runs',
                'db_table': 'experiment_scenario_runs',
                'ordering': ['-created_at'],
            },
        ),
    ]
