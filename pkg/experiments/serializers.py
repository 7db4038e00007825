# experiments/serializers.py

from rest_framework import serializers

from .config import ConfigError, validate_tree
from .models import ScenarioRun


class ScenarioRunSerializer(serializers.ModelSerializer):
    """
    Serializer for ScenarioRun. The posted ``config`` is validated by the same
    rules as a TOML config read by the CLI; scenario and seed are taken from it.
    """

    class Meta:
        model = ScenarioRun
        fields = [
            'id', 'scenario', 'config', 'seed', 'status', 'passed',
            'output_url', 'error_message', 'created_at', 'updated_at',
        ]
        read_only_fields = [
            'id', 'scenario', 'seed', 'status', 'passed',
            'output_url', 'error_message', 'created_at', 'updated_at',
        ]

    def validate_config(self, value):
        if not isinstance(value, dict):
            raise serializers.ValidationError("Config must be a JSON object.")

        # Paths on the server are not the client's to choose
        if 'output_dir' in value:
            raise serializers.ValidationError({'output_dir': ["Set by the server for API runs."]})
        if isinstance(value.get('corridor'), dict) and 'csv' in value['corridor']:
            raise serializers.ValidationError({'corridor.csv': ["Give the corridor inline for API runs."]})
        if 'suite' in value:
            raise serializers.ValidationError({'suite': ["Post the configs of a suite one by one."]})

        try:
            cfg = validate_tree(value)
        except ConfigError as e:
            raise serializers.ValidationError(e.details)
        if cfg.scenario is None:
            raise serializers.ValidationError({'scenario': ["This field is required."]})
        return value

    def create(self, validated_data):
        cfg = validate_tree(validated_data['config'])
        return ScenarioRun.objects.create(scenario=cfg.scenario, seed=cfg.seed, **validated_data)
