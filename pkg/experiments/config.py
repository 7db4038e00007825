# experiments/config.py

"""
Experiment configuration: TOML files validated by DRF serializers.

The same ``ScenarioConfigSerializer`` validates configs read by the CLI and
config trees posted to the API. Unknown keys anywhere in the tree are
rejected; errors are reported under their dotted key.
"""

import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from django.conf import settings
from rest_framework import serializers

from levy.exceptions import HeavyTailError
from levy.jump_opt import Corridor
from levy.levy_model import LevyModel, TailModel
from levy.simulate import IncrementModel

from .catalog import TARGET_BUILDERS, TargetSpec, build_target, target_parameters

logger = logging.getLogger(__name__)

SCENARIOS = ('moderate_jumps', 'ou_barrier', 'multiple_optima', 'ldp_slope', 'corridor', 'subordination')


class ConfigError(HeavyTailError, ValueError):
    """A config file or tree failed validation; ``details`` maps dotted keys to messages."""

    def __init__(self, message, details=None):
        self.details = details or {}
        super().__init__(message)


def flatten(tree, prefix=''):
    """{'pos': {'c': 1}} -> {'pos.c': 1}."""
    flat = {}
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            flat.update(flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def flatten_errors(errors, prefix=''):
    flat = {}
    if isinstance(errors, dict):
        for key, value in errors.items():
            dotted = prefix if key == 'non_field_errors' else f"{prefix}.{key}" if prefix else str(key)
            flat.update(flatten_errors(value, dotted))
    elif isinstance(errors, list) and errors and isinstance(errors[0], (dict, list)):
        for index, value in enumerate(errors):
            flat.update(flatten_errors(value, f"{prefix}[{index}]"))
    else:
        messages = errors if isinstance(errors, list) else [errors]
        flat.setdefault(prefix or 'config', []).extend(str(m) for m in messages)
    return flat


# --- Serializers ---

class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)


class PosTailSerializer(StrictSerializer):
    c = serializers.FloatField(min_value=0)
    alpha = serializers.FloatField()
    slowvar = serializers.ChoiceField(choices=['constant', 'log_power'], default='constant')
    p = serializers.FloatField(default=0.0)


class NegTailSerializer(StrictSerializer):
    c = serializers.FloatField(min_value=0)
    beta = serializers.FloatField()
    slowvar = serializers.ChoiceField(choices=['constant', 'log_power'], default='constant')
    p = serializers.FloatField(default=0.0)


class SmallJumpSerializer(StrictSerializer):
    eps = serializers.FloatField()


class IncrementsSerializer(StrictSerializer):
    c_plus = serializers.FloatField(min_value=0)
    alpha = serializers.FloatField()
    c_minus = serializers.FloatField(min_value=0, default=0.0)
    beta = serializers.FloatField(required=False)
    x0 = serializers.FloatField(default=1.0)


class BandsSerializer(StrictSerializer):
    ratio_rel = serializers.FloatField(min_value=0, required=False)
    ratio_lo = serializers.FloatField(required=False)
    ratio_hi = serializers.FloatField(required=False)
    slope_tol = serializers.FloatField(min_value=0, required=False)
    slope_lo = serializers.FloatField(required=False)
    slope_hi = serializers.FloatField(required=False)
    ks_max = serializers.FloatField(min_value=0, required=False)


class CorridorSerializer(StrictSerializer):
    knots = serializers.ListField(child=serializers.FloatField(), required=False)
    lower = serializers.ListField(child=serializers.FloatField(), required=False)
    upper = serializers.ListField(child=serializers.FloatField(), required=False)
    csv = serializers.CharField(required=False)

    def validate(self, data):
        inline = {'knots', 'lower', 'upper'} & set(data)
        if 'csv' in data and inline:
            raise serializers.ValidationError("Give either corridor.csv or knots/lower/upper, not both.")
        if 'csv' not in data and inline != {'knots', 'lower', 'upper'}:
            raise serializers.ValidationError("A corridor needs knots, lower and upper (or a csv file).")
        return data


class TargetSerializer(serializers.Serializer):
    """target.name plus the named catalog target's own parameters."""

    name = serializers.ChoiceField(choices=sorted(TARGET_BUILDERS))

    def to_internal_value(self, data):
        validated = super().to_internal_value(data)
        params = {key: value for key, value in data.items() if key != 'name'}
        unknown = sorted(set(params) - set(target_parameters(validated['name'])))
        if unknown:
            raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        try:
            build_target(validated['name'], **params)
        except (HeavyTailError, TypeError) as exc:
            raise serializers.ValidationError(str(exc))
        return TargetSpec(validated['name'], params)


class EstimateSerializer(StrictSerializer):
    j = serializers.IntegerField(min_value=0)
    k = serializers.IntegerField(min_value=0, default=0)
    delta_plus = serializers.FloatField(required=False)
    delta_minus = serializers.FloatField(required=False)


class SuiteSerializer(StrictSerializer):
    configs = serializers.ListField(child=serializers.CharField(), allow_empty=False)


# --- Per-scenario parameters (params.*) ---

class ModerateJumpsParams(StrictSerializer):
    a = serializers.FloatField()
    b = serializers.FloatField()
    c = serializers.FloatField(min_value=0, default=0.0)

    def validate(self, data):
        if not (data['a'] > 0 and data['b'] > 0):
            raise serializers.ValidationError("params.a and params.b must be positive.")
        ratio = data['a'] / data['b']
        if math.isclose(ratio, round(ratio), rel_tol=0, abs_tol=1e-9):
            raise serializers.ValidationError("params.a must not be a multiple of params.b.")
        return data


class OUBarrierParams(StrictSerializer):
    kappa = serializers.FloatField(min_value=0)
    a_plus = serializers.FloatField()
    a_minus = serializers.FloatField()

    def validate(self, data):
        if not (data['a_plus'] > 0 and data['a_minus'] > 0):
            raise serializers.ValidationError("params.a_plus and params.a_minus must be positive.")
        return data


class MultipleOptimaParams(StrictSerializer):
    pass


class LdpSlopeParams(StrictSerializer):
    bootstrap = serializers.IntegerField(min_value=10, default=200)


class CorridorParams(StrictSerializer):
    max_j = serializers.IntegerField(min_value=0, default=3)
    max_k = serializers.IntegerField(min_value=0, default=3)
    level_step = serializers.FloatField(min_value=1e-6, default=0.05)
    time_step = serializers.FloatField(min_value=1e-6, default=0.005)
    random_corridors = serializers.IntegerField(min_value=0, default=0)
    min_agreement = serializers.FloatField(min_value=0, max_value=1, default=1.0)


class SubordinationParams(StrictSerializer):
    a = serializers.FloatField(default=1.0)
    ks_n = serializers.IntegerField(min_value=1, required=False)
    ks_samples = serializers.IntegerField(min_value=1, required=False)


SCENARIO_PARAMS = {
    'moderate_jumps': ModerateJumpsParams,
    'ou_barrier': OUBarrierParams,
    'multiple_optima': MultipleOptimaParams,
    'ldp_slope': LdpSlopeParams,
    'corridor': CorridorParams,
    'subordination': SubordinationParams,
}


class ScenarioConfigSerializer(StrictSerializer):
    scenario = serializers.ChoiceField(choices=SCENARIOS, required=False)
    seed = serializers.IntegerField(min_value=0, max_value=2**64 - 1, default=0)
    n_list = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False)
    samples_per_n = serializers.IntegerField(min_value=1, default=10_000)
    batch_size = serializers.IntegerField(min_value=1, default=lambda: settings.HEAVYTAIL_BATCH_SIZE)
    workers = serializers.IntegerField(min_value=1, default=lambda: settings.HEAVYTAIL_WORKERS)
    m_grid = serializers.IntegerField(min_value=1, required=False)
    limit_samples = serializers.IntegerField(min_value=1, default=100_000)
    output_dir = serializers.CharField(required=False)

    pos = PosTailSerializer(required=False)
    neg = NegTailSerializer(required=False)
    drift = serializers.FloatField(default=0.0)
    sigma = serializers.FloatField(min_value=0, default=0.0)
    smalljump = SmallJumpSerializer(required=False)
    increments = IncrementsSerializer(required=False)

    params = serializers.DictField(default=dict)
    bands = BandsSerializer(required=False)
    corridor = CorridorSerializer(required=False)
    target = TargetSerializer(required=False)
    estimate = EstimateSerializer(required=False)
    suite = SuiteSerializer(required=False)

    def validate(self, data):
        if 'suite' in data:
            return data
        scenario = data.get('scenario')
        if scenario is None and 'target' not in data and 'corridor' not in data and 'pos' not in data:
            raise serializers.ValidationError({'scenario': ["This field is required."]})

        if 'n_list' in data:
            n_list = data['n_list']
            if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
                raise serializers.ValidationError({'n_list': ["n_list must be nonempty and strictly increasing."]})

        data['model'] = self._build(self._levy_model, data)
        data['increment_model'] = self._build(self._increment_model, data)
        if 'neg' in data and 'pos' not in data:
            raise serializers.ValidationError({'pos': ["A negative tail needs a positive tail."]})

        if scenario is not None:
            params = SCENARIO_PARAMS[scenario](data=data['params'])
            if not params.is_valid():
                raise serializers.ValidationError({'params': params.errors})
            data['params'] = dict(params.validated_data)
            self._check_scenario(scenario, data)
        elif data['params']:
            raise serializers.ValidationError({'params': ["params.* needs a scenario."]})
        return data

    def _check_scenario(self, scenario, data):
        model = data['model']
        required = {
            'moderate_jumps': ('pos', 'n_list'),
            'ou_barrier': ('pos', 'n_list'),
            'multiple_optima': ('pos', 'neg', 'n_list'),
            'ldp_slope': ('pos', 'n_list', 'target'),
            'corridor': ('corridor',),
            'subordination': ('increments', 'n_list'),
        }[scenario]
        missing = [key for key in required if key not in data]
        if missing:
            raise serializers.ValidationError({key: [f"Required by scenario '{scenario}'."] for key in missing})
        if scenario == 'moderate_jumps' and not model.spectrally_positive:
            raise serializers.ValidationError({'neg': ["moderate_jumps needs a spectrally positive model."]})
        if scenario == 'multiple_optima' and not model.symmetric_tails:
            pos, neg = data['pos'], data['neg']
            for key, pos_key in (('beta', 'alpha'), ('c', 'c'), ('slowvar', 'slowvar'), ('p', 'p')):
                if neg[key] != pos[pos_key]:
                    raise serializers.ValidationError(
                        {f'neg.{key}': [f"multiple_optima needs symmetric tails: pos.{pos_key} == neg.{key}."]}
                    )

    @staticmethod
    def _build(factory, data):
        try:
            return factory(data)
        except HeavyTailError as exc:
            raise serializers.ValidationError(str(exc))

    @staticmethod
    def _levy_model(data):
        if 'pos' not in data:
            return None
        pos = data['pos']
        neg = data.get('neg')
        return LevyModel(
            pos=TailModel(c=pos['c'], index=pos['alpha'], slow_var=pos['slowvar'], p=pos['p']),
            neg=TailModel(c=neg['c'], index=neg['beta'], slow_var=neg['slowvar'], p=neg['p']) if neg else None,
            drift=data['drift'],
            sigma=data['sigma'],
            small_jump_eps=data['smalljump']['eps'] if 'smalljump' in data else None,
        )

    @staticmethod
    def _increment_model(data):
        if 'increments' not in data:
            return None
        return IncrementModel(**data['increments'])


# --- Validated config ---

@dataclass(frozen=True)
class ScenarioConfig:
    """A validated experiment config; ``tree`` is the config as written, minus output_dir."""

    scenario: str | None
    seed: int
    n_list: tuple
    samples_per_n: int
    batch_size: int
    workers: int
    m_grid: int | None
    limit_samples: int
    output_dir: str
    model: LevyModel | None = None
    increments: IncrementModel | None = None
    params: dict = field(default_factory=dict)
    bands: dict = field(default_factory=dict)
    corridor: Corridor | None = None
    target: TargetSpec | None = None
    estimate: dict = field(default_factory=dict)
    suite: tuple = ()
    tree: dict = field(default_factory=dict, compare=False)

    def with_overrides(self, seed=None, samples=None, output_dir=None):
        changes = {}
        tree = dict(self.tree)
        if seed is not None:
            changes['seed'] = tree['seed'] = int(seed)
        if samples is not None:
            changes['samples_per_n'] = tree['samples_per_n'] = int(samples)
        if output_dir is not None:
            changes['output_dir'] = output_dir
        return dataclasses.replace(self, tree=tree, **changes)

    def to_record(self):
        return dict(self.tree)


def _read_corridor(data, base_dir):
    if 'csv' in data:
        path = data['csv']
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return Corridor.from_csv(path)
    return Corridor(data['knots'], data['lower'], data['upper'])


def validate_tree(tree, base_dir=None):
    """Validate a config tree (as parsed from TOML or posted as JSON) into a ScenarioConfig."""
    serializer = ScenarioConfigSerializer(data=tree)
    if not serializer.is_valid():
        details = flatten_errors(serializer.errors)
        summary = '; '.join(f"{key}: {' '.join(messages)}" for key, messages in sorted(details.items()))
        raise ConfigError(f"Invalid config: {summary}", details)
    data = serializer.validated_data

    try:
        corridor = _read_corridor(data['corridor'], base_dir) if 'corridor' in data else None
    except (HeavyTailError, OSError) as exc:
        raise ConfigError(f"Invalid corridor: {exc}", {'corridor': [str(exc)]}) from exc

    scenario = data.get('scenario')
    output_dir = data.get('output_dir') or os.path.join(settings.HEAVYTAIL_REPORTS_DIR, scenario or 'adhoc')
    if base_dir and not os.path.isabs(output_dir) and 'output_dir' in data:
        output_dir = os.path.join(base_dir, output_dir)
    suite = tuple(
        path if os.path.isabs(path) or not base_dir else os.path.join(base_dir, path)
        for path in data.get('suite', {}).get('configs', ())
    )

    record = {key: value for key, value in tree.items() if key != 'output_dir'}
    record.setdefault('seed', data['seed'])
    record.setdefault('samples_per_n', data['samples_per_n'])

    return ScenarioConfig(
        scenario=scenario,
        seed=data['seed'],
        n_list=tuple(data.get('n_list', ())),
        samples_per_n=data['samples_per_n'],
        batch_size=data['batch_size'],
        workers=data['workers'],
        m_grid=data.get('m_grid'),
        limit_samples=data['limit_samples'],
        output_dir=output_dir,
        model=data.get('model'),
        increments=data.get('increment_model'),
        params=data.get('params', {}),
        bands=dict(data.get('bands', {})),
        corridor=corridor,
        target=data.get('target'),
        estimate=dict(data.get('estimate', {})),
        suite=suite,
        tree=record,
    )


def load_config(path):
    """Read and validate a TOML config file."""
    try:
        with open(path, 'rb') as handle:
            tree = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"Cannot read config {path}: {exc}", {'config': [str(exc)]}) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Config {path} is not valid TOML: {exc}", {'config': [str(exc)]}) from exc
    logger.debug(f"Loaded config {path} with keys {sorted(flatten(tree))}")
    return validate_tree(tree, base_dir=os.path.dirname(os.path.abspath(path)))
