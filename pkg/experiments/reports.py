# experiments/reports.py

"""
Scenario reports and their files.

Every report writes ``report.json`` (sorted keys, no timestamps, so reruns
with the same seed and config are byte-identical) and ``ratios.csv`` with
the header ``n,p_hat,p_stderr,normalizer,ratio``.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

RATIO_COLUMNS = ['n', 'p_hat', 'p_stderr', 'normalizer', 'ratio']
REPORT_FILE = 'report.json'
RATIOS_FILE = 'ratios.csv'


@dataclass(frozen=True)
class RatioRow:
    n: int
    hits: int
    samples: int
    p_hat: float
    p_stderr: float
    normalizer: float

    def __post_init__(self):
        if not self.normalizer > 0:
            raise ValueError(f"Normalizer must be positive, got {self.normalizer} at n={self.n}.")

    @classmethod
    def from_estimate(cls, n, estimate, hits, normalizer):
        return cls(n, int(hits), estimate.n_samples, estimate.value, estimate.stderr, float(normalizer))

    @property
    def ratio(self):
        return self.p_hat / self.normalizer

    @property
    def ratio_stderr(self):
        return self.p_stderr / self.normalizer

    def to_record(self):
        return {
            'n': self.n, 'hits': self.hits, 'samples': self.samples,
            'p_hat': self.p_hat, 'p_stderr': self.p_stderr,
            'normalizer': self.normalizer, 'ratio': self.ratio, 'ratio_stderr': self.ratio_stderr,
        }


def _jsonable(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"Cannot write {type(value).__name__} to a report.")


@dataclass
class ScenarioReport:
    scenario: str
    config: dict
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def to_record(self):
        return {
            'scenario': self.scenario,
            'config': self.config,
            'rows': [row.to_record() for row in self.rows],
            'checks': {name: bool(ok) for name, ok in self.checks.items()},
            'passed': self.passed,
            **self.extras,
        }

    def to_json(self):
        return json.dumps(self.to_record(), indent=2, sort_keys=True, default=_jsonable) + '\n'

    def ratio_frame(self):
        return pd.DataFrame([{col: getattr(row, col) for col in RATIO_COLUMNS} for row in self.rows],
                            columns=RATIO_COLUMNS)

    def write(self, output_dir):
        """Write report.json and ratios.csv into ``output_dir``; returns both paths."""
        os.makedirs(output_dir, exist_ok=True)
        report_path = os.path.join(output_dir, REPORT_FILE)
        ratios_path = os.path.join(output_dir, RATIOS_FILE)
        with open(report_path, 'w', encoding='utf-8') as handle:
            handle.write(self.to_json())
        self.ratio_frame().to_csv(ratios_path, index=False, float_format='%.17g', lineterminator='\n')
        logger.info(f"Wrote {self.scenario} report to {output_dir} (passed={self.passed})")
        return report_path, ratios_path


@dataclass
class RatioReport(ScenarioReport):
    limit_constant: float = math.nan
    limit_stderr: float = 0.0
    provenance: str = ''

    def to_record(self):
        record = super().to_record()
        record['limit_constant'] = {
            'value': None if math.isnan(self.limit_constant) else self.limit_constant,
            'stderr': self.limit_stderr,
            'provenance': self.provenance,
        }
        return record


@dataclass
class SlopeReport(ScenarioReport):
    slope: float = math.nan
    ci: tuple = (math.nan, math.nan)
    target_slope: float = math.nan
    dropped: list = field(default_factory=list)

    def to_record(self):
        record = super().to_record()
        finite = [None if math.isnan(x) else x for x in (self.slope, *self.ci, self.target_slope)]
        record.update(slope=finite[0], ci=finite[1:3], target_slope=finite[3], dropped=list(self.dropped))
        return record


@dataclass
class SubordinationReport(RatioReport):
    ks: dict = field(default_factory=dict)

    def to_record(self):
        record = super().to_record()
        record['ks'] = dict(self.ks)
        return record


# --- Acceptance bands ---

def ratio_checks(bands, row, constant):
    """Band checks on one ratio row; only the bands present in the config are checked."""
    checks = {}
    if 'ratio_rel' in bands and not math.isnan(constant):
        checks['ratio_rel'] = abs(row.ratio - constant) <= bands['ratio_rel'] * abs(constant)
    if 'ratio_lo' in bands:
        checks['ratio_lo'] = row.ratio >= bands['ratio_lo']
    if 'ratio_hi' in bands:
        checks['ratio_hi'] = row.ratio <= bands['ratio_hi']
    return checks


def slope_checks(bands, slope, target):
    checks = {}
    if math.isnan(slope):
        return {'slope_defined': False} if bands else {}
    if 'slope_tol' in bands:
        checks['slope_tol'] = abs(slope - target) <= bands['slope_tol']
    if 'slope_lo' in bands:
        checks['slope_lo'] = slope >= bands['slope_lo']
    if 'slope_hi' in bands:
        checks['slope_hi'] = slope <= bands['slope_hi']
    return checks


def ks_checks(bands, statistics):
    if 'ks_max' not in bands:
        return {}
    return {f"ks_{name}": value < bands['ks_max'] for name, value in statistics.items()}
