# levy/cadlag.py

"""
Path representations on [0, 1] and the Skorokhod J1 engine for step paths.

``StepPath`` is a finite signed jump list (the elements of D_{j,k}),
``GridPath`` a cadlag path sampled on a uniform grid, ``PathBatch`` a block
of grid paths produced by the vectorised samplers, and ``TargetSet`` a
membership predicate over paths with optional bound-away certificates.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from .exceptions import PathError, PreconditionError
from .levy_model import rate_cost

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepPath:
    """sum_i s_i 1_[u_i, 1](t) with strictly increasing u_i in (0, 1] and s_i != 0."""

    times: tuple = ()
    sizes: tuple = ()

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        sizes = tuple(float(s) for s in self.sizes)
        if len(times) != len(sizes):
            raise PathError(f"Got {len(times)} jump times but {len(sizes)} jump sizes.")
        for t in times:
            if not 0 < t <= 1:
                raise PathError(f"Jump time {t} lies outside (0, 1].")
        for earlier, later in zip(times, times[1:]):
            if not earlier < later:
                raise PathError(f"Jump times must be strictly increasing, got {earlier} then {later}.")
        for s in sizes:
            if s == 0 or not math.isfinite(s):
                raise PathError(f"Jump sizes must be finite and nonzero, got {s}.")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'sizes', sizes)

    @classmethod
    def from_jumps(cls, jumps):
        """Build from (time, size) pairs in any order; simultaneous jumps are rejected."""
        ordered = sorted((float(t), float(s)) for t, s in jumps)
        return cls(tuple(t for t, _ in ordered), tuple(s for _, s in ordered))

    @classmethod
    def zero(cls):
        return cls()

    def __len__(self):
        return len(self.times)

    @property
    def jumps(self):
        return list(zip(self.times, self.sizes))

    def levels(self):
        """Path values after each jump, prefixed by the initial value 0."""
        return np.concatenate(([0.0], np.cumsum(self.sizes)))

    def value(self, t):
        return eval_step(self, t)

    def up_sizes(self):
        """Upward jump sizes, largest first."""
        return sorted((s for s in self.sizes if s > 0), reverse=True)

    def down_sizes(self):
        """Magnitudes of downward jumps, largest first."""
        return sorted((-s for s in self.sizes if s < 0), reverse=True)

    def on_grid(self, m):
        """Sample on the uniform grid i/m, i = 0..m (right limits at grid points)."""
        if m < 1:
            raise PathError(f"Grid size must be a positive integer, got {m}.")
        increments = np.zeros(m + 1)
        for t, s in self.jumps:
            increments[max(int(math.ceil(t * m - 1e-12)), 1)] += s
        return GridPath(np.cumsum(increments))

    def to_frame(self):
        return pd.DataFrame({'time': list(self.times), 'size': list(self.sizes)})

    @classmethod
    def from_frame(cls, frame):
        return cls.from_jumps(zip(frame['time'], frame['size']))

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')


@dataclass(frozen=True, eq=False)
class GridPath:
    """Path values at the grid points i/m, i = 0..m, cadlag convention."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise PathError("A grid path needs a one-dimensional array of at least two values.")
        if not np.all(np.isfinite(values)):
            raise PathError("Grid path values must be finite.")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def m(self):
        return self.values.size - 1

    @property
    def times(self):
        return np.linspace(0.0, 1.0, self.m + 1)

    def value(self, t):
        if not 0 <= t <= 1:
            raise PathError(f"Evaluation time {t} lies outside [0, 1].")
        return float(self.values[min(int(math.floor(t * self.m + 1e-12)), self.m)])

    @property
    def terminal(self):
        return float(self.values[-1])

    def sup(self):
        return float(self.values.max())

    def inf(self):
        return float(self.values.min())

    def to_frame(self):
        return pd.DataFrame({str(self.m): self.values})

    @classmethod
    def from_frame(cls, frame):
        return cls(frame.iloc[:, 0].to_numpy())

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Grid paths stacked row-wise, with the exact largest jumps of each path.

    ``max_up`` and ``max_down`` hold the largest upward jump and the largest
    downward jump magnitude (0 when there is none), in the path's own scale.
    ``sup_exact`` is set when the sampler knows the supremum off the grid.
    """

    values: np.ndarray
    max_up: np.ndarray
    max_down: np.ndarray
    sup_exact: np.ndarray | None = None

    @property
    def size(self):
        return self.values.shape[0]

    def sup(self):
        if self.sup_exact is not None:
            return self.sup_exact
        return self.values.max(axis=1)

    def terminal(self):
        return self.values[:, -1]

    @property
    def m(self):
        return self.values.shape[1] - 1

    @property
    def times(self):
        return np.linspace(0.0, 1.0, self.m + 1)

    def paths(self):
        for row in self.values:
            yield GridPath(row)


@dataclass(frozen=True)
class TargetSet:
    """A set A of paths given by a deterministic membership predicate.

    ``hint_delta`` is either one floor for both sides or a (delta_plus,
    delta_minus) pair; ``hint_jk`` the optimal jump counts when known.
    ``batch_membership`` vectorises membership over a ``PathBatch`` and
    ``limit_membership`` over a block of limit configurations; ``corridor``
    is set for pointwise sets {l <= xi <= u}.
    """

    membership: Callable
    hint_delta: object = None
    hint_jk: tuple | None = None
    name: str = 'custom'
    batch_membership: Callable | None = field(default=None, compare=False)
    limit_membership: Callable | None = field(default=None, compare=False)
    corridor: object = field(default=None, compare=False)

    def contains(self, path):
        return bool(self.membership(path))

    def contains_batch(self, batch):
        if self.batch_membership is not None:
            return np.asarray(self.batch_membership(batch), dtype=bool)
        return np.fromiter((self.contains(p) for p in batch.paths()), dtype=bool, count=batch.size)

    def floors(self):
        if self.hint_delta is None:
            return None
        if isinstance(self.hint_delta, (tuple, list)):
            return float(self.hint_delta[0]), float(self.hint_delta[1])
        return float(self.hint_delta), float(self.hint_delta)


def eval_step(p, t):
    """Sum of the sizes of the jumps at times <= t."""
    if not 0 <= t <= 1:
        raise PathError(f"Evaluation time {t} lies outside [0, 1].")
    count = bisect.bisect_right(p.times, t)
    return float(sum(p.sizes[:count]))


def jump_counts(p):
    up = sum(1 for s in p.sizes if s > 0)
    return up, len(p.sizes) - up


def path_rate_function(p, alpha, beta):
    """(alpha - 1) D_+(p) + (beta - 1) D_-(p)."""
    up, down = jump_counts(p)
    return rate_cost(alpha, beta, up, down)


def sup_distance(x, y):
    """Exact uniform distance between two step paths."""
    points = sorted({0.0, *x.times, *y.times})
    return max(abs(eval_step(x, t) - eval_step(y, t)) for t in points)


def _j1_feasible(x, y, r):
    """Whether some time change lambda has ||lambda - e|| <= r and ||x o lambda - y|| <= r.

    x o lambda keeps the values of x and moves its jumps to times w_i with
    |w_i - u_i| <= r, so the search is over interleavings of the moved x-jumps
    with the jumps of y. best[i][k] is the earliest time at which i jumps of x
    and k jumps of y can have occurred with every visited value pair within r.
    """
    u, v = x.times, y.times
    xs, ys = x.levels(), y.levels()
    p, q = len(u), len(v)
    best = [[math.inf] * (q + 1) for _ in range(p + 1)]
    best[0][0] = 0.0

    for i in range(p + 1):
        for k in range(q + 1):
            now = best[i][k]
            if now == math.inf:
                continue

            if i < p:
                if u[i] == 1.0:
                    lo = hi = 1.0
                else:
                    lo, hi = max(now, u[i] - r), min(u[i] + r, 1.0)
                fits = now < 1.0 and lo <= hi
                if k < q:
                    fits = fits and lo <= v[k] and not (lo == 1.0 and v[k] == 1.0)
                if fits and abs(xs[i + 1] - ys[k]) <= r and lo < best[i + 1][k]:
                    best[i + 1][k] = lo

            if k < q:
                t = v[k]
                fits = now <= t and (t < 1.0 or now < 1.0)
                if fits and abs(xs[i] - ys[k + 1]) <= r and t < best[i][k + 1]:
                    best[i][k + 1] = t

            if i < p and k < q:
                t = v[k]
                fits = now <= t and abs(u[i] - t) <= r
                if t == 1.0 or u[i] == 1.0:
                    fits = fits and t == u[i] and now < 1.0
                if fits and abs(xs[i + 1] - ys[k + 1]) <= r and t < best[i + 1][k + 1]:
                    best[i + 1][k + 1] = t

    return best[p][q] < math.inf


def j1_distance(x, y, tol=1e-6):
    """Skorokhod J1 distance between step paths, to absolute accuracy tol."""
    if not tol > 0:
        raise PreconditionError(f"Tolerance must be positive, got {tol}.")
    # fixed argument order so that rounding cannot break symmetry
    if (y.times, y.sizes) < (x.times, x.sizes):
        x, y = y, x
    hi = sup_distance(x, y)
    if hi == 0:
        return 0.0
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _j1_feasible(x, y, mid):
            hi = mid
        else:
            lo = mid
    return hi


def bound_away_radius(p, j, k):
    """Certified lower bound on the distance from p to every D_{l,m} with l < j or m < k.

    Removing one of the j largest upward jumps moves the path by at least half
    of the j-th largest one, likewise downward.
    """
    ups, downs = p.up_sizes(), p.down_sizes()
    if j < 0 or k < 0 or len(ups) < j or len(downs) < k:
        raise PreconditionError(
            f"Path has {len(ups)} upward and {len(downs)} downward jumps; need at least {j} and {k}."
        )
    candidates = []
    if j > 0:
        candidates.append(ups[j - 1])
    if k > 0:
        candidates.append(downs[k - 1])
    if not candidates:
        return math.inf
    return min(candidates) / 2.0
