# levy/jump_opt.py

"""
Optimal jump counts for corridor sets {xi : l(t) <= xi(t) <= u(t)}.

``optimal_jump_path`` walks the corridor segment by segment: it jumps only
when the set of levels that stayed admissible since the last jump becomes
empty. ``brute_force_min_jumps`` is an independent grid oracle that also
handles arbitrary membership predicates.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .cadlag import StepPath, jump_counts
from .exceptions import BudgetExceededError, CorridorError, PreconditionError
from .levy_model import rate_cost

logger = logging.getLogger(__name__)

# slack for comparisons against corridor bounds
BOUND_TOL = 1e-9
DEFAULT_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class Corridor:
    """Piecewise-linear bounds l < u given by their values at knots 0 = t_0 < ... < t_M = 1."""

    knots: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or lower.shape != knots.shape or upper.shape != knots.shape:
            raise CorridorError("Corridor needs at least two knots and one l and u value per knot.")
        if knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise CorridorError("Corridor knots must increase strictly from 0 to 1.")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise CorridorError("Corridor bounds must be finite.")
        # both bounds are linear between knots, so l < u at the knots suffices
        if np.any(lower >= upper):
            raise CorridorError("Corridor needs l(t) < u(t) at every knot.")
        if not lower[0] < 0 < upper[0]:
            raise CorridorError(f"Corridor needs l(0) < 0 < u(0), got l(0)={lower[0]}, u(0)={upper[0]}.")
        for name, values in (('knots', knots), ('lower', lower), ('upper', upper)):
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def constant(cls, lo, hi):
        return cls([0.0, 1.0], [lo, lo], [hi, hi])

    def l(self, t):
        return np.interp(t, self.knots, self.lower)

    def u(self, t):
        return np.interp(t, self.knots, self.upper)

    def contains_values(self, times, values, tol=BOUND_TOL):
        return bool(np.all(self.l(times) - tol <= values) and np.all(values <= self.u(times) + tol))

    def contains_step(self, p, tol=BOUND_TOL):
        """Exact membership of a step path: each constant piece checked against the extrema over its closure."""
        cuts = [0.0, *p.times, 1.0]
        levels = p.levels()
        for value, start, end in zip(levels, cuts, cuts[1:]):
            bounds = feasible_interval(self, start, end, tol=tol)
            if bounds is None or not bounds[0] - tol <= value <= bounds[1] + tol:
                return False
        return True

    def to_frame(self):
        return pd.DataFrame({'knot': self.knots, 'l': self.lower, 'u': self.upper})

    @classmethod
    def from_frame(cls, frame):
        missing = {'knot', 'l', 'u'} - set(frame.columns)
        if missing:
            raise CorridorError(f"Corridor CSV is missing columns: {', '.join(sorted(missing))}.")
        return cls(frame['knot'].to_numpy(), frame['l'].to_numpy(), frame['u'].to_numpy())

    @classmethod
    def from_csv(cls, path):
        return cls.from_frame(pd.read_csv(path))


@dataclass(frozen=True)
class OptimalPathResult:
    breakpoints: tuple
    levels: tuple
    path: StepPath
    counts: tuple

    @property
    def J(self):
        return self.counts[0]

    @property
    def K(self):
        return self.counts[1]

    def to_record(self):
        return {
            'breakpoints': list(self.breakpoints),
            'levels': list(self.levels),
            'J': self.J,
            'K': self.K,
        }


@dataclass(frozen=True)
class BruteForceResult:
    """I-minimal (j, k) found on the grids, plus every feasible pair seen."""

    best: tuple | None
    feasible: frozenset = field(default_factory=frozenset)

    def to_record(self):
        return {
            'best': list(self.best) if self.best is not None else None,
            'feasible': sorted(list(pair) for pair in self.feasible),
        }


def _points_inside(c, s, t):
    inner = c.knots[(c.knots > s) & (c.knots < t)]
    return np.concatenate(([s], inner, [t]))


def feasible_interval(c, s, t, tol=0.0):
    """[max l, min u] over [s, t], or None when empty."""
    if not 0 <= s <= t <= 1:
        raise PreconditionError(f"Need 0 <= s <= t <= 1, got s={s}, t={t}.")
    points = _points_inside(c, s, t)
    lo = float(np.max(c.l(points)))
    hi = float(np.min(c.u(points)))
    if lo > hi + tol:
        return None
    return lo, hi


def _linear_root(t0, f0, t1, f1):
    if f1 == f0:
        return t0
    return t0 + (t1 - t0) * (-f0) / (f1 - f0)


def _first_exit_of_zero(c):
    """1 ^ inf{t : l(t) > 0 or u(t) < 0}."""
    first = 1.0
    for a, b, la, lb, ua, ub in zip(c.knots, c.knots[1:], c.lower, c.lower[1:], c.upper, c.upper[1:]):
        for fa, fb in ((la, lb), (-ua, -ub)):
            if fa > 0:
                first = min(first, a)
            elif fb > 0:
                first = min(first, _linear_root(a, fa, b, fb))
        if first <= b:
            break
    return first


def _next_breakpoint(c, start):
    """1 ^ inf{t > start : max_[start,t] l > min_[start,t] u}, by exact segment arithmetic."""
    running_max = float(c.l(start))
    running_min = float(c.u(start))
    for a, b in zip(c.knots, c.knots[1:]):
        if b <= start:
            continue
        a = max(a, start)
        la, lb = float(c.l(a)), float(c.l(b))
        ua, ub = float(c.u(a)), float(c.u(b))

        candidates = {a, b}
        # kinks where l reaches the running max or u the running min
        if (la - running_max) * (lb - running_max) < 0:
            candidates.add(_linear_root(a, la - running_max, b, lb - running_max))
        if (ua - running_min) * (ub - running_min) < 0:
            candidates.add(_linear_root(a, ua - running_min, b, ub - running_min))
        ordered = sorted(candidates)

        def gap(t, lo=running_max, hi=running_min):
            return max(lo, float(c.l(t))) - min(hi, float(c.u(t)))

        prev_t, prev_f = ordered[0], gap(ordered[0])
        if prev_f > 0:
            return prev_t
        for t in ordered[1:]:
            f = gap(t)
            if f > 0:
                return _linear_root(prev_t, prev_f, t, f)
            prev_t, prev_f = t, f

        running_max = max(running_max, la, lb)
        running_min = min(running_min, ua, ub)
    return 1.0


def optimal_jump_path(c):
    """Minimal-jump step path inside the corridor and its jump counts (J, K)."""
    first = _first_exit_of_zero(c)
    if first >= 1.0:
        return OptimalPathResult(breakpoints=(), levels=(), path=StepPath.zero(), counts=(0, 0))

    breakpoints = [first]
    while breakpoints[-1] < 1.0:
        nxt = _next_breakpoint(c, breakpoints[-1])
        if not nxt > breakpoints[-1]:
            raise CorridorError(f"Corridor admits no progress after t={breakpoints[-1]}.")
        breakpoints.append(nxt)
    # breakpoints now ends with 1; the intervals are [t_n, t_n+1]
    intervals = list(zip(breakpoints, breakpoints[1:]))

    levels = []
    for index, (s, t) in enumerate(intervals):
        lo, hi = feasible_interval(c, s, t, tol=BOUND_TOL)
        levels.append(0.5 * (lo + hi) if index == len(intervals) - 1 else lo)

    times, sizes, kept_levels = [], [], []
    current = 0.0
    for t, level in zip(breakpoints, levels):
        size = level - current
        if abs(size) <= BOUND_TOL:
            logger.warning(f"Merging a zero-size jump at t={t:.6g} in the corridor path.")
            continue
        times.append(t)
        sizes.append(size)
        kept_levels.append(level)
        current = level

    path = StepPath(tuple(times), tuple(sizes))
    return OptimalPathResult(
        breakpoints=tuple(times),
        levels=tuple(kept_levels),
        path=path,
        counts=jump_counts(path),
    )


def _pick_best(feasible, alpha, beta):
    if not feasible:
        return None
    return min(feasible, key=lambda jk: (rate_cost(alpha, beta, *jk), jk[0]))


def _corridor_feasible_counts(c, max_j, max_k, levels, times):
    """Exact (j, k) reachability over step paths with jumps on ``times`` and values in ``levels``.

    reach[level, j, k] says some admissible path with j up and k down jumps
    so far currently sits at that level.
    """
    times = np.unique(np.concatenate((times, c.knots)))
    # max l and min u over a grid interval are attained at its ends or at knots
    levels = np.unique(np.concatenate((levels, [0.0], c.l(times), c.u(times))))
    start = int(np.flatnonzero(levels == 0.0)[0])
    reach = np.zeros((levels.size, max_j + 1, max_k + 1), dtype=bool)
    reach[start, 0, 0] = True

    def admissible(s, t):
        bounds = feasible_interval(c, s, t, tol=BOUND_TOL)
        if bounds is None:
            return np.zeros(levels.size, dtype=bool)
        return (levels >= bounds[0] - BOUND_TOL) & (levels <= bounds[1] + BOUND_TOL)

    def jump(reach):
        # any reachable level strictly below (above) can jump up (down) here
        below = np.zeros_like(reach)
        below[1:] = np.logical_or.accumulate(reach[:-1], axis=0)
        above = np.zeros_like(reach)
        above[:-1] = np.logical_or.accumulate(reach[:0:-1], axis=0)[::-1]
        moved = reach.copy()
        moved[:, 1:, :] |= below[:, :-1, :]
        moved[:, :, 1:] |= above[:, :, :-1]
        return moved

    for g, (s, t) in enumerate(zip(times, times[1:])):
        if g > 0:
            reach = jump(reach)
        reach &= admissible(s, t)[:, None, None]
    reach = jump(reach) & admissible(1.0, 1.0)[:, None, None]

    counts = np.argwhere(reach.any(axis=0))
    return frozenset((int(j), int(k)) for j, k in counts)


def _enumerated_feasible_counts(A, max_j, max_k, levels, times, budget):
    jump_times = [t for t in times if t > 0]
    levels = [float(v) for v in levels]
    total = sum(math.comb(len(jump_times), r) * len(levels) ** r for r in range(max_j + max_k + 1))
    if total > budget:
        raise BudgetExceededError(f"Brute-force search needs {total} paths, over the budget of {budget}.")

    feasible = set()
    for r in range(max_j + max_k + 1):
        for chosen in itertools.combinations(jump_times, r):
            for path_levels in itertools.product(levels, repeat=r):
                previous = [0.0, *path_levels]
                sizes = [b - a for a, b in zip(previous, previous[1:])]
                if any(s == 0 for s in sizes):
                    continue
                up = sum(1 for s in sizes if s > 0)
                if up > max_j or r - up > max_k or (up, r - up) in feasible:
                    continue
                if A.contains(StepPath(chosen, tuple(sizes))):
                    feasible.add((up, r - up))
    return frozenset(feasible)


def brute_force_min_jumps(A, max_j, max_k, level_grid, time_grid, alpha, beta, budget=DEFAULT_BUDGET, anchor=None):
    """Smallest-cost (j, k) among grid step paths in A; ``best`` is None when nothing was found.

    Corridor targets use an exact dynamic program over the grids, refined with
    the corridor knots and the bound values at every grid time; other targets
    are enumerated path by path under ``budget``. When ``anchor`` is a step
    path, its jump times and levels join the grids.
    """
    if max_j < 0 or max_k < 0:
        raise PreconditionError(f"Jump limits must be nonnegative, got {max_j}, {max_k}.")
    times = np.unique(np.concatenate((np.asarray(time_grid, dtype=float), [0.0, 1.0])))
    if times[0] < 0 or times[-1] > 1:
        raise PreconditionError("Time grid must lie in [0, 1].")
    level_grid = np.asarray(level_grid, dtype=float)
    if anchor is not None:
        times = np.unique(np.concatenate((times, anchor.times)))
        level_grid = np.concatenate((level_grid, anchor.levels()))

    if A.corridor is not None:
        feasible = _corridor_feasible_counts(A.corridor, max_j, max_k, level_grid, times)
    else:
        feasible = _enumerated_feasible_counts(A, max_j, max_k, level_grid, times, budget)
    return BruteForceResult(best=_pick_best(feasible, alpha, beta), feasible=feasible)
