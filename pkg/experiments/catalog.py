# experiments/catalog.py

"""
Named target sets used by the scenarios.

A ``TargetSpec`` is a plain (name, params) pair so it can be stored in a
config, sent to worker processes and rebuilt there with ``build()``. Each
builder returns a ``TargetSet`` with the three membership evaluators the
library understands: exact on step paths, vectorised on simulated batches
and vectorised on blocks of limit configurations.
"""

import inspect
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from levy.cadlag import TargetSet, eval_step
from levy.exceptions import PreconditionError
from levy.jump_opt import BOUND_TOL, Corridor, optimal_jump_path
from levy.simulate import ou_step_extremes, ou_transform

logger = logging.getLogger(__name__)

TARGET_BUILDERS = {}


def register(name):
    def decorator(builder):
        TARGET_BUILDERS[name] = builder
        return builder
    return decorator


@dataclass(frozen=True)
class TargetSpec:
    name: str
    params: dict = field(default_factory=dict)

    def build(self):
        return build_target(self.name, **self.params)

    def to_record(self):
        return {'name': self.name, **self.params}

    @classmethod
    def from_record(cls, record):
        record = dict(record)
        return cls(record.pop('name'), record)


def build_target(name, **params):
    try:
        builder = TARGET_BUILDERS[name]
    except KeyError:
        raise PreconditionError(f"Unknown target '{name}'. Choices are {', '.join(sorted(TARGET_BUILDERS))}.")
    return builder(**params)


def target_parameters(name):
    """Keyword parameters accepted by a catalog target."""
    return list(inspect.signature(TARGET_BUILDERS[name]).parameters)


# --- Limit-configuration helpers ---

def _signed_jumps(block):
    """Jump times and signed sizes of a LimitBlock, sorted by time along each row."""
    times = np.concatenate((block.up_times, block.down_times), axis=1)
    sizes = np.concatenate((block.up_sizes, -block.down_sizes), axis=1)
    order = np.argsort(times, axis=1)
    return np.take_along_axis(times, order, axis=1), np.take_along_axis(sizes, order, axis=1)


def _limit_levels(block):
    times, sizes = _signed_jumps(block)
    return times, np.cumsum(sizes, axis=1)


def _ou_after_jumps(block, kappa):
    """OU image right after each jump and at t = 1, for every row of a LimitBlock."""
    times, sizes = _signed_jumps(block)
    lag = times[:, :, None] - times[:, None, :]
    decay = np.where(lag >= 0, np.exp(-kappa * np.maximum(lag, 0.0)), 0.0)
    after = np.einsum('rij,rj->ri', decay, sizes)
    terminal = np.sum(sizes * np.exp(-kappa * (1.0 - times)), axis=1)
    return after, terminal


def _compare(strict):
    return np.greater if strict else np.greater_equal


# --- Catalog ---

@register('all_paths')
def all_paths():
    return TargetSet(
        membership=lambda p: True,
        name='all_paths',
        hint_jk=(0, 0),
        batch_membership=lambda batch: np.ones(batch.size, dtype=bool),
        limit_membership=lambda block: np.ones(block.size, dtype=bool),
    )


@register('empty')
def empty():
    return TargetSet(
        membership=lambda p: False,
        name='empty',
        hint_delta=1.0,
        batch_membership=lambda batch: np.zeros(batch.size, dtype=bool),
        limit_membership=lambda block: np.zeros(block.size, dtype=bool),
    )


@register('terminal_above')
def terminal_above(a=1.0, strict=True):
    """{xi(1) > a}, or {xi(1) >= a} for the closure."""
    above = _compare(strict)

    def limit(block):
        return above(block.up_sizes.sum(axis=1) - block.down_sizes.sum(axis=1), a)

    return TargetSet(
        membership=lambda p: bool(above(eval_step(p, 1.0), a)),
        hint_delta=a,
        hint_jk=(1, 0),
        name='terminal_above' if strict else 'terminal_above_closure',
        batch_membership=lambda batch: above(batch.terminal(), a),
        limit_membership=limit,
    )


@register('moderate_jumps')
def moderate_jumps(a, b, c=0.0, strict=False):
    """sup_t (xi(t) - c t) >= a with every upward jump at most b."""
    if not (a > 0 and b > 0 and c >= 0):
        raise PreconditionError(f"Need a > 0, b > 0 and c >= 0, got a={a}, b={b}, c={c}.")
    j = math.ceil(a / b)
    reach = _compare(strict)

    def capped(sizes):
        return sizes < b if strict else sizes <= b + BOUND_TOL

    def member(p):
        levels = p.levels()[1:]
        peak = max((level - c * t for level, t in zip(levels, p.times)), default=0.0)
        return bool(reach(peak, a)) and all(capped(np.asarray(p.up_sizes())))

    def batch(batch):
        peak = np.max(batch.values - c * batch.times, axis=1)
        return reach(peak, a) & capped(batch.max_up)

    def limit(block):
        times, levels = _limit_levels(block)
        peak = np.max(levels - c * times, axis=1, initial=0.0)
        return reach(peak, a) & np.all(capped(block.up_sizes), axis=1)

    return TargetSet(
        membership=member,
        # j jumps of size <= b summing to at least a are each at least a - (j - 1) b
        hint_delta=a - (j - 1) * b,
        hint_jk=(j, 0),
        name='moderate_jumps',
        batch_membership=batch,
        limit_membership=limit,
    )


@register('ou_barrier')
def ou_barrier(kappa, a_plus, a_minus):
    """The OU image dips to -a_minus somewhere and ends at or above a_plus."""
    if not (a_plus > 0 and a_minus > 0):
        raise PreconditionError(f"Barrier levels must be positive, got {a_plus}, {a_minus}.")

    def member(p):
        low, _, terminal = ou_step_extremes(p, kappa)
        return low <= -a_minus and terminal >= a_plus

    def batch(batch):
        image = ou_transform(batch.values, kappa)
        return (image.min(axis=1) <= -a_minus) & (image[:, -1] >= a_plus)

    def limit(block):
        after, terminal = _ou_after_jumps(block, kappa)
        low = np.min(after, axis=1, initial=0.0)
        return (low <= -a_minus) & (terminal >= a_plus)

    return TargetSet(
        membership=member,
        hint_delta=(a_plus, a_minus),
        hint_jk=(1, 1),
        name='ou_barrier',
        batch_membership=batch,
        limit_membership=limit,
    )


@register('multiple_optima')
def multiple_optima(strict=False):
    """{|xi(t)| >= t - 1/2 for all t}; strict asks for > everywhere."""
    above = _compare(strict)

    def member(p):
        cuts = [*p.times, 1.0]
        return all(above(abs(level), end - 0.5) for level, end in zip(p.levels(), cuts))

    def batch(batch):
        return np.all(above(np.abs(batch.values), batch.times - 0.5), axis=1)

    def limit(block):
        times, levels = _limit_levels(block)
        ends = np.concatenate((times, np.ones((block.size, 1))), axis=1)
        levels = np.concatenate((np.zeros((block.size, 1)), levels), axis=1)
        return np.all(above(np.abs(levels), ends - 0.5), axis=1)

    return TargetSet(
        membership=member,
        hint_delta=0.5,
        hint_jk=(1, 0),
        name='multiple_optima' if not strict else 'multiple_optima_interior',
        batch_membership=batch,
        limit_membership=limit,
    )


@register('both_signs')
def both_signs(a=1.0):
    """sup xi > a and inf xi < -a: needs an upward and a downward jump."""

    def member(p):
        levels = p.levels()
        return levels.max() > a and levels.min() < -a

    def batch(batch):
        return (batch.values.max(axis=1) > a) & (batch.values.min(axis=1) < -a)

    def limit(block):
        _, levels = _limit_levels(block)
        return (np.max(levels, axis=1, initial=0.0) > a) & (np.min(levels, axis=1, initial=0.0) < -a)

    return TargetSet(
        membership=member,
        hint_delta=a,
        hint_jk=(1, 1),
        name='both_signs',
        batch_membership=batch,
        limit_membership=limit,
    )


@register('corridor')
def corridor(knots, lower, upper, strict=False):
    """{l <= xi <= u}; strict keeps a small margin from both bounds."""
    c = Corridor(knots, lower, upper)
    tol = -BOUND_TOL if strict else BOUND_TOL

    def batch(batch):
        t = batch.times
        return np.all((batch.values >= c.l(t) - tol) & (batch.values <= c.u(t) + tol), axis=1)

    return TargetSet(
        membership=lambda p: c.contains_step(p, tol=tol),
        hint_jk=optimal_jump_path(c).counts,
        name='corridor' if not strict else 'corridor_interior',
        batch_membership=batch,
        corridor=c,
    )
