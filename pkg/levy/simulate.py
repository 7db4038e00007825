# levy/simulate.py

"""
Samplers for scaled heavy-tailed processes on [0, 1].

Single-path samplers return ``GridPath``/``StepPath`` values. The ``*_batch``
variants draw a whole block of paths at once and return a ``PathBatch``; they
sample the same laws and are what the experiment runner uses.

Every sampler takes either an ``RngStream`` or a ``numpy.random.Generator``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .cadlag import GridPath, PathBatch, StepPath
from .exceptions import ModelDomainError, PreconditionError
from .levy_model import inverse_tail

logger = logging.getLogger(__name__)

_MAX_U64 = 2**64
DEFAULT_MIN_GRID = 1000


@dataclass(frozen=True)
class RngStream:
    """(seed, stream_id, path) names one independent numpy generator.

    ``generator()`` always restarts the stream; ``child(k)`` derives the k-th
    sub-stream, which is how batches get their randomness.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        for label, value in (('seed', self.seed), ('stream_id', self.stream_id)):
            if not isinstance(value, (int, np.integer)) or not 0 <= value < _MAX_U64:
                raise PreconditionError(f"RNG {label} must be an unsigned 64-bit integer, got {value!r}.")
        object.__setattr__(self, 'path', tuple(int(k) for k in self.path))

    def seed_sequence(self):
        return np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id), *self.path))

    def generator(self):
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def child(self, k):
        return RngStream(self.seed, self.stream_id, self.path + (int(k),))


def as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise PreconditionError(f"Expected an RngStream or numpy Generator, got {type(rng).__name__}.")


def default_grid(n):
    return max(int(n), DEFAULT_MIN_GRID)


def _check_scale(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise PreconditionError(f"Scale n must be a positive integer, got {n!r}.")


def _open_uniform(gen, size=None):
    """Uniforms on (0, 1]."""
    return 1.0 - gen.random(size)


@dataclass(frozen=True)
class IncrementModel:
    """Mean-zero increment law with exact Pareto tails beyond x0.

    P(S >= x) = c_plus * x**-alpha and P(S <= -x) = c_minus * x**-beta for
    x >= x0. The remaining mass is uniform on an interval inside (-x0, x0)
    whose centre cancels the mean of the two tails.
    """

    c_plus: float
    alpha: float
    c_minus: float = 0.0
    beta: float | None = None
    x0: float = 1.0

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, 'beta', self.alpha)
        if self.c_plus < 0 or self.c_minus < 0:
            raise ModelDomainError("Increment tail scales must be nonnegative.")
        if not (self.alpha > 1 and self.beta > 1):
            raise ModelDomainError(f"Increment tail indices must exceed 1, got {self.alpha}, {self.beta}.")
        if self.x0 < 0:
            raise ModelDomainError(f"Tail threshold x0 must be nonnegative, got {self.x0}.")
        if self.x0 == 0:
            if self.c_plus or self.c_minus:
                raise ModelDomainError("A zero tail threshold only describes the zero increment.")
            return
        if self.p_plus + self.p_minus > 1:
            raise ModelDomainError(
                f"Tail masses {self.p_plus:.4g} + {self.p_minus:.4g} at x0={self.x0} exceed 1."
            )
        if self.fill_mass == 0:
            if not math.isclose(self.tail_mean, 0.0, abs_tol=1e-12):
                raise ModelDomainError("Tails carry all the mass but do not balance to mean zero.")
        elif not abs(self.fill_centre) < self.x0:
            raise ModelDomainError(
                f"Cannot centre the increments: the fill on (-x0, x0) would need its mean at {self.fill_centre:.4g}."
            )

    @classmethod
    def zero(cls):
        return cls(c_plus=0.0, alpha=2.0, x0=0.0)

    @property
    def is_zero(self):
        return self.x0 == 0

    @property
    def p_plus(self):
        return self.c_plus * self.x0 ** (-self.alpha) if self.x0 > 0 else 0.0

    @property
    def p_minus(self):
        return self.c_minus * self.x0 ** (-self.beta) if self.x0 > 0 else 0.0

    @property
    def fill_mass(self):
        return 1.0 - self.p_plus - self.p_minus

    @property
    def tail_mean(self):
        up = self.p_plus * self.x0 * self.alpha / (self.alpha - 1.0)
        down = self.p_minus * self.x0 * self.beta / (self.beta - 1.0)
        return up - down

    @property
    def fill_centre(self):
        if self.fill_mass <= 0:
            return 0.0
        return -self.tail_mean / self.fill_mass

    @property
    def fill_half_width(self):
        return self.x0 - abs(self.fill_centre)

    def prob_at_least(self, x):
        """P(S >= x) for x > 0."""
        if not x > 0:
            raise ModelDomainError(f"Expected a positive level, got {x}.")
        if self.is_zero:
            return 0.0
        if x >= self.x0:
            return self.c_plus * x ** (-self.alpha)
        lo = self.fill_centre - self.fill_half_width
        hi = self.fill_centre + self.fill_half_width
        inside = min(max((hi - x) / (hi - lo), 0.0), 1.0) if hi > lo else 0.0
        return self.p_plus + self.fill_mass * inside

    def sample(self, gen, size):
        if self.is_zero:
            return np.zeros(size)
        pick = gen.random(size)
        up = self.x0 * _open_uniform(gen, size) ** (-1.0 / self.alpha)
        down = -self.x0 * _open_uniform(gen, size) ** (-1.0 / self.beta)
        fill = self.fill_centre + self.fill_half_width * (2.0 * gen.random(size) - 1.0)
        return np.where(pick < self.p_plus, up, np.where(pick < self.p_plus + self.p_minus, down, fill))


def sample_large_jumps(model, side, n, rng, block=64):
    """Jumps of X(n.)/n above n^-1 on one side, from the exponential-sum representation.

    Gamma_l = E_1 + ... + E_l is generated in blocks; the jump sizes are
    inverse_tail(n, Gamma_l)/n and the sampler stops at the first l whose
    inverse tail drops below 1.
    """
    _check_scale(n)
    side_model = model.side(side)
    if side_model is None:
        raise PreconditionError(f"The model has no '{side}' side.")
    gen = as_generator(rng)
    if side_model.is_null:
        return StepPath.zero()

    sizes = []
    offset = 0.0
    while True:
        gammas = offset + np.cumsum(gen.standard_exponential(block))
        q = np.atleast_1d(inverse_tail(model, side, n, gammas))
        small = np.flatnonzero(q < 1.0)
        if small.size:
            sizes.extend(q[: small[0]])
            break
        sizes.extend(q)
        offset = gammas[-1]

    sign = 1.0 if side == 'pos' else -1.0
    times = _open_uniform(gen, len(sizes))
    return StepPath.from_jumps(zip(times, sign * np.asarray(sizes) / n))


def _gaussian_part(model, n, m, gen, shape):
    """Brownian plus small-jump Gaussian increments over cells of width 1/m."""
    variance = model.sigma**2 + model.small_jump_variance()
    if variance == 0:
        return None
    return math.sqrt(variance / (m * n)) * gen.standard_normal(shape)


def sample_scaled_levy(model, n, rng, m_grid=None, return_jumps=False):
    """X_n(s)/n on the grid i/m_grid, centred so that its mean at s is drift * s.

    With ``return_jumps`` the exact large-jump StepPath is returned alongside.
    """
    _check_scale(n)
    m = m_grid or default_grid(n)
    gen = as_generator(rng)

    jumps = sample_large_jumps(model, 'pos', n, gen).jumps
    if model.neg is not None:
        jumps += sample_large_jumps(model, 'neg', n, gen).jumps
    step = StepPath.from_jumps(jumps)

    s = np.linspace(0.0, 1.0, m + 1)
    values = step.on_grid(m).values + (model.drift - model.centering_rate()) * s
    noise = _gaussian_part(model, n, m, gen, m)
    if noise is not None:
        values = values + np.concatenate(([0.0], np.cumsum(noise)))
    grid = GridPath(values)
    return (grid, step) if return_jumps else grid


def _scatter_jumps(gen, side_model, n, m, size):
    """Poisson(n nu_1) jumps per path with sizes Q_n(n nu_1 V)/n at uniform times."""
    rate = n * side_model.c
    counts = gen.poisson(rate, size)
    total = int(counts.sum())
    if total == 0:
        return None
    rows = np.repeat(np.arange(size), counts)
    sizes = np.atleast_1d(side_model.inverse(n, rate * _open_uniform(gen, total))) / n
    cells = np.maximum(np.ceil(_open_uniform(gen, total) * m).astype(int), 1)
    return rows, cells, sizes


def sample_scaled_levy_batch(model, n, size, rng, m_grid=None):
    """``size`` independent copies of sample_scaled_levy, as a PathBatch."""
    _check_scale(n)
    m = m_grid or default_grid(n)
    gen = as_generator(rng)

    increments = np.zeros((size, m + 1))
    max_up = np.zeros(size)
    max_down = np.zeros(size)
    for side_model, sign, largest in ((model.pos, 1.0, max_up), (model.neg, -1.0, max_down)):
        if side_model is None or side_model.is_null:
            continue
        scattered = _scatter_jumps(gen, side_model, n, m, size)
        if scattered is None:
            continue
        rows, cells, sizes = scattered
        np.add.at(increments, (rows, cells), sign * sizes)
        np.maximum.at(largest, rows, sizes)

    increments[:, 1:] += (model.drift - model.centering_rate()) / m
    noise = _gaussian_part(model, n, m, gen, (size, m))
    if noise is not None:
        increments[:, 1:] += noise
    return PathBatch(np.cumsum(increments, axis=1), max_up, max_down)


def sample_scaled_rw(inc, n, rng):
    """S_[nt]/n on the grid i/n."""
    _check_scale(n)
    gen = as_generator(rng)
    steps = inc.sample(gen, n)
    return GridPath(np.concatenate(([0.0], np.cumsum(steps))) / n)


def sample_scaled_rw_batch(inc, n, size, rng):
    _check_scale(n)
    gen = as_generator(rng)
    steps = inc.sample(gen, (size, n)) / n
    values = np.concatenate((np.zeros((size, 1)), np.cumsum(steps, axis=1)), axis=1)
    return PathBatch(values, np.maximum(steps.max(axis=1), 0.0), np.maximum(-steps.min(axis=1), 0.0))


def poisson_clock(n, rng):
    """Arrival times of a unit-rate Poisson process on [0, n], rescaled to (0, 1]."""
    _check_scale(n)
    gen = as_generator(rng)
    return np.sort(_open_uniform(gen, gen.poisson(n)))


def subordinated_walk(inc, n, rng, m_grid=None):
    """S_N(nt)/n with N an independent unit-rate Poisson clock, on the grid i/m_grid."""
    _check_scale(n)
    m = m_grid or n
    gen = as_generator(rng)
    arrivals = poisson_clock(n, gen)
    steps = inc.sample(gen, arrivals.size) / n
    cells = np.maximum(np.ceil(arrivals * m).astype(int), 1)
    return GridPath(np.cumsum(np.bincount(cells, weights=steps, minlength=m + 1)))


def subordinated_walk_batch(inc, n, size, rng, m_grid=None):
    """Batch of subordinated walks; ``sup_exact`` holds the supremum over all partial sums."""
    _check_scale(n)
    m = m_grid or n
    gen = as_generator(rng)

    counts = gen.poisson(n, size)
    total = int(counts.sum())
    rows = np.repeat(np.arange(size), counts)
    arrivals = _open_uniform(gen, total)
    steps = inc.sample(gen, total) / n

    increments = np.zeros((size, m + 1))
    cells = np.maximum(np.ceil(arrivals * m).astype(int), 1)
    np.add.at(increments, (rows, cells), steps)

    # the partial sums of a path do not depend on where its clock rings
    running = np.concatenate(([0.0], np.cumsum(steps)))
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    sup_exact = np.zeros(size)
    max_up = np.zeros(size)
    max_down = np.zeros(size)
    if total:
        np.maximum.at(sup_exact, rows, running[1:] - running[starts][rows])
        np.maximum.at(max_up, rows, np.maximum(steps, 0.0))
        np.maximum.at(max_down, rows, np.maximum(-steps, 0.0))
    return PathBatch(np.cumsum(increments, axis=1), max_up, max_down, sup_exact=sup_exact)


def _check_kappa(kappa):
    if not kappa >= 0 or not math.isfinite(kappa):
        raise ModelDomainError(f"Mean-reversion rate kappa must be a finite real >= 0, got {kappa}.")


def ou_transform(values, kappa):
    """xi(t) - kappa e^(-kappa t) int_0^t e^(kappa s) xi(s) ds on a uniform grid, row-wise.

    ``values`` is one path or a (paths, m + 1) block; the integral is trapezoidal.
    """
    _check_kappa(kappa)
    values = np.asarray(values, dtype=float)
    if kappa == 0:
        return values.copy()
    t = np.linspace(0.0, 1.0, values.shape[-1])
    integral = integrate.cumulative_trapezoid(np.exp(kappa * t) * values, t, axis=-1, initial=0.0)
    return values - kappa * np.exp(-kappa * t) * integral


def apply_ou(p, kappa, m_grid=None):
    """The OU image of a path on a uniform grid; exact for a StepPath."""
    _check_kappa(kappa)
    if isinstance(p, GridPath):
        return GridPath(ou_transform(p.values, kappa))
    if not isinstance(p, StepPath):
        raise PreconditionError(f"Cannot apply the OU map to {type(p).__name__}.")
    m = m_grid or DEFAULT_MIN_GRID
    t = np.linspace(0.0, 1.0, m + 1)
    values = np.zeros(m + 1)
    for u, s in p.jumps:
        after = t >= u - 1e-12
        values[after] += s * np.exp(-kappa * (t[after] - u))
    return GridPath(values)


def ou_step_value(p, kappa, t):
    _check_kappa(kappa)
    return float(sum(s * math.exp(-kappa * (t - u)) for u, s in p.jumps if u <= t))


def ou_step_extremes(p, kappa):
    """(inf, sup, terminal) of the OU image of a StepPath, exactly.

    Between jumps the image decays geometrically towards 0, so the extremes
    over [0, 1] are 0 or values right after a jump.
    """
    after_jumps = [ou_step_value(p, kappa, u) for u in p.times]
    return min([0.0, *after_jumps]), max([0.0, *after_jumps]), ou_step_value(p, kappa, 1.0)
