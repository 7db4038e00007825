# levy/limit_measures.py

"""
Limit measures C_{j,k}: the Pareto change-of-measure estimator, the
conditional path sampler and closed forms / quadratures used as oracles.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .cadlag import StepPath
from .exceptions import ModelDomainError, NoAcceptanceError, PreconditionError, QuadratureError
from .simulate import as_generator

logger = logging.getLogger(__name__)

DEFAULT_BLOCK = 50_000


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo estimate; ``stderr`` is the estimator's sample std / sqrt(n_samples)."""

    value: float
    stderr: float
    n_samples: int
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_hits(cls, hits, n_samples, scale=1.0, params=None):
        if n_samples < 1:
            raise PreconditionError(f"An estimate needs at least one sample, got {n_samples}.")
        p = hits / n_samples
        return cls(
            value=scale * p,
            stderr=scale * math.sqrt(p * (1.0 - p) / n_samples),
            n_samples=int(n_samples),
            params=dict(params or {}),
        )

    @classmethod
    def pooled(cls, estimates, params=None):
        """Merge estimates of one quantity by pooling first and second moments, in the given order."""
        estimates = list(estimates)
        if not estimates:
            raise PreconditionError("Nothing to pool.")
        total = sum(e.n_samples for e in estimates)
        mean = sum(e.n_samples * e.value for e in estimates) / total
        second = sum(e.n_samples * (e.stderr**2 * e.n_samples + e.value**2) for e in estimates) / total
        variance = max(second - mean**2, 0.0)
        merged_params = dict(estimates[0].params) if params is None else dict(params)
        return cls(value=mean, stderr=math.sqrt(variance / total), n_samples=total, params=merged_params)

    def within(self, target, bands=3.0, other=None):
        """|value - target| <= bands * stderr, with another estimate's error added in quadrature."""
        spread = self.stderr**2 + (other.stderr**2 if other is not None else 0.0)
        reference = other.value if other is not None else target
        return abs(self.value - reference) <= bands * math.sqrt(spread) + 1e-12

    def to_record(self):
        return {
            'value': self.value,
            'stderr': self.stderr,
            'n_samples': self.n_samples,
            'params': self.params,
        }


@dataclass(frozen=True)
class LimitConfig:
    """Jump sizes and times of one draw: ``up`` and ``down`` are (size, time) pairs."""

    up: tuple = ()
    down: tuple = ()

    @property
    def counts(self):
        return len(self.up), len(self.down)

    def step_path(self):
        jumps = [(t, x) for x, t in self.up] + [(t, -y) for y, t in self.down]
        return StepPath.from_jumps(jumps)


@dataclass(frozen=True, eq=False)
class LimitBlock:
    """A block of limit configurations as arrays of shape (size, j) and (size, k)."""

    up_sizes: np.ndarray
    up_times: np.ndarray
    down_sizes: np.ndarray
    down_times: np.ndarray

    @property
    def size(self):
        return self.up_sizes.shape[0]

    def config(self, i):
        return LimitConfig(
            up=tuple(zip(self.up_sizes[i].tolist(), self.up_times[i].tolist())),
            down=tuple(zip(self.down_sizes[i].tolist(), self.down_times[i].tolist())),
        )

    def paths(self):
        for i in range(self.size):
            yield self.config(i).step_path()


def _check_limit_args(alpha, beta, j, k, delta_plus, delta_minus):
    if j < 0 or k < 0:
        raise PreconditionError(f"Jump counts must be nonnegative, got j={j}, k={k}.")
    if j > 0 and not (alpha > 1 and delta_plus is not None and delta_plus > 0):
        raise PreconditionError(f"Upward jumps need alpha > 1 and a positive floor, got {alpha}, {delta_plus}.")
    if k > 0 and not (beta is not None and beta > 1 and delta_minus is not None and delta_minus > 0):
        raise PreconditionError(f"Downward jumps need beta > 1 and a positive floor, got {beta}, {delta_minus}.")


def _pareto(gen, index, floor, shape):
    return floor * (1.0 - gen.random(shape)) ** (-1.0 / index)


def _bad_times(times):
    """Rows with a time outside (0, 1) or two coincident times."""
    bad = np.any((times <= 0.0) | (times >= 1.0), axis=1)
    if times.shape[1] > 1:
        ordered = np.sort(times, axis=1)
        bad |= np.any(np.diff(ordered, axis=1) == 0.0, axis=1)
    return bad


def sample_limit_block(alpha, beta, j, k, delta_plus, delta_minus, size, rng):
    """``size`` draws of the Pareto product law with uniform jump times."""
    _check_limit_args(alpha, beta, j, k, delta_plus, delta_minus)
    gen = as_generator(rng)
    up_sizes = _pareto(gen, alpha, delta_plus, (size, j)) if j else np.zeros((size, 0))
    down_sizes = _pareto(gen, beta, delta_minus, (size, k)) if k else np.zeros((size, 0))
    times = gen.random((size, j + k))
    bad = _bad_times(times)
    while np.any(bad):
        times[bad] = gen.random((int(bad.sum()), j + k))
        bad = _bad_times(times)
    return LimitBlock(up_sizes, times[:, :j], down_sizes, times[:, j:])


def sample_limit_config(alpha, beta, j, k, delta_plus, delta_minus, rng):
    return sample_limit_block(alpha, beta, j, k, delta_plus, delta_minus, 1, rng).config(0)


def _resolve_floors(A, j, k, delta_plus, delta_minus):
    hinted = A.floors()
    if delta_plus is None and hinted is not None:
        delta_plus = hinted[0]
    if delta_minus is None and hinted is not None:
        delta_minus = hinted[1]
    if (j > 0 and delta_plus is None) or (k > 0 and delta_minus is None):
        raise PreconditionError(
            f"No jump-size floor for target '{A.name}'; pass delta_plus/delta_minus explicitly."
        )
    for floor in (delta_plus, delta_minus):
        if floor is not None and not floor > 0:
            raise PreconditionError(f"Jump-size floors must be positive, got {floor}.")
    return delta_plus, delta_minus


def _block_hits(A, block):
    if A.limit_membership is not None:
        return np.asarray(A.limit_membership(block), dtype=bool)
    return np.fromiter((A.contains(p) for p in block.paths()), dtype=bool, count=block.size)


def change_of_measure_weight(alpha, beta, j, k, delta_plus, delta_minus):
    """delta_plus^(-j alpha) delta_minus^(-k beta) / (j! k!)."""
    weight = 1.0 / (math.factorial(j) * math.factorial(k))
    if j:
        weight *= delta_plus ** (-j * alpha)
    if k:
        weight *= delta_minus ** (-k * beta)
    return weight


def estimate_C(A, alpha, beta, j, k, delta_plus=None, delta_minus=None, N=100_000, rng=None,
               block_size=DEFAULT_BLOCK):
    """Unbiased estimate of C_{j,k}(A) from N Pareto-jump configurations.

    Valid when every member of A with j up and k down jumps has up-jumps
    >= delta_plus and down-jumps >= delta_minus; the floors default to the
    target's ``hint_delta``.
    """
    if N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N}.")
    delta_plus, delta_minus = _resolve_floors(A, j, k, delta_plus, delta_minus)
    _check_limit_args(alpha, beta, j, k, delta_plus, delta_minus)
    gen = as_generator(rng)

    hits = 0
    remaining = N
    while remaining:
        size = min(block_size, remaining)
        block = sample_limit_block(alpha, beta, j, k, delta_plus, delta_minus, size, gen)
        hits += int(_block_hits(A, block).sum())
        remaining -= size

    params = {
        'target': A.name, 'alpha': alpha, 'beta': beta, 'j': j, 'k': k,
        'delta_plus': delta_plus, 'delta_minus': delta_minus,
    }
    weight = change_of_measure_weight(alpha, beta, j, k, delta_plus, delta_minus)
    estimate = Estimate.from_hits(hits, N, scale=weight, params=params)
    logger.debug(f"C_{j},{k}({A.name}) ~ {estimate.value:.6g} +- {estimate.stderr:.2g} from {N} draws")
    return estimate


def rejection_sample(B, alpha, beta, j, k, delta_plus=None, delta_minus=None, proposals=10_000, rng=None,
                     block_size=DEFAULT_BLOCK):
    """Propose ``proposals`` configurations; return the accepted step paths and the acceptance-rate estimate."""
    if proposals < 1:
        raise PreconditionError(f"Need at least one proposal, got {proposals}.")
    delta_plus, delta_minus = _resolve_floors(B, j, k, delta_plus, delta_minus)
    gen = as_generator(rng)

    accepted = []
    remaining = proposals
    while remaining:
        size = min(block_size, remaining)
        block = sample_limit_block(alpha, beta, j, k, delta_plus, delta_minus, size, gen)
        for i in np.flatnonzero(_block_hits(B, block)):
            accepted.append(block.config(int(i)).step_path())
        remaining -= size

    rate = Estimate.from_hits(len(accepted), proposals, params={'target': B.name, 'j': j, 'k': k})
    return accepted, rate


def conditional_sample(B, alpha, beta, j, k, delta_plus=None, delta_minus=None, rng=None, max_tries=10_000):
    """First proposal whose step path lies in B."""
    if max_tries < 1:
        raise PreconditionError(f"max_tries must be at least 1, got {max_tries}.")
    delta_plus, delta_minus = _resolve_floors(B, j, k, delta_plus, delta_minus)
    gen = as_generator(rng)
    for _ in range(max_tries):
        config = sample_limit_config(alpha, beta, j, k, delta_plus, delta_minus, gen)
        path = config.step_path()
        if B.contains(path):
            return path
    raise NoAcceptanceError(tries=max_tries, accepted=0)


def C1_corridor_closed_form(a, b, c, alpha):
    """int_0^1 max(0, (a + c u)^-alpha - b^-alpha) du; ``b`` may be infinite."""
    if not (0 < a < b):
        raise ModelDomainError(f"Need 0 < a < b, got a={a}, b={b}.")
    if not c >= 0:
        raise ModelDomainError(f"Slope c must be nonnegative, got {c}.")
    if not alpha > 1:
        raise ModelDomainError(f"Tail index must exceed 1, got {alpha}.")
    cap = 0.0 if math.isinf(b) else b ** (-alpha)
    if c == 0:
        return a ** (-alpha) - cap
    u_max = min(1.0, (b - a) / c)
    head = (a ** (1.0 - alpha) - (a + c * u_max) ** (1.0 - alpha)) / (c * (alpha - 1.0))
    return head - u_max * cap


def C11_ou_quadrature(a_plus, a_minus, kappa, alpha, beta, tol=1e-6):
    """C_{1,1} of the OU barrier set by nested adaptive quadrature.

    One down-jump y >= a_minus at v followed by one up-jump at u > v large
    enough to end above a_plus; the up-jump size integral is done in closed form.
    """
    if not (a_plus > 0 and a_minus > 0):
        raise ModelDomainError(f"Barrier levels must be positive, got {a_plus}, {a_minus}.")
    if not kappa >= 0:
        raise ModelDomainError(f"kappa must be nonnegative, got {kappa}.")
    if not (alpha > 1 and beta > 1):
        raise ModelDomainError(f"Tail indices must exceed 1, got {alpha}, {beta}.")

    def integrand(u, y, v):
        g = a_plus * math.exp(kappa * (1.0 - u)) + y * math.exp(-kappa * (u - v))
        return g ** (-alpha) * beta * y ** (-beta - 1.0)

    with warnings.catch_warnings():
        warnings.simplefilter('error', integrate.IntegrationWarning)
        try:
            value, error = integrate.nquad(
                integrand,
                [lambda y, v: (v, 1.0), (a_minus, math.inf), (0.0, 1.0)],
                opts={'epsrel': tol, 'epsabs': 1e-14, 'limit': 200},
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"OU barrier quadrature did not converge: {exc}") from exc
    if error > max(tol * abs(value), 1e-14):
        logger.warning(f"OU barrier quadrature error estimate {error:.2g} exceeds the requested tolerance.")
    return value
