# levy/levy_model.py

"""
Regularly varying Levy measures.

A ``TailModel`` describes one side of the Levy measure through its tail
function ``x -> c * x**(-index) * (1 + ln x)**p`` for ``x >= 1``, frozen at
its ``x = 1`` value on ``(0, 1)``. A ``LevyModel`` pairs an upward tail with an
optional downward tail, a drift, a Brownian coefficient and a small-jump
policy. Everything here is a pure function of immutable values.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from .exceptions import ModelDomainError, PreconditionError

logger = logging.getLogger(__name__)

SIDES = ('pos', 'neg')
SLOW_VARIATIONS = ('constant', 'log_power')

# Absolute tolerance of the bisection behind inverse tails.
INVERSE_TOL = 1e-12
_MAX_BISECTIONS = 400


def _scalar_or_array(values, was_scalar):
    if was_scalar:
        return float(values.reshape(-1)[0])
    return values


@dataclass(frozen=True)
class TailModel:
    """One side of a regularly varying Levy measure."""

    c: float
    index: float
    slow_var: str = 'constant'
    p: float = 0.0

    def __post_init__(self):
        if not self.c >= 0 or not math.isfinite(self.c):
            raise ModelDomainError(f"Tail scale c must be a finite nonnegative real, got {self.c}.")
        if not self.index > 1 or not math.isfinite(self.index):
            raise ModelDomainError(f"Tail index must be a finite real > 1, got {self.index}.")
        if self.slow_var not in SLOW_VARIATIONS:
            raise ModelDomainError(
                f"Unknown slow variation '{self.slow_var}'. Choices are {', '.join(SLOW_VARIATIONS)}."
            )
        if self.slow_var == 'constant' and self.p != 0:
            raise ModelDomainError("A constant slowly varying part takes no power p.")
        if self.slow_var == 'log_power' and not (0 <= self.p < self.index):
            # p < index keeps the tail strictly decreasing on [1, inf)
            raise ModelDomainError(f"Log power p must satisfy 0 <= p < index, got p={self.p}.")

    @property
    def is_null(self):
        return self.c == 0

    def slowly_varying(self, x):
        """L(x) with tail(x) = L(x) * x**(-index) for x >= 1."""
        x = np.maximum(np.asarray(x, dtype=float), 1.0)
        if self.slow_var == 'constant':
            return self.c * np.ones_like(x)
        return self.c * (1.0 + np.log(x)) ** self.p

    def tail(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        if np.any(~(x > 0)):
            raise ModelDomainError("Tail arguments must be strictly positive.")
        xx = np.maximum(x, 1.0)
        values = self.slowly_varying(xx) * xx ** (-self.index)
        return _scalar_or_array(np.atleast_1d(values), scalar)

    def inverse(self, n, y):
        """inf{s > 0 : n * tail(s) < y}, vectorised over y."""
        if n < 1:
            raise ModelDomainError(f"Scale n must be a positive integer, got {n}.")
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(~(y > 0)):
            raise ModelDomainError("Inverse-tail levels y must be strictly positive.")

        out = np.zeros_like(y)
        top = n * self.c  # n * tail(0+) = n * tail(1)
        inside = y <= top
        if not np.any(inside):
            return _scalar_or_array(out, scalar)

        targets = y[inside]
        if self.slow_var == 'constant':
            out[inside] = np.maximum((top / targets) ** (1.0 / self.index), 1.0)
            return _scalar_or_array(out, scalar)

        lo = np.ones_like(targets)
        hi = np.full_like(targets, 2.0)
        while True:
            short = n * self.tail(hi) >= targets
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)

        for _ in range(_MAX_BISECTIONS):
            tol = np.maximum(INVERSE_TOL, 4 * np.spacing(hi))
            if np.all(hi - lo <= tol):
                break
            mid = 0.5 * (lo + hi)
            below = n * self.tail(mid) < targets
            hi = np.where(below, mid, hi)
            lo = np.where(below, lo, mid)
        out[inside] = hi
        return _scalar_or_array(out, scalar)

    def integral_above_one(self):
        """Closed form of int_1^inf tail(x) dx."""
        k = self.index - 1.0
        if self.is_null:
            return 0.0
        if self.slow_var == 'constant':
            return self.c / k
        # x = e^s, w = 1 + s:  c e^k Gamma(p + 1, k) / k^(p + 1)
        upper_gamma = special.gammaincc(self.p + 1.0, k) * special.gamma(self.p + 1.0)
        return self.c * math.exp(k) * upper_gamma / k ** (self.p + 1.0)

    def first_moment_above_one(self):
        """int_[1, inf) x nu(dx), by parts: tail(1) + int_1^inf tail."""
        return self.c + self.integral_above_one()

    def small_jump_second_moment(self, eps):
        """int_[eps, 1) x^2 nu(dx) under the power-law density c*index*x^(-index-1)."""
        if not 0 < eps <= 1:
            raise ModelDomainError(f"Small-jump cutoff must lie in (0, 1], got {eps}.")
        if self.is_null or eps == 1:
            return 0.0
        a = self.index
        if math.isclose(a, 2.0):
            return self.c * a * math.log(1.0 / eps)
        return self.c * a * (1.0 - eps ** (2.0 - a)) / (2.0 - a)


@dataclass(frozen=True)
class LevyModel:
    """Two-sided regularly varying Levy measure with drift and Brownian part."""

    pos: TailModel
    neg: TailModel | None = None
    drift: float = 0.0
    sigma: float = 0.0
    small_jump_eps: float | None = None

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ModelDomainError(f"Brownian coefficient sigma must be >= 0, got {self.sigma}.")
        if self.small_jump_eps is not None and not 0 < self.small_jump_eps <= 1:
            raise ModelDomainError(f"Small-jump cutoff eps must lie in (0, 1], got {self.small_jump_eps}.")

    @property
    def alpha(self):
        return self.pos.index

    @property
    def beta(self):
        return self.neg.index if self.neg is not None else None

    @property
    def spectrally_positive(self):
        return self.neg is None

    @property
    def symmetric_tails(self):
        """Whether nu(-inf, -x] equals nu[x, inf) for every x."""
        return self.neg is not None and self.neg == self.pos

    def side(self, side):
        if side not in SIDES:
            raise ModelDomainError(f"Side must be one of {SIDES}, got '{side}'.")
        return self.pos if side == 'pos' else self.neg

    def centering_rate(self):
        """mu_1^+ nu_1^+ - mu_1^- nu_1^-, the compensator of the jumps above 1."""
        rate = self.pos.first_moment_above_one()
        if self.neg is not None:
            rate -= self.neg.first_moment_above_one()
        return rate

    def small_jump_variance(self):
        """Variance rate of the Gaussian stand-in for jumps in [eps, 1)."""
        if self.small_jump_eps is None:
            return 0.0
        total = self.pos.small_jump_second_moment(self.small_jump_eps)
        if self.neg is not None:
            total += self.neg.small_jump_second_moment(self.small_jump_eps)
        return total

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        neg = data.get('neg')
        return cls(
            pos=TailModel(**data['pos']),
            neg=TailModel(**neg) if neg else None,
            drift=data.get('drift', 0.0),
            sigma=data.get('sigma', 0.0),
            small_jump_eps=data.get('small_jump_eps'),
        )


def tail(model, side, x):
    """nu[x, inf) for side='pos', nu(-inf, -x] for side='neg'; 0 for an absent side."""
    side_model = model.side(side)
    if side_model is None:
        if np.any(~(np.asarray(x, dtype=float) > 0)):
            raise ModelDomainError("Tail arguments must be strictly positive.")
        return 0.0 if np.ndim(x) == 0 else np.zeros(np.shape(x))
    return side_model.tail(x)


def inverse_tail(model, side, n, y):
    """Q_n^<=(y) = inf{s > 0 : n * tail(side, s) < y}."""
    side_model = model.side(side)
    if side_model is None:
        return 0.0 if np.ndim(y) == 0 else np.zeros(np.shape(y))
    return side_model.inverse(n, y)


def truncated_mean(model, side):
    """(nu_1, mu_1) of one side: the mass above 1 and the mean jump above 1."""
    side_model = model.side(side)
    if side_model is None:
        raise PreconditionError(f"The model has no '{side}' side.")
    if side_model.is_null:
        raise PreconditionError(f"The '{side}' side carries no mass above 1.")
    nu_1 = side_model.c
    mu_1 = 1.0 + side_model.integral_above_one() / nu_1
    return nu_1, mu_1


def truncated_mean_by_quadrature(model, side):
    """Adaptive-quadrature evaluation of mu_1, used to cross-check the closed forms."""
    side_model = model.side(side)
    if side_model is None or side_model.is_null:
        raise PreconditionError(f"The '{side}' side carries no mass above 1.")
    integral, _ = integrate.quad(side_model.tail, 1.0, np.inf, limit=200)
    return side_model.c, 1.0 + integral / side_model.c


def rate_cost(alpha, beta, j, k):
    """I(j, k) = (alpha - 1) j + (beta - 1) k."""
    if not (alpha > 1 and beta > 1):
        raise ModelDomainError(f"Tail indices must exceed 1, got alpha={alpha}, beta={beta}.")
    if j < 0 or k < 0:
        raise ModelDomainError(f"Jump counts must be nonnegative, got j={j}, k={k}.")
    return (alpha - 1.0) * j + (beta - 1.0) * k
