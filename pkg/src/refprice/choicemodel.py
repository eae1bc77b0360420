"""Segment-level utility, nested purchase-incidence / brand-choice probabilities and
the finite-mixture probability.

Brands are indexed 1..K in the public functions; brand K is the benchmark whose
intercept is fixed at zero.  Prices for several brands are passed as arrays of
shape ``(T, K)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit, logsumexp

from .errors import InvalidInputError
from .reference import reference_closed_form, reference_iterative

DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class SegmentParameters:
    """Choice-model coefficients for one latent segment.

    ``brand_intercepts`` holds the K-1 free intercepts; the benchmark brand K has
    an implicit intercept of zero.
    """

    pi: float
    alpha0: float
    alpha1: float
    brand_intercepts: tuple
    beta_g: float
    beta_l: float
    beta_p: float

    def __post_init__(self):
        for name in ("pi", "alpha0", "alpha1", "beta_g", "beta_l", "beta_p"):
            value = getattr(self, name)
            if isinstance(value, (bool, str)) or not math.isfinite(float(value)):
                raise InvalidInputError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if isinstance(self.brand_intercepts, (str, bytes)):
            raise InvalidInputError("brand_intercepts must be a sequence of numbers")
        intercepts = tuple(float(b) for b in self.brand_intercepts)
        if not all(math.isfinite(b) for b in intercepts):
            raise InvalidInputError("brand intercepts must be finite")
        object.__setattr__(self, "brand_intercepts", intercepts)
        if not 0.0 <= self.pi <= 1.0:
            raise InvalidInputError(f"pi must lie in [0, 1], got {self.pi}")
        if len(self.brand_intercepts) < 1:
            raise InvalidInputError("need at least two brands (one free intercept)")

    @property
    def n_brands(self):
        return len(self.brand_intercepts) + 1

    def intercept(self, brand):
        """Intercept of 1-based ``brand``; zero for the benchmark."""
        if not 1 <= brand <= self.n_brands:
            raise InvalidInputError(f"brand {brand} outside 1..{self.n_brands}")
        if brand == self.n_brands:
            return 0.0
        return self.brand_intercepts[brand - 1]

    def intercept_vector(self):
        return np.array(self.brand_intercepts + (0.0,))

    def as_dict(self):
        return {
            "pi": self.pi,
            "alpha0": self.alpha0,
            "alpha1": self.alpha1,
            "brand_intercepts": list(self.brand_intercepts),
            "beta_g": self.beta_g,
            "beta_l": self.beta_l,
            "beta_p": self.beta_p,
        }


@dataclass(frozen=True)
class MixtureParameters:
    """S segments and their population shares ``psi``."""

    segments: tuple
    psi: tuple = field(default=None)

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise InvalidInputError("a mixture needs at least one segment")
        psi = self.psi
        if psi is None and len(segments) == 1:
            psi = (1.0,)
        if psi is None:
            raise InvalidInputError("segment shares are required when S > 1")
        psi = tuple(float(v) for v in psi)
        if len(psi) != len(segments):
            raise InvalidInputError("need one share per segment")
        if any(not v > 0 for v in psi) or abs(math.fsum(psi) - 1.0) > 1e-12:
            raise InvalidInputError(f"segment shares must be a positive simplex, got {psi}")
        if len({s.n_brands for s in segments}) != 1:
            raise InvalidInputError("all segments must have the same number of brands")
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "psi", psi)

    @property
    def n_segments(self):
        return len(self.segments)

    @property
    def n_brands(self):
        return self.segments[0].n_brands


def _check_eps(eps):
    if not eps > 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")


def _brand_series(prices, brand):
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        return prices
    return prices[:, brand - 1]


def utility_branch(seg, prices, t, brand):
    """Utility of ``brand`` at 1-based period ``t`` with explicit gain/loss branches.

    Args:
        seg: SegmentParameters.
        prices: Price series of this brand (length T) or the full ``(T, K)`` matrix.
        t: Period, 1-based.
        brand: Brand index, 1-based.
    """
    p = _brand_series(prices, brand)
    r = reference_closed_form(p, seg.pi, t)
    price = p[t - 1]
    deviation = r - price
    coef = seg.beta_g if r > price else seg.beta_l
    return seg.intercept(brand) + seg.beta_p * price + deviation * coef


def utility_heaviside(seg, prices, t, brand, eps=DEFAULT_EPS):
    """Utility with the gain/loss coefficient written through step functions.

    The deviation is multiplied by ``beta_g**H(d - eps) * beta_l**H(-d)``; for
    ``|d| > eps`` this selects exactly one coefficient and agrees with
    `utility_branch`.
    """
    _check_eps(eps)
    p = _brand_series(prices, brand)
    r = reference_closed_form(p, seg.pi, t)
    price = p[t - 1]
    deviation = r - price
    coef = seg.beta_g ** _step(deviation - eps) * seg.beta_l ** _step(-deviation)
    return seg.intercept(brand) + seg.beta_p * price + deviation * coef


def _step(x):
    return 1 if x > 0 else 0


def segment_utilities(seg, prices, t=None):
    """Utilities of all K brands, by recursion, at period ``t`` or for every period.

    Args:
        prices: ``(T, K)`` price matrix.
        t: 1-based period, or None for the full ``(T, K)`` array.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 2 or prices.shape[1] != seg.n_brands:
        raise InvalidInputError(f"expected a (T, {seg.n_brands}) price matrix")
    ref = np.column_stack([reference_iterative(prices[:, k], seg.pi)
                           for k in range(prices.shape[1])])
    deviation = ref - prices
    coef = np.where(ref > prices, seg.beta_g, seg.beta_l)
    u = seg.intercept_vector() + seg.beta_p * prices + deviation * coef
    return u if t is None else u[t - 1]


def brand_probabilities(utilities):
    """Conditional brand-choice probabilities (softmax, max-shifted)."""
    u = np.asarray(utilities, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise InvalidInputError("need at least two utilities")
    return np.exp(u - logsumexp(u))


def category_value(utilities):
    """Inclusive value ``log sum_k exp(u_k)``."""
    u = np.asarray(utilities, dtype=float)
    if u.size < 1:
        raise InvalidInputError("need at least one utility")
    return float(logsumexp(u))


def incidence_probability(alpha0, alpha1, cv):
    """Probability of a category purchase, ``logistic(alpha0 + alpha1 * cv)``.

    Evaluated through the log so tiny probabilities stay subnormal instead of 0.
    """
    return math.exp(log_incidence_probability(alpha0, alpha1, cv))


def log_incidence_probability(alpha0, alpha1, cv):
    return float(log_expit(alpha0 + alpha1 * cv))


def joint_probability(seg, prices, t, brand):
    """Probability that ``brand`` is bought at period ``t`` under segment ``seg``.

    ``prices`` is the ``(T, K)`` price matrix covering at least periods 1..t.
    """
    if not 1 <= brand <= seg.n_brands:
        raise InvalidInputError(f"brand {brand} outside 1..{seg.n_brands}")
    u = segment_utilities(seg, prices, t)
    cv = category_value(u)
    return float(brand_probabilities(u)[brand - 1]) * incidence_probability(
        seg.alpha0, seg.alpha1, cv)


def no_purchase_probability(seg, prices, t):
    u = segment_utilities(seg, prices, t)
    return float(expit(-(seg.alpha0 + seg.alpha1 * category_value(u))))


def mixture_probability(mix, prices, t, brand):
    """Share-weighted joint probability across segments."""
    return math.fsum(psi * joint_probability(seg, prices, t, brand)
                     for seg, psi in zip(mix.segments, mix.psi))
