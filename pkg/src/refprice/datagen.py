"""Synthetic scanner panels drawn from a known mixture.

Prices follow a simple promotion process: each brand sits at its base price, is
discounted by ``promo_depth`` with probability ``promo_probability`` in a period,
and carries multiplicative log-normal jitter.  Households draw a segment once,
then in every period decide whether to buy and, if so, which brand, using the
model probabilities of that segment.

Each household gets its own child seed from ``numpy.random.SeedSequence`` so the
panel does not depend on generation order.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, softmax

from .choicemodel import MixtureParameters, segment_utilities
from .errors import InvalidInputError
from .panel import ChoicePanel

DEFAULT_BASE_PRICES = (1.0, 1.1, 1.05, 0.95)


@dataclass(frozen=True)
class PriceProcessConfig:
    base_prices: tuple = DEFAULT_BASE_PRICES
    promo_probability: float = 0.2
    promo_depth: float = 0.2
    noise_sd: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "base_prices", tuple(float(b) for b in self.base_prices))
        if len(self.base_prices) < 2 or any(not b > 0 for b in self.base_prices):
            raise InvalidInputError("need at least two positive base prices")
        if not 0.0 <= self.promo_probability <= 1.0:
            raise InvalidInputError("promo_probability must lie in [0, 1]")
        if not 0.0 <= self.promo_depth < 1.0:
            raise InvalidInputError("promo_depth must lie in [0, 1)")
        if not self.noise_sd >= 0:
            raise InvalidInputError("noise_sd must be non-negative")


@dataclass(frozen=True)
class SimulationSpec:
    mix: MixtureParameters
    n_households: int = 350
    n_periods: int = 104
    prices: PriceProcessConfig = field(default_factory=PriceProcessConfig)
    seed: int = 0
    shared_prices: bool = True

    def __post_init__(self):
        if self.n_households < 1:
            raise InvalidInputError("need at least one household")
        if self.n_periods < 2:
            raise InvalidInputError("need at least two periods")
        if len(self.prices.base_prices) != self.mix.n_brands:
            raise InvalidInputError(
                f"{len(self.prices.base_prices)} base prices for {self.mix.n_brands} brands")

    @property
    def n_brands(self):
        return self.mix.n_brands


def _seeds(spec):
    children = np.random.SeedSequence(spec.seed).spawn(spec.n_households + 1)
    return children[0], children[1:]


def _price_path(rng, n_periods, config):
    base = np.asarray(config.base_prices)
    shape = (n_periods, base.size)
    promo = rng.random(shape) < config.promo_probability
    jitter = np.exp(config.noise_sd * rng.standard_normal(shape))
    return base * (1.0 - config.promo_depth * promo) * jitter


def simulate_prices(spec):
    """``(N, T, K)`` array of prices; one shared path unless ``shared_prices`` is off."""
    store_seed, household_seeds = _seeds(spec)
    if spec.shared_prices:
        path = _price_path(np.random.default_rng(store_seed), spec.n_periods, spec.prices)
        return np.broadcast_to(path, (spec.n_households,) + path.shape).copy()
    return np.stack([_price_path(np.random.default_rng(s), spec.n_periods, spec.prices)
                     for s in household_seeds])


def outcome_probabilities(seg, prices):
    """``(T, K+1)`` outcome probabilities for one price path; column 0 is no purchase."""
    u = segment_utilities(seg, prices)
    cv = np.log(np.sum(np.exp(u - u.max(axis=1, keepdims=True)), axis=1)) + u.max(axis=1)
    buy = expit(seg.alpha0 + seg.alpha1 * cv)
    out = np.empty((u.shape[0], u.shape[1] + 1))
    out[:, 0] = 1.0 - buy
    out[:, 1:] = buy[:, None] * softmax(u, axis=1)
    return out


def simulate_panel(spec, return_segments=False):
    """Draw a ChoicePanel from the truth in ``spec``.

    Returns:
        The panel, or ``(panel, segments)`` with 0-based segment memberships when
        ``return_segments`` is true.
    """
    store_seed, household_seeds = _seeds(spec)
    mix = spec.mix
    psi = np.asarray(mix.psi)
    shared_path = None
    shared_probs = {}
    if spec.shared_prices:
        shared_path = _price_path(np.random.default_rng(store_seed), spec.n_periods, spec.prices)

    prices, choices, segments = [], [], []
    for seed in household_seeds:
        rng = np.random.default_rng(seed)
        if shared_path is None:
            path = _price_path(rng, spec.n_periods, spec.prices)
        else:
            path = shared_path
        s = int(rng.choice(psi.size, p=psi))
        if shared_path is None:
            probs = outcome_probabilities(mix.segments[s], path)
        else:
            if s not in shared_probs:
                shared_probs[s] = outcome_probabilities(mix.segments[s], path)
            probs = shared_probs[s]
        draws = rng.random(spec.n_periods)
        cdf = np.cumsum(probs, axis=1)
        outcome = np.minimum((draws[:, None] >= cdf).sum(axis=1), probs.shape[1] - 1)
        prices.append(path)
        choices.append(outcome)
        segments.append(s)

    panel = ChoicePanel(range(1, spec.n_households + 1), prices, choices)
    if return_segments:
        return panel, np.array(segments)
    return panel
