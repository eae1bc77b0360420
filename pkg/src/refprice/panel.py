"""In-memory household panels.

A `ChoicePanel` stores, per household, the price of every brand in every period
and the observed outcome of that period: ``0`` for no purchase, ``j`` (1..K) for a
purchase of brand ``j``.  Households may have different numbers of periods; the
arrays are padded to the longest history (prices repeat the last observed row,
choices are ``-1``) and ``n_periods`` records the true lengths.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

NO_PURCHASE = 0
PADDING = -1


@dataclass(frozen=True)
class Household:
    household_id: int
    prices: np.ndarray  # (T, K)
    choices: np.ndarray  # (T,), 0 = no purchase, j = brand j

    @property
    def n_periods(self):
        return self.prices.shape[0]

    @property
    def purchase(self):
        """Purchase indicator x_t."""
        return (self.choices > 0).astype(int)

    def indicators(self):
        """(T, K) matrix of brand-purchase indicators y_{j,t}."""
        k = self.prices.shape[1]
        return (self.choices[:, None] == np.arange(1, k + 1)[None, :]).astype(int)


class ChoicePanel:
    """Validated, immutable household panel.

    Args:
        household_ids: One integer id per household, unique.
        prices: Sequence of ``(T_i, K)`` arrays of strictly positive prices.
        choices: Sequence of length-``T_i`` integer arrays with values in 0..K.
    """

    def __init__(self, household_ids, prices, choices):
        ids = tuple(int(h) for h in household_ids)
        if not ids:
            raise InvalidInputError("panel has no households")
        if len(set(ids)) != len(ids):
            raise InvalidInputError("household ids must be unique")
        if not (len(prices) == len(choices) == len(ids)):
            raise InvalidInputError("ids, prices and choices must have equal length")

        price_list = [np.asarray(p, dtype=float) for p in prices]
        choice_list = [np.asarray(c, dtype=int) for c in choices]
        n_brands = price_list[0].shape[1] if price_list[0].ndim == 2 else 0
        if n_brands < 2:
            raise InvalidInputError("panel needs at least two brands")
        lengths = []
        for hid, p, c in zip(ids, price_list, choice_list):
            if p.ndim != 2 or p.shape[1] != n_brands or p.shape[0] < 1:
                raise InvalidInputError(f"household {hid}: price matrix must be (T, {n_brands})")
            if c.shape != (p.shape[0],):
                raise InvalidInputError(f"household {hid}: one outcome per period required")
            if not np.all(np.isfinite(p)) or np.any(p <= 0):
                raise InvalidInputError(f"household {hid}: prices must be finite and positive")
            if np.any(c < 0) or np.any(c > n_brands):
                raise InvalidInputError(f"household {hid}: outcomes must lie in 0..{n_brands}")
            lengths.append(p.shape[0])

        t_max = max(lengths)
        n = len(ids)
        all_prices = np.empty((n, t_max, n_brands))
        all_choices = np.full((n, t_max), PADDING, dtype=int)
        for i, (p, c) in enumerate(zip(price_list, choice_list)):
            t_i = p.shape[0]
            all_prices[i, :t_i] = p
            all_prices[i, t_i:] = p[-1]
            all_choices[i, :t_i] = c
        all_prices.flags.writeable = False
        all_choices.flags.writeable = False
        self._ids = ids
        self._prices = all_prices
        self._choices = all_choices
        self._lengths = np.array(lengths, dtype=int)
        self._lengths.flags.writeable = False

    @classmethod
    def from_arrays(cls, prices, choices, household_ids=None):
        """Build a balanced panel from ``(N, T, K)`` prices and ``(N, T)`` choices."""
        prices = np.asarray(prices, dtype=float)
        choices = np.asarray(choices, dtype=int)
        if household_ids is None:
            household_ids = range(1, prices.shape[0] + 1)
        return cls(household_ids, list(prices), list(choices))

    @property
    def household_ids(self):
        return self._ids

    @property
    def n_households(self):
        return len(self._ids)

    @property
    def n_brands(self):
        return self._prices.shape[2]

    @property
    def n_periods(self):
        """Per-household period counts."""
        return self._lengths

    @property
    def max_periods(self):
        return self._prices.shape[1]

    @property
    def prices(self):
        """Padded ``(N, T_max, K)`` price array (read-only)."""
        return self._prices

    @property
    def choices(self):
        """Padded ``(N, T_max)`` outcome array, ``-1`` marks padding (read-only)."""
        return self._choices

    @property
    def is_balanced(self):
        return bool(np.all(self._lengths == self.max_periods))

    def valid_mask(self):
        return self._choices != PADDING

    def household(self, i):
        t_i = self._lengths[i]
        return Household(self._ids[i], np.array(self._prices[i, :t_i]),
                         np.array(self._choices[i, :t_i]))

    def __iter__(self):
        for i in range(self.n_households):
            yield self.household(i)

    def __len__(self):
        return self.n_households

    def subset(self, indices):
        """Panel restricted to the households at the given positions, in that order."""
        hh = [self.household(int(i)) for i in indices]
        return ChoicePanel([h.household_id for h in hh], [h.prices for h in hh],
                           [h.choices for h in hh])

    def __eq__(self, other):
        if not isinstance(other, ChoicePanel):
            return NotImplemented
        return (self._ids == other._ids
                and np.array_equal(self._lengths, other._lengths)
                and np.array_equal(self._prices, other._prices)
                and np.array_equal(self._choices, other._choices))

    def __repr__(self):
        return (f"ChoicePanel(N={self.n_households}, T_max={self.max_periods}, "
                f"K={self.n_brands})")
