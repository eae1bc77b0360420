"""Memory-based reference prices.

The reference price of a brand evolves as an exponentially weighted average of
past prices::

    r[1] = p[1]
    r[t] = pi * r[t-1] + (1 - pi) * p[t-1]        (t >= 2)

which unrolls into the non-iterative form::

    r[t] = pi**(t-1) * p[1] + (1 - pi) * sum_{i=1}^{t-1} pi**(i-1) * p[t-i]

`reference_iterative` evaluates the recursion for a whole series in O(T);
`reference_closed_form` evaluates the direct sum for one period in O(t) and is kept
independent of the recursion so the two can be checked against each other.

Periods are 1-based in the public functions, matching the usual notation.
"""

import numpy as np

from .errors import InvalidInputError


def _as_price_series(prices):
    arr = np.asarray(prices, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("price series must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidInputError("prices must be finite and strictly positive")
    return arr


def _check_pi(pi):
    pi = float(pi)
    if not 0.0 <= pi <= 1.0:
        raise InvalidInputError(f"carry-over weight must lie in [0, 1], got {pi}")
    return pi


def reference_iterative(prices, pi):
    """Reference price series by forward recursion.

    Args:
        prices: Observed prices for one brand, periods 1..T.
        pi: Carry-over weight in [0, 1].

    Returns:
        numpy.ndarray of length T with ``values[0] == prices[0]``.
    """
    p = _as_price_series(prices)
    pi = _check_pi(pi)
    r = np.empty_like(p)
    r[0] = p[0]
    for t in range(1, p.size):
        r[t] = pi * r[t - 1] + (1.0 - pi) * p[t - 1]
    return r


def reference_closed_form(prices, pi, t):
    """Reference price at period ``t`` (1-based) by direct summation.

    The geometric weights are built by repeated multiplication; no logarithms or
    ``pow`` calls are involved, so the result stays within rounding distance of
    the recursion even for ``pi`` close to one.
    """
    p = _as_price_series(prices)
    pi = _check_pi(pi)
    if isinstance(t, bool) or int(t) != t:
        raise InvalidInputError(f"period index must be an integer, got {t!r}")
    t = int(t)
    if not 1 <= t <= p.size:
        raise InvalidInputError(f"period {t} outside 1..{p.size}")

    total = 0.0
    weight = 1.0  # pi**(i-1)
    for i in range(1, t):
        total += weight * p[t - i - 1]
        weight *= pi
    # after the loop weight == pi**(t-1)
    return weight * p[0] + (1.0 - pi) * total


def reference_closed_form_series(prices, pi):
    """Direct-summation reference prices for every period of many series at once.

    Vectorised counterpart of `reference_closed_form`: same summation order and
    repeated-multiplication weights, so it costs O(T**2) per series.

    Args:
        prices: Array of shape ``(..., T)``.
        pi: Carry-over weights broadcastable to ``prices.shape[:-1]``.

    Returns:
        Array with the shape of ``prices``.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.ndim < 1 or prices.shape[-1] == 0:
        raise InvalidInputError("need at least one period")
    if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
        raise InvalidInputError("prices must be finite and strictly positive")
    pi = np.broadcast_to(np.asarray(pi, dtype=float), prices.shape[:-1])
    if np.any((pi < 0) | (pi > 1)) or np.any(np.isnan(pi)):
        raise InvalidInputError("carry-over weights must lie in [0, 1]")
    out = np.empty_like(prices)
    for t in range(1, prices.shape[-1] + 1):
        total = np.zeros(prices.shape[:-1])
        weight = np.ones(prices.shape[:-1])
        for i in range(1, t):
            total += weight * prices[..., t - i - 1]
            weight *= pi
        out[..., t - 1] = weight * prices[..., 0] + (1.0 - pi) * total
    return out


def geometric_weight_total(pi, t):
    """Total weight ``pi**(t-1) + (1-pi) * sum_{i<t} pi**(i-1)`` of the direct sum.

    Equals one in exact arithmetic; exposed so callers can measure drift.
    """
    pi = _check_pi(pi)
    total = 0.0
    weight = 1.0
    for _ in range(1, t):
        total += weight
        weight *= pi
    return weight + (1.0 - pi) * total


def reference_prices(prices, pi):
    """Vectorised recursion along the period axis.

    Args:
        prices: Array of shape ``(..., T, K)``; period is the second-to-last axis.
        pi: Scalar carry-over weight.

    Returns:
        Array of reference prices with the shape of ``prices``.
    """
    prices = np.asarray(prices, dtype=float)
    pi = _check_pi(pi)
    r = np.empty_like(prices)
    r[..., 0, :] = prices[..., 0, :]
    for t in range(1, prices.shape[-2]):
        r[..., t, :] = pi * r[..., t - 1, :] + (1.0 - pi) * prices[..., t - 1, :]
    return r


def reference_prices_with_derivative(prices, pi):
    """Reference prices and their derivative with respect to the carry-over weight.

    Differentiating the recursion gives ``dr[t] = r[t-1] - p[t-1] + pi * dr[t-1]``
    with ``dr[1] = 0``.

    Args:
        prices: Array of shape ``(G, T, K)``.
        pi: Array of shape ``(S,)``.

    Returns:
        Tuple ``(r, dr)`` of arrays with shape ``(S, G, T, K)``.
    """
    prices = np.asarray(prices, dtype=float)
    pi = np.asarray(pi, dtype=float).reshape(-1, 1, 1)
    n_seg = pi.shape[0]
    g, n_t, k = prices.shape
    r = np.empty((n_seg, g, n_t, k))
    dr = np.empty_like(r)
    r[:, :, 0, :] = prices[None, :, 0, :]
    dr[:, :, 0, :] = 0.0
    for t in range(1, n_t):
        prev_r = r[:, :, t - 1, :]
        prev_p = prices[None, :, t - 1, :]
        r[:, :, t, :] = pi * prev_r + (1.0 - pi) * prev_p
        dr[:, :, t, :] = prev_r - prev_p + pi * dr[:, :, t - 1, :]
    return r, dr


def heaviside(x):
    """Unit step with ``H(0) = 0``."""
    return 1 if x > 0 else 0


def gain_loss(r, p):
    """Classify the deviation of reference price ``r`` from price ``p``.

    Returns:
        Tuple ``(branch, deviation)`` where ``branch`` is ``"gain"`` when ``r > p``
        and ``"loss"`` otherwise, and ``deviation`` is the signed ``r - p``.
    """
    deviation = float(r) - float(p)
    return ("gain" if deviation > 0 else "loss"), deviation
