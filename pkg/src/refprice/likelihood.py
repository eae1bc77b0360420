"""Household-level finite-mixture log-likelihood.

Segment membership is a household attribute: the likelihood of household ``i`` is
``sum_s psi_s prod_t Pr_s(outcome_{i,t})`` and the panel log-likelihood sums the
logs of those terms.  Every period contributes exactly one of K+1 outcome
probabilities (a brand purchase or no purchase).

`PanelLikelihood` precomputes what does not depend on parameters.  Households
sharing an identical price path (store-level pricing) share their utilities, so
the expensive part of an evaluation scales with the number of distinct price
paths rather than households.  The per-household sums run in a fixed order so
repeated evaluations are bit-identical.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit, logsumexp

from .choicemodel import DEFAULT_EPS, MixtureParameters
from .errors import InvalidInputError
from .panel import ChoicePanel
from .reference import reference_prices_with_derivative

LOG_FLOOR = -745.0
FORMS = ("branch", "heaviside")


def log_sum_exp(values):
    """``log(sum(exp(values)))`` with max-shift; ``-inf`` only if every input is."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InvalidInputError("log_sum_exp of an empty list")
    m = np.max(v)
    if np.isneginf(m):
        return -np.inf
    return float(m + np.log(np.sum(np.exp(v - m))))


@dataclass(frozen=True)
class LogLikelihoodValue:
    value: float
    per_household: np.ndarray
    floor_events: int = 0

    def __float__(self):
        return self.value


@dataclass
class Evaluation:
    """Result of one likelihood evaluation.

    Gradient arrays are with respect to the natural parameters, one row per
    segment; ``d_intercepts`` covers the K-1 free intercepts only and ``d_psi``
    is the derivative with respect to the shares themselves.
    """

    value: float
    per_household: np.ndarray
    floor_events: int
    posterior: np.ndarray
    d_pi: np.ndarray = None
    d_alpha0: np.ndarray = None
    d_alpha1: np.ndarray = None
    d_intercepts: np.ndarray = None
    d_beta_g: np.ndarray = None
    d_beta_l: np.ndarray = None
    d_beta_p: np.ndarray = None
    d_psi: np.ndarray = None


def _stack(mix):
    segs = mix.segments
    return dict(
        pi=np.array([s.pi for s in segs]),
        alpha0=np.array([s.alpha0 for s in segs]),
        alpha1=np.array([s.alpha1 for s in segs]),
        intercepts=np.array([s.brand_intercepts for s in segs]),
        beta_g=np.array([s.beta_g for s in segs]),
        beta_l=np.array([s.beta_l for s in segs]),
        beta_p=np.array([s.beta_p for s in segs]),
        psi=np.array(mix.psi),
    )


class PanelLikelihood:
    """Mixture log-likelihood of a fixed panel.

    Args:
        panel: ChoicePanel.
        period_mask: Optional ``(N, T_max)`` boolean array; only periods marked True
            enter the likelihood.  Reference prices are still built from the whole
            price history.
        form: ``"branch"`` (coefficient chosen by ``r > p``) or ``"heaviside"``
            (coefficient ``beta_g**H(d - eps) * beta_l**H(-d)``).
        eps: Shift used by the heaviside form.
    """

    def __init__(self, panel, period_mask=None, form="branch", eps=DEFAULT_EPS):
        if not isinstance(panel, ChoicePanel):
            raise InvalidInputError("panel must be a ChoicePanel")
        if form not in FORMS:
            raise InvalidInputError(f"unknown utility form {form!r}")
        if not eps > 0:
            raise InvalidInputError("eps must be positive")
        self.panel = panel
        self.form = form
        self.eps = float(eps)
        n, t_max, k = panel.prices.shape
        self.n_brands = k

        mask = panel.valid_mask()
        if period_mask is not None:
            period_mask = np.asarray(period_mask, dtype=bool)
            if period_mask.shape != mask.shape:
                raise InvalidInputError("period mask must have shape (N, T_max)")
            mask = mask & period_mask
        self.mask = mask

        # one-hot outcomes: column 0 = no purchase, column j = brand j
        y = np.zeros((n, t_max, k + 1))
        ii, tt = np.nonzero(mask)
        y[ii, tt, panel.choices[ii, tt]] = 1.0
        self._y = y.reshape(n, -1)

        flat = panel.prices.reshape(n, -1)
        paths, inverse = np.unique(flat, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        self._paths = paths.reshape(-1, t_max, k)
        self._members = [np.flatnonzero(inverse == g) for g in range(paths.shape[0])]

    @property
    def n_price_paths(self):
        return self._paths.shape[0]

    def loglik(self, mix):
        """Mixture log-likelihood as a `LogLikelihoodValue`."""
        ev = self.evaluate(mix, gradient=False)
        return LogLikelihoodValue(ev.value, ev.per_household, ev.floor_events)

    def segment_logliks(self, mix):
        """``(N, S)`` matrix of household log-likelihoods conditional on each segment."""
        p = _stack(mix)
        log_p, *_ = self._outcome_logprob(p, need_parts=False)
        return self._household_segment(log_p).T

    def evaluate(self, mix, gradient=True):
        """Value, posterior segment memberships and (optionally) the gradient."""
        if not isinstance(mix, MixtureParameters):
            raise InvalidInputError("expected MixtureParameters")
        if mix.n_brands != self.n_brands:
            raise InvalidInputError(
                f"parameters have {mix.n_brands} brands, panel has {self.n_brands}")
        return self.evaluate_arrays(_stack(mix), gradient=gradient)

    def evaluate_arrays(self, p, gradient=True):
        log_p, floored, parts = self._outcome_logprob(p, need_parts=gradient)
        seg_ll = self._household_segment(log_p)  # (S, N)
        log_psi = np.log(p["psi"])
        joint = seg_ll.T + log_psi[None, :]  # (N, S)
        per_household = logsumexp(joint, axis=1)
        value = float(np.sum(per_household))
        posterior = np.exp(joint - per_household[:, None])
        floor_events = 0
        if floored.any():
            n_seg = floored.shape[0]
            floor_events = int(sum(
                np.sum(self._y[m] @ floored[:, g].reshape(n_seg, -1).T.astype(float))
                for g, m in enumerate(self._members)))
        ev = Evaluation(value, per_household, floor_events, posterior)
        if gradient:
            self._gradient(p, ev, floored, parts)
        return ev

    def _outcome_logprob(self, p, need_parts):
        prices = self._paths[None]  # (1, G, T, K)
        ref, dref = reference_prices_with_derivative(self._paths, p["pi"])
        dev = ref - prices
        bg = p["beta_g"][:, None, None, None]
        bl = p["beta_l"][:, None, None, None]
        if self.form == "branch":
            gain = dev > 0
            loss = ~gain
            coef = np.where(gain, bg, bl)
        else:
            gain = dev - self.eps > 0
            loss = -dev > 0
            coef = np.where(gain, bg, 1.0) * np.where(loss, bl, 1.0)
        n_seg = p["pi"].shape[0]
        intercepts = np.concatenate([p["intercepts"], np.zeros((n_seg, 1))], axis=1)
        u = (intercepts[:, None, None, :] + p["beta_p"][:, None, None, None] * prices
             + dev * coef)
        cv = logsumexp(u, axis=-1)  # (S, G, T)
        z = p["alpha0"][:, None, None] + p["alpha1"][:, None, None] * cv
        log_q = u - cv[..., None]
        log_p = np.empty(u.shape[:-1] + (self.n_brands + 1,))
        log_p[..., 0] = log_expit(-z)
        log_p[..., 1:] = log_expit(z)[..., None] + log_q
        floored = log_p < LOG_FLOOR
        np.maximum(log_p, LOG_FLOOR, out=log_p)
        parts = None
        if need_parts:
            parts = dict(prices=prices, dref=dref, dev=dev, gain=gain, loss=loss,
                         coef=coef, cv=cv, z=z, q=np.exp(log_q))
        return log_p, floored, parts

    def _household_segment(self, log_p):
        n_seg = log_p.shape[0]
        out = np.empty((n_seg, self._y.shape[0]))
        for g, members in enumerate(self._members):
            out[:, members] = log_p[:, g].reshape(n_seg, -1) @ self._y[members].T
        return out

    def _gradient(self, p, ev, floored, parts):
        n_seg = p["pi"].shape[0]
        w = ev.posterior  # (N, S)
        g_logp = np.empty((n_seg, self.n_price_paths) + floored.shape[2:])
        for g, members in enumerate(self._members):
            g_logp[:, g] = (w[members].T @ self._y[members]).reshape(
                (n_seg,) + floored.shape[2:])
        g_logp[floored] = 0.0

        g_none = g_logp[..., 0]
        g_brand = g_logp[..., 1:]
        g_buy = g_brand.sum(axis=-1)
        z, q, cv = parts["z"], parts["q"], parts["cv"]
        d_z = g_buy * expit(-z) - g_none * expit(z)  # (S, G, T)
        d_u = g_brand - (g_buy - d_z * p["alpha1"][:, None, None])[..., None] * q

        axes = (1, 2, 3)
        ev.d_alpha0 = d_z.sum(axis=(1, 2))
        ev.d_alpha1 = (d_z * cv).sum(axis=(1, 2))
        ev.d_intercepts = d_u.sum(axis=(1, 2))[:, :-1]
        ev.d_beta_p = (d_u * parts["prices"]).sum(axis=axes)
        ev.d_beta_g = (d_u * parts["dev"] * parts["gain"]).sum(axis=axes)
        ev.d_beta_l = (d_u * parts["dev"] * parts["loss"]).sum(axis=axes)
        ev.d_pi = (d_u * parts["coef"] * parts["dref"]).sum(axis=axes)
        ev.d_psi = w.sum(axis=0) / p["psi"]


def household_segment_loglik(household, seg, form="branch", eps=DEFAULT_EPS):
    """Log-likelihood of one household's history conditional on segment ``seg``."""
    panel = ChoicePanel([household.household_id], [household.prices], [household.choices])
    lik = PanelLikelihood(panel, form=form, eps=eps)
    return float(lik.segment_logliks(MixtureParameters((seg,)))[0, 0])


def mixture_loglik(panel, mix, period_mask=None, form="branch", eps=DEFAULT_EPS):
    """Panel mixture log-likelihood; see `PanelLikelihood`."""
    return PanelLikelihood(panel, period_mask=period_mask, form=form, eps=eps).loglik(mix)
