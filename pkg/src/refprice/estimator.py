"""Joint maximum likelihood estimation of the latent-class reference-price model.

Every carry-over weight is estimated together with the choice-model coefficients
of its segment.  The optimizer works on an unconstrained vector::

    per segment: [logit(pi), alpha0, alpha1, beta_1 .. beta_{K-1}, beta_g, beta_l, beta_p]
    then:        S-1 share logits (the last segment's logit is fixed at zero)

When the carry-over weight is pinned (two-step baseline) the ``logit(pi)`` slots
are dropped.
"""

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit, softmax
from scipy.stats import norm

from .choicemodel import DEFAULT_EPS, MixtureParameters, SegmentParameters
from .errors import EstimationError, InvalidInputError
from .likelihood import PanelLikelihood

PI_CLAMP = 1e-8
SIGNIFICANCE_LEVEL = 0.01
HESSIAN_STEP = 1e-4


class ClampWarning(UserWarning):
    """A carry-over weight of exactly 0 or 1 was clamped before the logit transform."""


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings shared by the joint fit and the two-step baseline."""

    starts: int = 8
    seed: int = 0
    maxiter: int = 5000
    ftol: float = 1e-9
    gtol: float = 1e-5
    form: str = "branch"
    eps: float = DEFAULT_EPS
    threads: int = 1
    standard_errors: bool = True

    def __post_init__(self):
        if self.starts < 1:
            raise InvalidInputError("need at least one start")
        if self.threads < 1:
            raise InvalidInputError("threads must be >= 1")
        if not self.eps > 0:
            raise InvalidInputError("eps must be positive")


@dataclass
class FitResult:
    parameters: MixtureParameters
    std_errors: dict
    significant: dict
    loglik: float
    converged: bool
    iterations: int
    wall_time: float
    n_restarts_used: int
    diagnostics: dict = field(default_factory=dict)
    fixed_pi: float = None

    @property
    def n_segments(self):
        return self.parameters.n_segments

    def estimates(self):
        return parameter_values(self.parameters, fixed_pi=self.fixed_pi)


class Parameterization:
    """Maps MixtureParameters to and from the unconstrained optimizer vector."""

    def __init__(self, n_segments, n_brands, fixed_pi=None):
        if n_segments < 1:
            raise InvalidInputError("need at least one segment")
        if n_brands < 2:
            raise InvalidInputError("need at least two brands")
        if fixed_pi is not None and not 0.0 <= fixed_pi <= 1.0:
            raise InvalidInputError(f"pinned pi must lie in [0, 1], got {fixed_pi}")
        self.n_segments = n_segments
        self.n_brands = n_brands
        self.fixed_pi = None if fixed_pi is None else float(fixed_pi)
        self.per_segment = (0 if fixed_pi is not None else 1) + 2 + (n_brands - 1) + 3

    @property
    def size(self):
        return self.n_segments * self.per_segment + self.n_segments - 1

    def _blocks(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise InvalidInputError(f"expected a vector of length {self.size}")
        n = self.n_segments * self.per_segment
        return x[:n].reshape(self.n_segments, self.per_segment), x[n:]

    def pack(self, mix):
        if mix.n_segments != self.n_segments or mix.n_brands != self.n_brands:
            raise InvalidInputError("parameters do not match the parameterization")
        rows = []
        for seg in mix.segments:
            row = []
            if self.fixed_pi is None:
                pi = seg.pi
                if not PI_CLAMP <= pi <= 1.0 - PI_CLAMP:
                    warnings.warn(f"pi={pi} clamped before the logit transform", ClampWarning,
                                  stacklevel=2)
                    pi = min(max(pi, PI_CLAMP), 1.0 - PI_CLAMP)
                row.append(logit(pi))
            row += [seg.alpha0, seg.alpha1, *seg.brand_intercepts,
                    seg.beta_g, seg.beta_l, seg.beta_p]
            rows.append(row)
        psi = np.asarray(mix.psi)
        share_logits = np.log(psi[:-1]) - np.log(psi[-1])
        return np.concatenate([np.ravel(rows), share_logits])

    def unpack_arrays(self, x):
        rows, share_logits = self._blocks(x)
        k = self.n_brands
        if self.fixed_pi is None:
            # keep pi strictly inside (0, 1) so re-packing never needs the clamp
            pi = np.clip(expit(rows[:, 0]), PI_CLAMP, 1.0 - PI_CLAMP)
            rest = rows[:, 1:]
        else:
            pi = np.full(self.n_segments, self.fixed_pi)
            rest = rows
        psi = softmax(np.append(share_logits, 0.0))
        psi = np.maximum(psi, 1e-300)
        psi = psi / psi.sum()
        return dict(pi=pi, alpha0=rest[:, 0], alpha1=rest[:, 1],
                    intercepts=rest[:, 2:2 + k - 1], beta_g=rest[:, k + 1],
                    beta_l=rest[:, k + 2], beta_p=rest[:, k + 3], psi=psi)

    def unpack(self, x):
        p = self.unpack_arrays(x)
        segs = tuple(
            SegmentParameters(float(p["pi"][s]), float(p["alpha0"][s]), float(p["alpha1"][s]),
                              tuple(p["intercepts"][s]), float(p["beta_g"][s]),
                              float(p["beta_l"][s]), float(p["beta_p"][s]))
            for s in range(self.n_segments))
        return MixtureParameters(segs, tuple(p["psi"]))

    def gradient(self, p, ev):
        """Chain the natural-parameter gradient of an evaluation to the vector."""
        cols = []
        if self.fixed_pi is None:
            cols.append(ev.d_pi * p["pi"] * (1.0 - p["pi"]))
        cols += [ev.d_alpha0, ev.d_alpha1]
        cols += list(ev.d_intercepts.T)
        cols += [ev.d_beta_g, ev.d_beta_l, ev.d_beta_p]
        psi = p["psi"]
        g_psi = ev.d_psi
        d_shares = psi * (g_psi - np.dot(psi, g_psi))
        return np.concatenate([np.column_stack(cols).ravel(), d_shares[:-1]])

    def constrained_jacobian(self, x):
        """Jacobian of the reported parameter vector (see `parameter_names`) wrt ``x``."""
        p = self.unpack_arrays(x)
        names = parameter_names(self.n_segments, self.n_brands, self.fixed_pi)
        jac = np.zeros((len(names), self.size))
        row = 0
        for s in range(self.n_segments):
            base = s * self.per_segment
            col = base
            if self.fixed_pi is None:
                jac[row, col] = p["pi"][s] * (1.0 - p["pi"][s])
                row += 1
                col += 1
            for _ in range(self.per_segment - (col - base)):
                jac[row, col] = 1.0
                row += 1
                col += 1
        if self.n_segments > 1:
            psi = p["psi"]
            start = self.n_segments * self.per_segment
            for a in range(self.n_segments):
                for b in range(self.n_segments - 1):
                    jac[row + a, start + b] = psi[a] * ((a == b) - psi[b])
        return jac


def parameter_names(n_segments, n_brands, fixed_pi=None):
    """Labels of the reported parameters, segment-major, then shares."""
    names = []
    for s in range(1, n_segments + 1):
        if fixed_pi is None:
            names.append(f"pi[{s}]")
        names += [f"alpha0[{s}]", f"alpha1[{s}]"]
        names += [f"beta_{j}[{s}]" for j in range(1, n_brands)]
        names += [f"beta_g[{s}]", f"beta_l[{s}]", f"beta_p[{s}]"]
    if n_segments > 1:
        names += [f"psi[{s}]" for s in range(1, n_segments + 1)]
    return names


def parameter_values(mix, fixed_pi=None):
    """Dict of reported parameter values keyed like `parameter_names`."""
    out = {}
    for s, seg in enumerate(mix.segments, start=1):
        if fixed_pi is None:
            out[f"pi[{s}]"] = seg.pi
        out[f"alpha0[{s}]"] = seg.alpha0
        out[f"alpha1[{s}]"] = seg.alpha1
        for j, b in enumerate(seg.brand_intercepts, start=1):
            out[f"beta_{j}[{s}]"] = b
        out[f"beta_g[{s}]"] = seg.beta_g
        out[f"beta_l[{s}]"] = seg.beta_l
        out[f"beta_p[{s}]"] = seg.beta_p
    if mix.n_segments > 1:
        for s, v in enumerate(mix.psi, start=1):
            out[f"psi[{s}]"] = v
    return out


def pack(mix, fixed_pi=None):
    return Parameterization(mix.n_segments, mix.n_brands, fixed_pi).pack(mix)


def unpack(x, n_segments, n_brands, fixed_pi=None):
    return Parameterization(n_segments, n_brands, fixed_pi).unpack(x)


def canonicalize_segments(mix):
    """Order segments by ascending pi, ties broken by ascending beta_p."""
    order = sorted(range(mix.n_segments),
                   key=lambda s: (mix.segments[s].pi, mix.segments[s].beta_p, s))
    return MixtureParameters(tuple(mix.segments[s] for s in order),
                             tuple(mix.psi[s] for s in order))


def significance_flags(estimates, std_errors, threshold=SIGNIFICANCE_LEVEL):
    """Two-sided normal test of a zero coefficient; True iff the p-value < threshold.

    Both arguments are dicts keyed by parameter name; unavailable (NaN) standard
    errors never produce a significant flag.
    """
    flags = {}
    for name, est in estimates.items():
        se = std_errors.get(name, np.nan)
        flags[name] = bool(np.isfinite(se) and se > 0 and p_value(est, se) < threshold)
    return flags


def p_value(estimate, std_error):
    if not (np.isfinite(std_error) and std_error > 0):
        return float("nan")
    return float(2.0 * norm.sf(abs(estimate) / std_error))


class Objective:
    """Negative log-likelihood and gradient in the unconstrained space."""

    def __init__(self, likelihood, param):
        self.likelihood = likelihood
        self.param = param

    def loglik(self, x):
        return self.likelihood.evaluate_arrays(self.param.unpack_arrays(x), gradient=False).value

    def loglik_and_grad(self, x):
        p = self.param.unpack_arrays(x)
        ev = self.likelihood.evaluate_arrays(p, gradient=True)
        return ev.value, self.param.gradient(p, ev)

    def __call__(self, x):
        value, grad = self.loglik_and_grad(x)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            return np.inf, np.zeros_like(x)
        return -value, -grad


def starting_points(param, n_starts, seed, init=None):
    """All-zeros (or ``init``) first, then seeded random draws."""
    rng = np.random.default_rng(seed)
    first = np.zeros(param.size) if init is None else param.pack(init)
    points = [first]
    for _ in range(n_starts - 1):
        rows = rng.uniform(-1.0, 1.0, size=(param.n_segments, param.per_segment))
        if param.fixed_pi is None:
            rows[:, 0] = rng.uniform(-2.0, 2.0, size=param.n_segments)
        shares = rng.uniform(-1.0, 1.0, size=param.n_segments - 1)
        points.append(np.concatenate([rows.ravel(), shares]))
    return points


def _run_start(objective, x0, options):
    trace = []

    def record(intermediate_result):
        trace.append(-float(intermediate_result.fun))

    with np.errstate(over="ignore", invalid="ignore"):
        res = minimize(objective, x0, jac=True, method="L-BFGS-B", callback=record,
                       options=dict(maxiter=options.maxiter, ftol=options.ftol,
                                    gtol=options.gtol, maxcor=20))
    return dict(x=res.x, loglik=-float(res.fun), success=bool(res.success),
                iterations=int(res.nit), message=str(res.message), trace=trace)


def numerical_hessian(objective, x, step=HESSIAN_STEP):
    """Central-difference Hessian of the log-likelihood from its gradient.

    The step for coordinate ``i`` is ``step * max(1, |x_i|)``; the result is
    symmetrised.
    """
    n = x.size
    hess = np.empty((n, n))
    for i in range(n):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        hess[:, i] = (objective.loglik_and_grad(xp)[1] - objective.loglik_and_grad(xm)[1]) / (2 * h)
    return 0.5 * (hess + hess.T)


def standard_errors(likelihood, mix, fixed_pi=None):
    """Standard errors of the reported parameters at ``mix``.

    Uses the inverse observed information in the unconstrained space, mapped to
    the reported scale by the delta method.  Returns ``(std_errors, info)`` where
    ``std_errors`` maps parameter names to SEs (NaN when unavailable) and ``info``
    describes the Hessian.
    """
    param = Parameterization(mix.n_segments, mix.n_brands, fixed_pi)
    objective = Objective(likelihood, param)
    x = param.pack(mix)
    names = parameter_names(mix.n_segments, mix.n_brands, fixed_pi)
    hess = numerical_hessian(objective, x)
    info = -hess
    try:
        chol = np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        return {n: float("nan") for n in names}, {"hessian_pd": False}
    inv_chol = np.linalg.solve(chol, np.eye(x.size))
    cov = inv_chol.T @ inv_chol
    jac = param.constrained_jacobian(x)
    cov_c = jac @ cov @ jac.T
    var = np.diag(cov_c)
    ses = np.sqrt(np.where(var > 0, var, np.nan))
    return dict(zip(names, map(float, ses))), {"hessian_pd": True}


def fit(panel, n_segments, options=None, init=None, period_mask=None, fixed_pi=None,
        likelihood=None):
    """Maximise the mixture log-likelihood by multistart L-BFGS.

    Args:
        panel: ChoicePanel to fit.
        n_segments: Number of latent segments S.
        options: FitOptions.
        init: Optional MixtureParameters used as the first start.
        period_mask: Optional ``(N, T_max)`` mask of periods entering the likelihood.
        fixed_pi: Pin every segment's carry-over weight to this value.
        likelihood: Prebuilt PanelLikelihood (reused by the grid search).

    Returns:
        FitResult with canonicalised segments.

    Raises:
        EstimationError: if no start reaches a finite objective.
    """
    options = options or FitOptions()
    start_time = time.perf_counter()
    if likelihood is None:
        likelihood = PanelLikelihood(panel, period_mask=period_mask, form=options.form,
                                     eps=options.eps)
    param = Parameterization(n_segments, likelihood.n_brands, fixed_pi)
    objective = Objective(likelihood, param)
    points = starting_points(param, options.starts, options.seed, init)

    if options.threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            runs = list(pool.map(lambda x0: _run_start(objective, x0, options), points))
    else:
        runs = [_run_start(objective, x0, options) for x0 in points]

    finite = [i for i, r in enumerate(runs) if np.isfinite(r["loglik"])]
    if not finite:
        raise EstimationError("objective is non-finite at every start",
                              diagnostics=[r["message"] for r in runs])
    best = max(finite, key=lambda i: (runs[i]["loglik"], -i))
    run = runs[best]

    mix = canonicalize_segments(param.unpack(run["x"]))
    ev = likelihood.evaluate(mix, gradient=True)
    grad = param.gradient(param.unpack_arrays(param.pack(mix)), ev)

    if options.standard_errors:
        ses, hess_info = standard_errors(likelihood, mix, fixed_pi)
    else:
        names = parameter_names(n_segments, likelihood.n_brands, fixed_pi)
        ses, hess_info = {n: float("nan") for n in names}, {"hessian_pd": None}
    estimates = parameter_values(mix, fixed_pi)
    diagnostics = {
        "floor_events": ev.floor_events,
        "gradient_norm": float(np.linalg.norm(grad)),
        "message": run["message"],
        "best_start": best,
        "start_logliks": [r["loglik"] for r in runs],
        "trace": run["trace"],
        **hess_info,
    }
    return FitResult(
        parameters=mix,
        std_errors=ses,
        significant=significance_flags(estimates, ses),
        loglik=ev.value,
        converged=run["success"],
        iterations=run["iterations"],
        wall_time=time.perf_counter() - start_time,
        n_restarts_used=len(runs),
        diagnostics=diagnostics,
        fixed_pi=fixed_pi,
    )
