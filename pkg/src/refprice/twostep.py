"""Legacy two-step baseline: grid search on a pooled carry-over weight.

Each household's history is split into an initialization sample (its earliest
``floor(init_fraction * T)`` periods) and a calibration sample (the rest).  For
every grid value of pi the choice model is fitted on the calibration periods with
pi held fixed and shared by all segments; reference prices for the calibration
periods are carried over from the initialization periods rather than restarted.
The grid value with the highest calibration log-likelihood wins (ties go to the
smaller value).
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EstimationError, InvalidInputError
from .estimator import FitOptions, fit, significance_flags, standard_errors
from .likelihood import PanelLikelihood

MIN_PERIODS_PER_PART = 2


def make_grid(step):
    """Grid ``0, step, 2*step, ...`` up to 1 inclusive."""
    if not 0 < step <= 1:
        raise InvalidInputError(f"grid step must lie in (0, 1], got {step}")
    n = int(math.floor(1.0 / step + 1e-9))
    return tuple(round(i * step, 12) for i in range(n + 1))


DEFAULT_GRID = make_grid(0.01)


@dataclass(frozen=True)
class TwoStepConfig:
    grid: tuple = DEFAULT_GRID
    init_fraction: float = 0.3

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise InvalidInputError("grid must not be empty")
        if any(not 0.0 <= g <= 1.0 for g in grid):
            raise InvalidInputError("grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidInputError("grid must be strictly increasing")
        if not 0.0 < self.init_fraction < 1.0:
            raise InvalidInputError("init_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class PanelSplit:
    panel: object
    init_periods: np.ndarray  # T0 per household
    init_mask: np.ndarray
    calibration_mask: np.ndarray


def initialization_length(n_periods, init_fraction):
    # the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    return int(math.floor(init_fraction * n_periods + 1e-9))


def split_panel(panel, init_fraction):
    """Split every household into initialization and calibration periods.

    Raises:
        InvalidInputError: if any household has fewer than two periods in either
            part; the message lists the offending household ids.
    """
    if not 0.0 < init_fraction < 1.0:
        raise InvalidInputError("init_fraction must lie in (0, 1)")
    lengths = panel.n_periods
    t0 = np.array([initialization_length(t, init_fraction) for t in lengths])
    bad = [panel.household_ids[i] for i in range(panel.n_households)
           if t0[i] < MIN_PERIODS_PER_PART or lengths[i] - t0[i] < MIN_PERIODS_PER_PART]
    if bad:
        shown = ", ".join(str(h) for h in bad[:20])
        more = "" if len(bad) <= 20 else f" (+{len(bad) - 20} more)"
        raise InvalidInputError(
            f"households too short to split at init_fraction={init_fraction}: {shown}{more}")
    periods = np.arange(panel.max_periods)[None, :]
    valid = panel.valid_mask()
    init_mask = periods < t0[:, None]
    return PanelSplit(panel, t0, init_mask & valid, ~init_mask & valid)


def fit_conditional(split, pi_fixed, n_segments, options=None, likelihood=None):
    """Fit the choice model on the calibration periods with every pi pinned."""
    options = options or FitOptions()
    if not 0.0 <= pi_fixed <= 1.0:
        raise InvalidInputError(f"pinned pi must lie in [0, 1], got {pi_fixed}")
    if likelihood is None:
        likelihood = PanelLikelihood(split.panel, period_mask=split.calibration_mask,
                                     form=options.form, eps=options.eps)
    return fit(split.panel, n_segments, options, fixed_pi=pi_fixed, likelihood=likelihood)


@dataclass
class GridSearchResult:
    pi_hat: float
    grid: tuple
    logliks: tuple  # calibration log-likelihood per grid point, NaN where the fit failed
    fit: object  # FitResult at pi_hat
    wall_time: float
    failures: dict = field(default_factory=dict)
    init_fraction: float = None


def grid_search(panel, config=None, n_segments=1, options=None):
    """Two-step estimate of a pooled pi and the conditional choice model.

    Grid points are fitted independently (concurrently when ``options.threads``
    > 1); the profile is assembled in grid order.
    """
    config = config or TwoStepConfig()
    options = options or FitOptions()
    start = time.perf_counter()
    split = split_panel(panel, config.init_fraction)
    likelihood = PanelLikelihood(panel, period_mask=split.calibration_mask,
                                 form=options.form, eps=options.eps)
    # standard errors are only needed at the winning grid point
    inner = replace(options, threads=1, standard_errors=False)

    def run(pi):
        try:
            return fit_conditional(split, pi, n_segments, inner, likelihood=likelihood)
        except EstimationError as exc:
            return exc

    if options.threads > 1 and len(config.grid) > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            results = list(pool.map(run, config.grid))
    else:
        results = [run(pi) for pi in config.grid]

    failures = {pi: str(r) for pi, r in zip(config.grid, results) if isinstance(r, Exception)}
    if len(failures) == len(config.grid):
        raise EstimationError("every grid point failed", diagnostics=failures)
    logliks = tuple(float("nan") if isinstance(r, Exception) else r.loglik for r in results)
    best = None
    for i, ll in enumerate(logliks):
        if not np.isnan(ll) and (best is None or ll > logliks[best]):
            best = i
    winner = results[best]
    if options.standard_errors:
        ses, info = standard_errors(likelihood, winner.parameters, fixed_pi=config.grid[best])
        winner.std_errors = ses
        winner.significant = significance_flags(winner.estimates(), ses)
        winner.diagnostics.update(info)
    return GridSearchResult(
        pi_hat=config.grid[best],
        grid=config.grid,
        logliks=logliks,
        fit=winner,
        wall_time=time.perf_counter() - start,
        failures=failures,
        init_fraction=config.init_fraction,
    )
