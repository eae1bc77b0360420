"""Random valid files and targeted corruptions for the I/O round-trip tests."""

import json
import math

import numpy as np

from refprice.choicemodel import MixtureParameters, SegmentParameters
from refprice.datagen import PriceProcessConfig, SimulationSpec
from refprice.estimator import FitOptions, parameter_names
from refprice.panel import ChoicePanel
from refprice.panelio import EstimatorConfig, FitReport, RunConfig, format_panel
from refprice.twostep import TwoStepConfig

N_FILES = 50


def random_panel(rng):
    n = int(rng.integers(1, 6))
    k = int(rng.integers(2, 6))
    lengths = rng.integers(3, 9, size=n)
    ids = np.sort(rng.choice(1000, size=n, replace=False) + 1)
    # mix ordinary prices with awkward decimals so shortest-repr formatting is exercised
    prices = [np.where(rng.random((t, k)) < 0.2, rng.uniform(1e-6, 1e4, (t, k)),
                       np.round(rng.uniform(0.1, 5.0, (t, k)), int(rng.integers(1, 17))))
              for t in lengths]
    choices = [rng.integers(0, k + 1, size=t) for t in lengths]
    return ChoicePanel(ids, prices, choices)


def random_mixture(rng, n_segments=None, n_brands=None):
    s = n_segments or int(rng.integers(1, 4))
    k = n_brands or int(rng.integers(2, 5))
    segs = tuple(SegmentParameters(float(rng.uniform(0, 1)), *rng.normal(0, 3, 2),
                                   tuple(rng.normal(0, 3, k - 1)), *rng.normal(0, 3, 3))
                 for _ in range(s))
    w = rng.dirichlet(np.ones(s)) * 0.9 + 0.1 / s
    psi = tuple(w[:-1]) + (1.0 - math.fsum(w[:-1]),)
    return MixtureParameters(segs, psi)


def random_simulation(rng):
    mix = random_mixture(rng)
    prices = PriceProcessConfig(tuple(rng.uniform(0.2, 3.0, mix.n_brands)),
                                float(rng.uniform()), float(rng.uniform(0, 0.9)),
                                float(rng.uniform(0, 0.3)))
    return SimulationSpec(mix, int(rng.integers(1, 500)), int(rng.integers(2, 200)), prices,
                          int(rng.integers(0, 2**31)), bool(rng.integers(0, 2)))


def random_estimator(rng):
    opts = FitOptions(starts=int(rng.integers(1, 20)), seed=int(rng.integers(0, 10**6)),
                      maxiter=int(rng.integers(10, 10**4)), ftol=float(10 ** rng.uniform(-12, -3)),
                      gtol=float(10 ** rng.uniform(-8, -2)),
                      form=str(rng.choice(["branch", "heaviside"])),
                      eps=float(10 ** rng.uniform(-9, -3)), threads=int(rng.integers(1, 9)),
                      standard_errors=bool(rng.integers(0, 2)))
    return EstimatorConfig(int(rng.integers(1, 5)), opts)


def random_twostep(rng):
    grid = tuple(sorted(set(np.round(rng.uniform(0, 1, int(rng.integers(1, 12))), 6).tolist())))
    return TwoStepConfig(grid, float(rng.uniform(0.05, 0.95)))


def random_run(rng):
    return RunConfig(random_estimator(rng), random_twostep(rng))


def random_report(rng):
    twostep = bool(rng.integers(0, 2))
    mix = random_mixture(rng)
    fixed_pi = None
    if twostep:
        fixed_pi = float(rng.uniform())
        mix = MixtureParameters(tuple(SegmentParameters(fixed_pi, s.alpha0, s.alpha1,
                                                        s.brand_intercepts, s.beta_g, s.beta_l,
                                                        s.beta_p) for s in mix.segments),
                                mix.psi)
    names = parameter_names(mix.n_segments, mix.n_brands, fixed_pi)
    ses = {n: float("nan") if rng.random() < 0.1 else float(rng.uniform(0.001, 2))
           for n in names}
    sig = {n: bool(rng.integers(0, 2)) for n in names}
    profile = None
    if twostep:
        profile = tuple((float(p), float("nan") if rng.random() < 0.1 else float(-rng.uniform(1e3, 1e5)))
                        for p in np.round(np.linspace(0, 1, int(rng.integers(1, 12))), 6))
    return FitReport(method="twostep" if twostep else "joint", parameters=mix,
                     std_errors=ses, significant=sig, loglik=float(-rng.uniform(1, 1e5)),
                     converged=bool(rng.integers(0, 2)), iterations=int(rng.integers(0, 500)),
                     n_restarts_used=int(rng.integers(1, 9)),
                     floor_events=int(rng.integers(0, 3)), gradient_norm=float(rng.uniform()),
                     hessian_pd=bool(rng.integers(0, 2)), wall_time=float(rng.uniform(0, 100)),
                     fixed_pi=fixed_pi,
                     init_fraction=float(rng.uniform(0.1, 0.9)) if twostep else None,
                     profile=profile)


# --------------------------------------------------------------------------- corruptions

def _rows(text):
    lines = text.splitlines()
    return lines[0], [ln.split(",") for ln in lines[1:]]


def _join(header, rows):
    return "\n".join([header] + [",".join(r) for r in rows]) + "\n"


def panel_corruptions(panel, rng):
    """``{name: corrupted text}``; every variant violates a PanelFile invariant."""
    text = format_panel(panel)
    header, rows = _rows(text)
    k = panel.n_brands
    pick = int(rng.integers(0, len(rows)))
    out = {}

    def edit(col, value):
        r = [list(x) for x in rows]
        r[pick][col] = value
        return _join(header, r)

    out["bad_header"] = _join("household,period,brand,cost,choice", rows)
    out["blank_line"] = _join(header, rows[:pick]) + "\n" + _join(header, rows[pick:]).split(
        "\n", 1)[1]
    out["short_row"] = _join(header, rows[:pick] + [rows[pick][:4]] + rows[pick + 1:])
    out["bad_household"] = edit(0, "h1")
    out["zero_period"] = edit(1, "0")
    out["zero_brand"] = edit(2, "0")
    out["negative_price"] = edit(3, "-" + rows[pick][3])
    out["zero_price"] = edit(3, "0.0")
    out["text_price"] = edit(3, "abc")
    out["infinite_price"] = edit(3, "inf")
    out["bad_choice"] = edit(4, "2")
    out["duplicate_row"] = _join(header, rows[:pick + 1] + [rows[pick]] + rows[pick + 1:])
    # two purchases in one period
    start = pick - pick % k
    r = [list(x) for x in rows]
    r[start][4] = "1"
    r[start + 1][4] = "1"
    out["double_purchase"] = _join(header, r)
    # a missing brand row
    out["missing_brand"] = _join(header, rows[:pick] + rows[pick + 1:])
    # a gap: drop every row of period 2 of the first household
    first = rows[0][0]
    out["period_gap"] = _join(header, [x for x in rows if not (x[0] == first and x[1] == "2")])
    return out


def config_corruptions(cfg_text, rng):
    obj = json.loads(cfg_text)
    out = {}
    bumped = dict(obj, schema=obj["schema"].replace("/1", "/2"))
    out["schema_version"] = json.dumps(bumped)
    out["unknown_key"] = json.dumps(dict(obj, colour="red"))
    out["truncated"] = cfg_text[: len(cfg_text) // 2]
    out["not_object"] = json.dumps([obj])
    return out


def report_corruptions(text, rng):
    lines = text.splitlines()
    out = {}
    out["schema_version"] = text.replace("refprice.report/1", "refprice.report/2")
    out["missing_loglik"] = "\n".join(ln for ln in lines if not ln.startswith("loglik ="))
    out["unknown_key"] = text.replace("\nmethod =", "\ncolour = red\nmethod =", 1)
    out["bad_number"] = _break_first_estimate(lines)
    out["no_timing"] = text.split("\n[timing]\n")[0] + "\n"
    out["dropped_row"] = "\n".join(ln for ln in lines if not ln.startswith("beta_g,"))
    out["bad_flag"] = _set_flag(lines, "x")
    out["duplicate_key"] = text.replace("\nmethod =", "\nbrands = 2\nmethod =", 1)
    return out


def _break_first_estimate(lines):
    out = []
    done = False
    for ln in lines:
        if not done and ln.startswith("alpha0,"):
            parts = ln.split(",")
            parts[1] = "abc"
            ln = ",".join(parts)
            done = True
        out.append(ln)
    return "\n".join(out) + "\n"


def _set_flag(lines, flag):
    out = []
    done = False
    for ln in lines:
        if not done and ln.startswith("alpha1,"):
            parts = ln.split(",")
            parts[5] = flag
            ln = ",".join(parts)
            done = True
        out.append(ln)
    return "\n".join(out) + "\n"
