"""Side-by-side run of the joint estimator and the two-step grid search.

Both fitted parameter sets are scored on every period of the panel, so the two
log-likelihoods are directly comparable even though the two-step model was fitted
on calibration periods only.
"""

import io
import csv
import time
from dataclasses import dataclass, replace

from .choicemodel import MixtureParameters
from .errors import ConfigError, EstimationError
from .estimator import fit
from .likelihood import PanelLikelihood
from .panelio import COMPARISON_SCHEMA, TIMING_SECTION, _fmt_float, _parse_float

CAVEAT = ("two-step parameters were fitted on calibration periods only; both "
          "log-likelihoods here are evaluated on all periods of the panel")


@dataclass
class Comparison:
    n_segments: int
    n_brands: int
    joint: object  # FitResult or None
    twostep: object  # GridSearchResult or None
    joint_full_loglik: float
    twostep_full_loglik: float
    joint_wall_time: float
    twostep_wall_time: float
    failures: dict

    @property
    def ok(self):
        return not self.failures

    @property
    def speed_ratio(self):
        if self.joint is None or self.twostep is None or self.joint_wall_time <= 0:
            return float("nan")
        return self.twostep_wall_time / self.joint_wall_time


def pooled_mixture(mix, pi):
    """``mix`` with every segment's carry-over weight set to ``pi``."""
    return MixtureParameters(tuple(replace(s, pi=pi) for s in mix.segments), mix.psi)


def run_comparison(panel, n_segments, options, twostep_config):
    # imported here: twostep imports estimator, compare is a leaf module
    from .twostep import grid_search

    full = PanelLikelihood(panel, form=options.form, eps=options.eps)
    failures = {}
    joint = grid = None
    joint_ll = ts_ll = float("nan")

    start = time.perf_counter()
    try:
        joint = fit(panel, n_segments, options, likelihood=full)
        joint_ll = full.loglik(joint.parameters).value
    except EstimationError as exc:
        failures["joint"] = str(exc)
    joint_time = time.perf_counter() - start

    start = time.perf_counter()
    try:
        grid = grid_search(panel, twostep_config, n_segments, options)
        ts_ll = full.loglik(pooled_mixture(grid.fit.parameters, grid.pi_hat)).value
    except EstimationError as exc:
        failures["twostep"] = str(exc)
    ts_time = time.perf_counter() - start

    return Comparison(n_segments, panel.n_brands, joint, grid, joint_ll, ts_ll,
                      joint_time, ts_time, failures)


def format_comparison(cmp):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    buf.write("# refprice comparison report\n")
    buf.write(f"schema = {COMPARISON_SCHEMA}\n")
    buf.write(f"segments = {cmp.n_segments}\n")
    buf.write(f"brands = {cmp.n_brands}\n")
    if cmp.twostep is not None:
        buf.write(f"grid_points = {len(cmp.twostep.grid)}\n")
        buf.write(f"init_fraction = {_fmt_float(cmp.twostep.init_fraction)}\n")

    buf.write("\n[carryover]\n")
    writer.writerow(("segment", "joint_pi", "pooled_pi"))
    for s in range(cmp.n_segments):
        joint_pi = cmp.joint.parameters.segments[s].pi if cmp.joint else float("nan")
        pooled = cmp.twostep.pi_hat if cmp.twostep else float("nan")
        writer.writerow((s + 1, _fmt_float(joint_pi), _fmt_float(pooled)))

    buf.write("\n[loglik]\n")
    writer.writerow(("method", "full_panel_loglik", "fitted_loglik", "fitted_periods",
                     "converged"))
    if cmp.joint is not None:
        writer.writerow(("joint", _fmt_float(cmp.joint_full_loglik),
                         _fmt_float(cmp.joint.loglik), "all",
                         "true" if cmp.joint.converged else "false"))
    else:
        writer.writerow(("joint", "NA", "NA", "all", "failed"))
    if cmp.twostep is not None:
        writer.writerow(("twostep", _fmt_float(cmp.twostep_full_loglik),
                         _fmt_float(cmp.twostep.fit.loglik), "calibration",
                         "true" if cmp.twostep.fit.converged else "false"))
    else:
        writer.writerow(("twostep", "NA", "NA", "calibration", "failed"))

    buf.write("\n[notes]\n")
    buf.write(f"note = {CAVEAT}\n")
    for method, message in sorted(cmp.failures.items()):
        buf.write(f"failure_{method} = {message}\n")

    buf.write(f"\n{TIMING_SECTION}\n")
    buf.write(f"joint_wall_time = {_fmt_float(cmp.joint_wall_time)}\n")
    buf.write(f"twostep_wall_time = {_fmt_float(cmp.twostep_wall_time)}\n")
    buf.write(f"speed_ratio = {_fmt_float(cmp.speed_ratio)}\n")
    return buf.getvalue()


def parse_comparison(text):
    """Read back the tables of a comparison report as plain dicts."""
    header, sections, current = {}, {}, None
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is None:
            key, _, value = line.partition(" = ")
            header[key] = value
        else:
            sections[current].append(line)
    if header.get("schema") != COMPARISON_SCHEMA:
        raise ConfigError(f"schema mismatch: expected {COMPARISON_SCHEMA!r}")
    for name in ("carryover", "loglik", "notes", "timing"):
        if name not in sections:
            raise ConfigError(f"comparison report: missing section [{name}]")
    carry = list(csv.DictReader(sections["carryover"]))
    logliks = {row["method"]: row for row in csv.DictReader(sections["loglik"])}
    timing = dict(line.split(" = ", 1) for line in sections["timing"])
    notes = dict(line.split(" = ", 1) for line in sections["notes"])
    return {
        "header": header,
        "joint_pi": [_parse_float(r["joint_pi"], "joint_pi") for r in carry],
        "pooled_pi": [_parse_float(r["pooled_pi"], "pooled_pi") for r in carry],
        "loglik": logliks,
        "notes": notes,
        "timing": {k: _parse_float(v, k) for k, v in timing.items()},
    }
