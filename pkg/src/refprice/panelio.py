"""Text formats: panel CSV, JSON configurations and sectioned fit reports.

Panel files
    Header ``household,period,brand,price,choice``; one row per (household,
    period, brand).  A period without a purchase has ``choice=0`` on all K rows.
    Rows may come in any order on input; output is sorted by household, period,
    brand and prices are written with the shortest round-trip representation.

Configuration files
    JSON objects carrying a ``"schema"`` tag such as ``"refprice.simulation/1"``.
    Unknown keys are rejected; omitted keys take the documented defaults.

Reports
    ``key = value`` header lines followed by ``[section]`` blocks holding CSV
    tables.  The ``[timing]`` block is always last so that runs can be compared
    with timing removed (see `strip_timing`).
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources

import numpy as np

from .choicemodel import MixtureParameters, SegmentParameters
from .datagen import PriceProcessConfig, SimulationSpec
from .errors import ConfigError, PanelFormatError
from .estimator import FitOptions, p_value, parameter_names
from .panel import ChoicePanel
from .twostep import TwoStepConfig, make_grid

PANEL_HEADER = ("household", "period", "brand", "price", "choice")
SCHEMA_VERSION = 1
REPORT_SCHEMA = f"refprice.report/{SCHEMA_VERSION}"
COMPARISON_SCHEMA = f"refprice.comparison/{SCHEMA_VERSION}"
TIMING_SECTION = "[timing]"


# --------------------------------------------------------------------------- panels

def _parse_int(text, name, row):
    try:
        return int(text)
    except ValueError:
        raise PanelFormatError(f"{name} {text!r} is not an integer", row) from None


def parse_panel(text):
    """Parse panel CSV text into a validated ChoicePanel."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise PanelFormatError("empty file", 1) from None
    if tuple(h.strip() for h in header) != PANEL_HEADER:
        raise PanelFormatError(f"header must be {','.join(PANEL_HEADER)}", 1)

    cells = {}  # (household, period) -> {brand: (price, choice, row)}
    for line_no, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            raise PanelFormatError("blank line", line_no)
        if len(rec) != len(PANEL_HEADER):
            raise PanelFormatError(f"expected {len(PANEL_HEADER)} fields, got {len(rec)}", line_no)
        hh = _parse_int(rec[0], "household", line_no)
        period = _parse_int(rec[1], "period", line_no)
        brand = _parse_int(rec[2], "brand", line_no)
        try:
            price = float(rec[3])
        except ValueError:
            raise PanelFormatError(f"price {rec[3]!r} is not a number", line_no) from None
        choice = _parse_int(rec[4], "choice", line_no)
        if period < 1:
            raise PanelFormatError(f"period must be >= 1, got {period}", line_no)
        if brand < 1:
            raise PanelFormatError(f"brand must be >= 1, got {brand}", line_no)
        if not (math.isfinite(price) and price > 0):
            raise PanelFormatError(f"price must be positive, got {rec[3]!r}", line_no)
        if choice not in (0, 1):
            raise PanelFormatError(f"choice must be 0 or 1, got {choice}", line_no)
        key = (hh, period)
        cell = cells.setdefault(key, {})
        if brand in cell:
            raise PanelFormatError(
                f"duplicate row for household {hh}, period {period}, brand {brand}", line_no)
        if choice == 1 and any(c == 1 for _, c, _ in cell.values()):
            raise PanelFormatError(
                f"more than one purchase in household {hh}, period {period}", line_no)
        cell[brand] = (price, choice, line_no)

    if not cells:
        raise PanelFormatError("no data rows", 1)
    n_brands = max(b for cell in cells.values() for b in cell)
    if n_brands < 2:
        raise PanelFormatError("panel needs at least two brands")

    by_household = {}
    for (hh, period), cell in cells.items():
        by_household.setdefault(hh, {})[period] = cell
    ids, prices, choices = [], [], []
    for hh in sorted(by_household):
        periods = by_household[hh]
        n_t = len(periods)
        for t in range(1, n_t + 1):
            if t not in periods:
                later = [r for p_, cell in periods.items() if p_ > t for _, _, r in cell.values()]
                raise PanelFormatError(
                    f"household {hh}: periods must be contiguous 1..T, period {t} missing",
                    min(later))
        p = np.empty((n_t, n_brands))
        c = np.zeros(n_t, dtype=int)
        for t in range(1, n_t + 1):
            cell = periods[t]
            if len(cell) != n_brands:
                missing = sorted(set(range(1, n_brands + 1)) - set(cell))
                row = min(r for _, _, r in cell.values())
                raise PanelFormatError(
                    f"household {hh}, period {t}: missing row for brand {missing[0]}", row)
            for b, (price, choice, _) in cell.items():
                p[t - 1, b - 1] = price
                if choice:
                    c[t - 1] = b
        ids.append(hh)
        prices.append(p)
        choices.append(c)
    return ChoicePanel(ids, prices, choices)


def format_panel(panel):
    """Canonical CSV text for ``panel``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PANEL_HEADER)
    order = sorted(range(panel.n_households), key=lambda i: panel.household_ids[i])
    for i in order:
        h = panel.household(i)
        for t in range(h.n_periods):
            for b in range(panel.n_brands):
                writer.writerow((h.household_id, t + 1, b + 1, repr(float(h.prices[t, b])),
                                 int(h.choices[t] == b + 1)))
    return buf.getvalue()


def read_panel(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_panel(fh.read())


def write_panel(panel, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_panel(panel))


# --------------------------------------------------------------------------- configs

def _schema(kind):
    return f"refprice.{kind}/{SCHEMA_VERSION}"


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _wrap(where, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


_SEGMENT_KEYS = ("pi", "alpha0", "alpha1", "brand_intercepts", "beta_g", "beta_l", "beta_p")


def mixture_from_dict(obj, where="mixture"):
    _check_keys(obj, ("schema", "segments", "psi", "source"), where)
    if "segments" not in obj:
        raise ConfigError(f"{where}: missing 'segments'")
    segments = []
    for s, seg in enumerate(obj["segments"], start=1):
        loc = f"{where}.segments[{s}]"
        _check_keys(seg, _SEGMENT_KEYS, loc)
        missing = [k for k in _SEGMENT_KEYS if k not in seg]
        if missing:
            raise ConfigError(f"{loc}: missing key(s) {', '.join(missing)}")
        segments.append(_wrap(loc, SegmentParameters, **{k: seg[k] for k in _SEGMENT_KEYS}))
    return _wrap(where, MixtureParameters, tuple(segments), obj.get("psi"))


def mixture_to_dict(mix, source=None):
    out = {"schema": _schema("mixture")}
    if source:
        out["source"] = source
    out["psi"] = list(mix.psi)
    out["segments"] = [seg.as_dict() for seg in mix.segments]
    return out


def _prices_from_dict(obj, where):
    allowed = [f.name for f in fields(PriceProcessConfig)]
    _check_keys(obj, allowed, where)
    return _wrap(where, PriceProcessConfig, **obj)


def simulation_from_dict(obj):
    keys = ("schema", "n_households", "n_periods", "seed", "shared_prices", "prices", "truth")
    _check_keys(obj, keys, "simulation")
    if "truth" not in obj:
        raise ConfigError("simulation: missing 'truth'")
    truth = mixture_from_dict(obj["truth"], "simulation.truth")
    kwargs = {k: obj[k] for k in ("n_households", "n_periods", "seed", "shared_prices") if k in obj}
    if "prices" in obj:
        kwargs["prices"] = _prices_from_dict(obj["prices"], "simulation.prices")
    elif truth.n_brands != len(PriceProcessConfig().base_prices):
        raise ConfigError("simulation: 'prices.base_prices' needed for a non-default brand count")
    return _wrap("simulation", SimulationSpec, truth, **kwargs)


def simulation_to_dict(spec):
    return {
        "schema": _schema("simulation"),
        "n_households": spec.n_households,
        "n_periods": spec.n_periods,
        "seed": spec.seed,
        "shared_prices": spec.shared_prices,
        "prices": {
            "base_prices": list(spec.prices.base_prices),
            "promo_probability": spec.prices.promo_probability,
            "promo_depth": spec.prices.promo_depth,
            "noise_sd": spec.prices.noise_sd,
        },
        "truth": {k: v for k, v in mixture_to_dict(spec.mix).items() if k != "schema"},
    }


_ESTIMATOR_KEYS = ("segments", "starts", "seed", "maxiter", "ftol", "gtol", "form", "eps",
                   "threads", "standard_errors")


@dataclass(frozen=True)
class EstimatorConfig:
    segments: int = 3
    options: FitOptions = field(default_factory=FitOptions)


def estimator_from_dict(obj, where="estimator"):
    _check_keys(obj, ("schema",) + _ESTIMATOR_KEYS, where)
    segments = obj.get("segments", EstimatorConfig.segments)
    if not isinstance(segments, int) or isinstance(segments, bool) or segments < 1:
        raise ConfigError(f"{where}: segments must be a positive integer")
    opts = {k: obj[k] for k in _ESTIMATOR_KEYS[1:] if k in obj}
    if "form" in opts and opts["form"] not in ("branch", "heaviside"):
        raise ConfigError(f"{where}: form must be 'branch' or 'heaviside'")
    return EstimatorConfig(segments, _wrap(where, FitOptions, **opts))


def estimator_to_dict(cfg):
    o = cfg.options
    return {"schema": _schema("estimator"), "segments": cfg.segments, "starts": o.starts,
            "seed": o.seed, "maxiter": o.maxiter, "ftol": o.ftol, "gtol": o.gtol,
            "form": o.form, "eps": o.eps, "threads": o.threads,
            "standard_errors": o.standard_errors}


def twostep_from_dict(obj, where="twostep"):
    _check_keys(obj, ("schema", "grid", "grid_step", "init_fraction"), where)
    if "grid" in obj and "grid_step" in obj:
        raise ConfigError(f"{where}: give either 'grid' or 'grid_step', not both")
    kwargs = {}
    if "grid" in obj:
        kwargs["grid"] = obj["grid"]
    elif "grid_step" in obj:
        kwargs["grid"] = _wrap(where, make_grid, obj["grid_step"])
    if "init_fraction" in obj:
        kwargs["init_fraction"] = obj["init_fraction"]
    return _wrap(where, TwoStepConfig, **kwargs)


def twostep_to_dict(cfg):
    return {"schema": _schema("twostep"), "grid": list(cfg.grid),
            "init_fraction": cfg.init_fraction}


@dataclass(frozen=True)
class RunConfig:
    """Estimator and two-step settings together, as used by ``compare``."""

    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    twostep: TwoStepConfig = field(default_factory=TwoStepConfig)


def run_from_dict(obj):
    _check_keys(obj, ("schema", "estimator", "twostep"), "run")
    est = estimator_from_dict(obj["estimator"], "run.estimator") if "estimator" in obj \
        else EstimatorConfig()
    ts = twostep_from_dict(obj["twostep"], "run.twostep") if "twostep" in obj \
        else TwoStepConfig()
    return RunConfig(est, ts)


def run_to_dict(cfg):
    est = estimator_to_dict(cfg.estimator)
    ts = twostep_to_dict(cfg.twostep)
    del est["schema"], ts["schema"]
    return {"schema": _schema("run"), "estimator": est, "twostep": ts}


_READERS = {
    "simulation": simulation_from_dict,
    "mixture": mixture_from_dict,
    "estimator": estimator_from_dict,
    "twostep": twostep_from_dict,
    "run": run_from_dict,
}


def parse_config(text):
    """Parse a JSON configuration and dispatch on its schema tag."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") \
            from None
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    tag = obj.get("schema")
    if not isinstance(tag, str) or not tag.startswith("refprice.") or "/" not in tag:
        raise ConfigError(f"missing or malformed schema tag: {tag!r}")
    kind, _, version = tag[len("refprice."):].partition("/")
    if kind not in _READERS:
        raise ConfigError(f"unknown configuration kind {kind!r}")
    if version != str(SCHEMA_VERSION):
        raise ConfigError(f"schema mismatch: expected {_schema(kind)!r}, got {tag!r}")
    return _READERS[kind](obj)


def format_config(cfg):
    if isinstance(cfg, SimulationSpec):
        obj = simulation_to_dict(cfg)
    elif isinstance(cfg, MixtureParameters):
        obj = mixture_to_dict(cfg)
    elif isinstance(cfg, EstimatorConfig):
        obj = estimator_to_dict(cfg)
    elif isinstance(cfg, TwoStepConfig):
        obj = twostep_to_dict(cfg)
    elif isinstance(cfg, RunConfig):
        obj = run_to_dict(cfg)
    else:
        raise TypeError(f"cannot serialize {type(cfg).__name__}")
    return json.dumps(obj, indent=2) + "\n"


def read_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def write_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))


def load_preset(name="reformulation_3seg"):
    """Bundled parameter presets (MixtureParameters)."""
    text = resources.files("refprice").joinpath(f"data/{name}.json").read_text("utf-8")
    return parse_config(text)


# --------------------------------------------------------------------------- reports

def _fmt_float(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return repr(float(x))


def _parse_float(text, where):
    if text == "NA":
        return float("nan")
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: {text!r} is not a number") from None


def _fmt_bool(b):
    return "NA" if b is None else ("true" if b else "false")


def _parse_bool(text, where):
    table = {"true": True, "false": False, "NA": None}
    if text not in table:
        raise ConfigError(f"{where}: {text!r} is not a boolean")
    return table[text]


@dataclass
class FitReport:
    """Everything a fit report file records."""

    method: str
    parameters: MixtureParameters
    std_errors: dict
    significant: dict
    loglik: float
    converged: bool
    iterations: int
    n_restarts_used: int
    floor_events: int
    gradient_norm: float
    hessian_pd: object
    wall_time: float
    fixed_pi: float = None
    init_fraction: float = None
    profile: tuple = None  # ((pi, calibration loglik), ...)

    @classmethod
    def from_fit(cls, fit, method="joint"):
        d = fit.diagnostics
        return cls(method=method, parameters=fit.parameters, std_errors=dict(fit.std_errors),
                   significant=dict(fit.significant), loglik=fit.loglik,
                   converged=fit.converged, iterations=fit.iterations,
                   n_restarts_used=fit.n_restarts_used,
                   floor_events=int(d.get("floor_events", 0)),
                   gradient_norm=float(d.get("gradient_norm", float("nan"))),
                   hessian_pd=d.get("hessian_pd"), wall_time=fit.wall_time,
                   fixed_pi=fit.fixed_pi)

    @classmethod
    def from_grid_search(cls, result):
        rep = cls.from_fit(result.fit, method="twostep")
        rep.wall_time = result.wall_time
        rep.init_fraction = result.init_fraction
        rep.profile = tuple(zip(result.grid, result.logliks))
        return rep

    def estimates(self):
        from .estimator import parameter_values
        return parameter_values(self.parameters, fixed_pi=self.fixed_pi)

    def __eq__(self, other):
        if not isinstance(other, FitReport):
            return NotImplemented
        return format_report(self) == format_report(other)


_TABLE_HEADER = ("parameter", "estimate", "std_error", "z_value", "p_value", "significant")


def _param_row(label, estimate, se, sig):
    if se == "fixed":
        return (label, _fmt_float(estimate), "fixed", "", "", "")
    z = estimate / se if (se is not None and math.isfinite(se) and se > 0) else float("nan")
    return (label, _fmt_float(estimate), _fmt_float(se), _fmt_float(z),
            _fmt_float(p_value(estimate, se) if math.isfinite(se) else float("nan")),
            "*" if sig else "")


def _write_table(buf, rows, header):
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def format_report(rep):
    mix = rep.parameters
    n_seg, n_brands = mix.n_segments, mix.n_brands
    buf = io.StringIO()
    buf.write("# refprice fit report\n")
    meta = [
        ("schema", REPORT_SCHEMA),
        ("method", rep.method),
        ("segments", str(n_seg)),
        ("brands", str(n_brands)),
        ("loglik", _fmt_float(rep.loglik)),
        ("converged", _fmt_bool(rep.converged)),
        ("iterations", str(rep.iterations)),
        ("starts", str(rep.n_restarts_used)),
        ("floor_events", str(rep.floor_events)),
        ("gradient_norm", _fmt_float(rep.gradient_norm)),
        ("hessian_pd", _fmt_bool(rep.hessian_pd)),
    ]
    if rep.fixed_pi is not None:
        meta.append(("pooled_pi", _fmt_float(rep.fixed_pi)))
    if rep.init_fraction is not None:
        meta.append(("init_fraction", _fmt_float(rep.init_fraction)))
    for k, v in meta:
        buf.write(f"{k} = {v}\n")

    for s, seg in enumerate(mix.segments, start=1):
        buf.write(f"\n[segment {s}]\n")
        rows = []
        if rep.fixed_pi is None:
            rows.append(_param_row("pi", seg.pi, rep.std_errors[f"pi[{s}]"],
                                   rep.significant[f"pi[{s}]"]))
        else:
            rows.append(_param_row("pi", seg.pi, "fixed", False))
        values = [("alpha0", seg.alpha0), ("alpha1", seg.alpha1)]
        values += [(f"beta_{j}", b) for j, b in enumerate(seg.brand_intercepts, start=1)]
        values += [("beta_g", seg.beta_g), ("beta_l", seg.beta_l), ("beta_p", seg.beta_p)]
        for name, v in values:
            key = f"{name}[{s}]"
            rows.append(_param_row(name, v, rep.std_errors[key], rep.significant[key]))
        _write_table(buf, rows, _TABLE_HEADER)

    if n_seg > 1:
        buf.write("\n[shares]\n")
        rows = [_param_row(f"psi[{s}]", v, rep.std_errors[f"psi[{s}]"],
                           rep.significant[f"psi[{s}]"])
                for s, v in enumerate(mix.psi, start=1)]
        _write_table(buf, rows, _TABLE_HEADER)

    if rep.profile is not None:
        buf.write("\n[profile]\n")
        _write_table(buf, [(_fmt_float(p), _fmt_float(ll)) for p, ll in rep.profile],
                     ("pi", "calibration_loglik"))

    buf.write(f"\n{TIMING_SECTION}\n")
    buf.write(f"wall_time = {_fmt_float(rep.wall_time)}\n")
    return buf.getvalue()


def _split_sections(text, where):
    """Header key/values and ``{section name: [lines]}`` in file order."""
    header = {}
    sections = {}
    current = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current in sections:
                raise ConfigError(f"{where} line {line_no}: duplicate section [{current}]")
            sections[current] = []
            continue
        if current is None:
            key, sep, value = line.partition(" = ")
            if not sep:
                raise ConfigError(f"{where} line {line_no}: expected 'key = value'")
            if key in header:
                raise ConfigError(f"{where} line {line_no}: duplicate key {key!r}")
            header[key] = value
        else:
            sections[current].append((line_no, line))
    return header, sections


def _read_table(lines, header, where):
    if not lines:
        raise ConfigError(f"{where}: empty table")
    rows = list(csv.reader([ln for _, ln in lines]))
    if tuple(rows[0]) != header:
        raise ConfigError(f"{where} line {lines[0][0]}: unexpected table header")
    for (line_no, _), row in zip(lines[1:], rows[1:]):
        if len(row) != len(header):
            raise ConfigError(f"{where} line {line_no}: expected {len(header)} fields")
    return [(line_no, row) for (line_no, _), row in zip(lines[1:], rows[1:])]


def _require(header, key, where):
    if key not in header:
        raise ConfigError(f"{where}: missing key {key!r}")
    return header.pop(key)


def _parse_int_field(text, where):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{where}: {text!r} is not an integer") from None


def parse_report(text):
    where = "report"
    header, sections = _split_sections(text, where)
    schema = _require(header, "schema", where)
    if schema != REPORT_SCHEMA:
        raise ConfigError(f"schema mismatch: expected {REPORT_SCHEMA!r}, got {schema!r}")
    method = _require(header, "method", where)
    if method not in ("joint", "twostep"):
        raise ConfigError(f"{where}: unknown method {method!r}")
    n_seg = _parse_int_field(_require(header, "segments", where), "segments")
    n_brands = _parse_int_field(_require(header, "brands", where), "brands")
    if n_seg < 1 or n_brands < 2:
        raise ConfigError(f"{where}: invalid segment or brand count")
    loglik = _parse_float(_require(header, "loglik", where), "loglik")
    converged = _parse_bool(_require(header, "converged", where), "converged")
    iterations = _parse_int_field(_require(header, "iterations", where), "iterations")
    starts = _parse_int_field(_require(header, "starts", where), "starts")
    floor_events = _parse_int_field(_require(header, "floor_events", where), "floor_events")
    grad_norm = _parse_float(_require(header, "gradient_norm", where), "gradient_norm")
    hessian_pd = _parse_bool(_require(header, "hessian_pd", where), "hessian_pd")
    fixed_pi = header.pop("pooled_pi", None)
    fixed_pi = None if fixed_pi is None else _parse_float(fixed_pi, "pooled_pi")
    init_fraction = header.pop("init_fraction", None)
    init_fraction = None if init_fraction is None else _parse_float(init_fraction,
                                                                    "init_fraction")
    if header:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(header))}")
    if (method == "twostep") != (fixed_pi is not None):
        raise ConfigError(f"{where}: pooled_pi is required exactly for two-step reports")

    expected = [f"segment {s}" for s in range(1, n_seg + 1)]
    if n_seg > 1:
        expected.append("shares")
    if method == "twostep":
        expected.append("profile")
    expected.append("timing")
    if list(sections) != expected:
        raise ConfigError(f"{where}: expected sections {expected}, found {list(sections)}")

    ses, sig, segs = {}, {}, []
    names = ["pi", "alpha0", "alpha1"] + [f"beta_{j}" for j in range(1, n_brands)] \
        + ["beta_g", "beta_l", "beta_p"]
    for s in range(1, n_seg + 1):
        loc = f"{where} [segment {s}]"
        rows = _read_table(sections[f"segment {s}"], _TABLE_HEADER, loc)
        if [r[1][0] for r in rows] != names:
            raise ConfigError(f"{loc}: expected parameters {names}")
        vals = {}
        for line_no, row in rows:
            name = row[0]
            vals[name] = _parse_float(row[1], f"{loc} line {line_no}")
            if name == "pi" and fixed_pi is not None:
                if row[2] != "fixed":
                    raise ConfigError(f"{loc} line {line_no}: pooled pi must be marked fixed")
                continue
            ses[f"{name}[{s}]"] = _parse_float(row[2], f"{loc} line {line_no}")
            if row[5] not in ("", "*"):
                raise ConfigError(f"{loc} line {line_no}: significance must be '*' or empty")
            sig[f"{name}[{s}]"] = row[5] == "*"
        segs.append(_wrap(loc, SegmentParameters, vals["pi"], vals["alpha0"], vals["alpha1"],
                          tuple(vals[f"beta_{j}"] for j in range(1, n_brands)),
                          vals["beta_g"], vals["beta_l"], vals["beta_p"]))

    psi = None
    if n_seg > 1:
        loc = f"{where} [shares]"
        rows = _read_table(sections["shares"], _TABLE_HEADER, loc)
        if [r[1][0] for r in rows] != [f"psi[{s}]" for s in range(1, n_seg + 1)]:
            raise ConfigError(f"{loc}: expected one psi row per segment")
        psi = []
        for line_no, row in rows:
            psi.append(_parse_float(row[1], f"{loc} line {line_no}"))
            ses[row[0]] = _parse_float(row[2], f"{loc} line {line_no}")
            if row[5] not in ("", "*"):
                raise ConfigError(f"{loc} line {line_no}: significance must be '*' or empty")
            sig[row[0]] = row[5] == "*"
    mix = _wrap(where, MixtureParameters, tuple(segs), psi)
    if fixed_pi is not None and any(seg.pi != fixed_pi for seg in mix.segments):
        raise ConfigError(f"{where}: segment pi differs from pooled_pi")

    profile = None
    if method == "twostep":
        rows = _read_table(sections["profile"], ("pi", "calibration_loglik"),
                           f"{where} [profile]")
        profile = tuple((_parse_float(r[0], f"{where} line {n}"),
                         _parse_float(r[1], f"{where} line {n}")) for n, r in rows)

    timing = dict(_timing_pairs(sections["timing"], where))
    if set(timing) != {"wall_time"}:
        raise ConfigError(f"{where} [timing]: expected exactly 'wall_time'")
    wall_time = _parse_float(timing["wall_time"], "wall_time")

    expected_names = parameter_names(n_seg, n_brands, fixed_pi)
    if sorted(ses) != sorted(expected_names):
        raise ConfigError(f"{where}: parameter set does not match segments/brands")
    return FitReport(method=method, parameters=mix, std_errors=ses, significant=sig,
                     loglik=loglik, converged=converged, iterations=iterations,
                     n_restarts_used=starts, floor_events=floor_events,
                     gradient_norm=grad_norm, hessian_pd=hessian_pd, wall_time=wall_time,
                     fixed_pi=fixed_pi, init_fraction=init_fraction, profile=profile)


def _timing_pairs(lines, where):
    for line_no, line in lines:
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ConfigError(f"{where} line {line_no}: expected 'key = value'")
        yield key, value


def write_report(report, path):
    """Write a FitReport (or a FitResult, treated as a joint fit) to ``path``."""
    if not isinstance(report, FitReport):
        report = FitReport.from_fit(report)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_report(report))


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return parse_report(fh.read())


def strip_timing(text):
    """Report text with the trailing ``[timing]`` section removed."""
    idx = text.find("\n" + TIMING_SECTION + "\n")
    return text if idx < 0 else text[:idx + 1]
