"""Command-line driver.

    refprice simulate    --out panel.csv [--config sim.json] [--segments S] [--seed N]
    refprice fit         --panel panel.csv --out fit.txt [--segments S] [--starts N] ...
    refprice fit-twostep --panel panel.csv --out fit.txt [--grid-step 0.01] [--init-fraction 0.3]
    refprice compare     --panel panel.csv --out compare.txt
    refprice report      fit.txt [--out table.txt]

Exit status: 0 success, 2 invalid input or configuration, 3 estimation failure,
4 file I/O error, 5 estimation finished without converging.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import panelio
from .compare import format_comparison, parse_comparison, run_comparison
from .datagen import SimulationSpec, simulate_panel
from .errors import EstimationError, InvalidInputError
from .estimator import fit
from .panelio import EstimatorConfig, FitReport, RunConfig
from .presets import default_simulation
from .twostep import TwoStepConfig, grid_search, make_grid

log = logging.getLogger("refprice")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ESTIMATION = 3
EXIT_IO = 4
EXIT_NOT_CONVERGED = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _fraction(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {value}")
    return value


def _step(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {value}")
    return value


def build_parser():
    parser = _Parser(prog="refprice", description=(
        "Estimate latent-class reference-price choice models with jointly estimated "
        "carry-over weights, and compare against the two-step grid search."))
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, panel=True, estimation=True):
        if panel:
            p.add_argument("--panel", required=True, help="panel CSV file to read")
        p.add_argument("--config", help="JSON configuration file (schema-tagged)")
        p.add_argument("--segments", type=_positive_int,
                       help="number of latent segments S (>= 1)")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--out", required=True, help="output file")
        if estimation:
            p.add_argument("--starts", type=_positive_int,
                           help="optimizer starts per fit (default 8)")
            p.add_argument("--threads", type=_positive_int,
                           help="worker threads for multistart and grid fan-out (default 1)")

    def twostep_flags(p):
        p.add_argument("--grid-step", type=_step,
                       help="spacing of the pi grid on [0, 1] (default 0.01)")
        p.add_argument("--init-fraction", type=_fraction,
                       help="share of each household's earliest periods held out for "
                            "initialization (default 0.3)")

    p = sub.add_parser("simulate", help="draw a synthetic panel and its truth file")
    common(p, panel=False, estimation=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="joint maximum likelihood fit")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("fit-twostep", help="two-step grid search baseline")
    common(p)
    twostep_flags(p)
    p.set_defaults(func=cmd_fit_twostep)

    p = sub.add_parser("compare", help="run both estimators and compare them")
    common(p)
    twostep_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render a fit or comparison report as a table")
    p.add_argument("report", help="report file written by fit, fit-twostep or compare")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


# --------------------------------------------------------------------------- helpers

def truth_path(panel_path):
    p = Path(panel_path)
    return p.with_name(p.stem + ".truth.json")


def _load_run_config(path):
    if path is None:
        return RunConfig()
    cfg = panelio.read_config(path)
    if isinstance(cfg, RunConfig):
        return cfg
    if isinstance(cfg, EstimatorConfig):
        return RunConfig(estimator=cfg)
    if isinstance(cfg, TwoStepConfig):
        return RunConfig(twostep=cfg)
    raise InvalidInputError(f"{path}: expected an estimator, twostep or run configuration")


def _resolve(args):
    cfg = _load_run_config(args.config)
    est = cfg.estimator
    opts = est.options
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.starts is not None:
        overrides["starts"] = args.starts
    if args.threads is not None:
        overrides["threads"] = args.threads
    opts = replace(opts, **overrides)
    segments = args.segments if args.segments is not None else est.segments
    ts = cfg.twostep
    if getattr(args, "grid_step", None) is not None:
        ts = replace(ts, grid=make_grid(args.grid_step))
    if getattr(args, "init_fraction", None) is not None:
        ts = replace(ts, init_fraction=args.init_fraction)
    return segments, opts, ts


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# --------------------------------------------------------------------------- commands

def cmd_simulate(args):
    if args.config is not None:
        spec = panelio.read_config(args.config)
        if not isinstance(spec, SimulationSpec):
            raise InvalidInputError(f"{args.config}: expected a simulation configuration")
        if args.segments is not None and args.segments != spec.mix.n_segments:
            raise InvalidInputError(
                f"--segments {args.segments} conflicts with the {spec.mix.n_segments}-segment "
                "truth in the configuration")
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
    else:
        segments = 3 if args.segments is None else args.segments
        try:
            spec = default_simulation(segments, seed=args.seed or 0)
        except ValueError as exc:
            raise InvalidInputError(str(exc)) from None
    panel = simulate_panel(spec)
    panelio.write_panel(panel, args.out)
    panelio.write_config(spec.mix, truth_path(args.out))
    log.info("wrote %s (N=%d, T=%d, K=%d) and %s", args.out, panel.n_households,
             panel.max_periods, panel.n_brands, truth_path(args.out))
    return EXIT_OK


def cmd_fit(args):
    segments, opts, _ = _resolve(args)
    panel = panelio.read_panel(args.panel)
    result = fit(panel, segments, opts)
    panelio.write_report(FitReport.from_fit(result), args.out)
    log.info("loglik %.6f, converged=%s", result.loglik, result.converged)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_fit_twostep(args):
    segments, opts, ts = _resolve(args)
    panel = panelio.read_panel(args.panel)
    result = grid_search(panel, ts, segments, opts)
    panelio.write_report(FitReport.from_grid_search(result), args.out)
    log.info("pooled pi %.4f, calibration loglik %.6f", result.pi_hat, result.fit.loglik)
    return EXIT_OK if result.fit.converged else EXIT_NOT_CONVERGED


def cmd_compare(args):
    segments, opts, ts = _resolve(args)
    panel = panelio.read_panel(args.panel)
    cmp = run_comparison(panel, segments, opts, ts)
    out = Path(args.out)
    _write_text(out, format_comparison(cmp))
    if cmp.joint is not None:
        panelio.write_report(FitReport.from_fit(cmp.joint),
                             out.with_name(out.stem + ".joint" + out.suffix))
    if cmp.twostep is not None:
        panelio.write_report(FitReport.from_grid_search(cmp.twostep),
                             out.with_name(out.stem + ".twostep" + out.suffix))
    if not cmp.ok:
        for method, message in cmp.failures.items():
            print(f"refprice: {method} estimation failed: {message}", file=sys.stderr)
        return EXIT_ESTIMATION
    converged = cmp.joint.converged and cmp.twostep.fit.converged
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def render_report(rep):
    """Aligned parameter-by-segment table with (*) marking significance at 0.01."""
    mix = rep.parameters
    title = "joint estimation" if rep.method == "joint" else "two-step estimation"
    lines = [f"{mix.n_segments} segment model: {title}", ""]
    head = ["Parameter"] + [f"Segment {s}" for s in range(1, mix.n_segments + 1)]
    rows = []

    estimates = rep.estimates()

    def cell(key):
        star = " (*)" if rep.significant.get(key) else ""
        return f"{estimates[key]:.4f}{star}"

    names = ["pi", "alpha0", "alpha1"] + [f"beta_{j}" for j in range(1, mix.n_brands)] \
        + ["beta_g", "beta_l", "beta_p"]
    for name in names:
        if name == "pi" and rep.fixed_pi is not None:
            rows.append([name, f"{rep.fixed_pi:.4f} (pooled)"] + [""] * (mix.n_segments - 1))
            continue
        rows.append([name] + [cell(f"{name}[{s}]") for s in range(1, mix.n_segments + 1)])
    if mix.n_segments > 1:
        rows.append(["psi"] + [cell(f"psi[{s}]") for s in range(1, mix.n_segments + 1)])
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    for r in [head] + rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    lines += ["", f"Log-likelihood: {rep.loglik:.2f}",
              f"Converged: {'yes' if rep.converged else 'no'}"]
    return "\n".join(lines) + "\n"


def render_comparison(data):
    lines = ["Carry-over weights", "segment  joint_pi  pooled_pi"]
    for s, (a, b) in enumerate(zip(data["joint_pi"], data["pooled_pi"]), start=1):
        lines.append(f"{s:<7}  {a:<8.4f}  {b:.4f}")
    lines += ["", "Full-panel log-likelihood"]
    for method, row in data["loglik"].items():
        lines.append(f"{method:<8} {row['full_panel_loglik']}")
    t = data["timing"]
    lines += ["", f"Wall clock: joint {t['joint_wall_time']:.2f} s, "
                  f"two-step {t['twostep_wall_time']:.2f} s, ratio {t['speed_ratio']:.1f}x",
              "", data["notes"].get("note", "")]
    return "\n".join(lines) + "\n"


def cmd_report(args):
    with open(args.report, encoding="utf-8") as fh:
        text = fh.read()
    if "refprice.comparison/" in text.split("\n[", 1)[0]:
        table = render_comparison(parse_comparison(text))
    else:
        table = render_report(panelio.parse_report(text))
    if args.out:
        _write_text(args.out, table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"refprice: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except EstimationError as exc:
        print(f"refprice: estimation failed: {exc}", file=sys.stderr)
        for item in exc.diagnostics if isinstance(exc.diagnostics, list) else \
                exc.diagnostics.items():
            print(f"  {item}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as exc:
        print(f"refprice: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
