"""Command-line interface: decompose, simulate, coverage, render."""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import pandas as pd

from .errors import ConfigError, ShiftDecompError
from .pipeline import RunConfig, run
from .report import DecompositionReport
from .svg import render_svg

EXIT_OK = 0


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _config_from_args(args) -> RunConfig:
    """Flags first, then the config file on top of them."""
    cols = {k: v for k, v in {
        "w_cols": args.w_cols, "z_cols": args.z_cols, "y_col": args.y_col,
        "domain_col": args.domain_col, "loss_col": args.loss_col, "pred_col": args.pred_col,
        "threshold": args.threshold,
    }.items() if v is not None}
    raw = {k: v for k, v in {
        "data": args.data, "source": args.source, "target": args.target,
        "targets": args.targets, "alpha": args.alpha, "B": args.B, "gamma": args.gamma,
        "train_fraction": args.train_fraction, "folds": args.folds,
        "crossfit_folds": args.crossfit_folds, "inner_subsample": args.inner_subsample,
        "clamp": args.clamp, "seed": args.seed, "learners": args.learners,
        "threads": args.threads, "report": args.report, "svg": args.svg,
    }.items() if v is not None}
    if args.config:
        try:
            fileconf = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(fileconf, dict):
            raise ConfigError("config must be a JSON object")
        cols.update(fileconf.pop("columns", {}) or {})
        raw.update(fileconf)
    raw["columns"] = cols
    return RunConfig.parse(raw)


def cmd_decompose(args) -> int:
    config = _config_from_args(args)
    report = run(config, stdin=sys.stdin if config.data == "-" else None)
    _write(config.report, report.to_json())
    if config.svg:
        base = Path(config.svg)
        panels = (["aggregate"] if report.aggregate else []) + [
            p for p in ("covariate", "outcome") if report.detailed.get(p)]
        for panel in panels:
            path = base if panel == "aggregate" else base.with_name(f"{base.stem}-{panel}{base.suffix or '.svg'}")
            path.write_text(render_svg(report, panel))
    for name, err in sorted(report.errors.items()):
        print(f"error: [{err['stage']}] {err['message']} (hint: {err['hint']})", file=sys.stderr)
    codes = [err["exit_code"] for _, err in sorted(report.errors.items())]
    return codes[0] if codes else EXIT_OK


def cmd_simulate(args) -> int:
    from .simulate import BUILDERS, generate

    kw = {}
    if args.mixture_gap is not None:
        kw["mixture_gap"] = args.mixture_gap
    if args.mixture_sd is not None:
        kw["mixture_sd"] = args.mixture_sd
    spec = BUILDERS[args.kind](n=args.n, seed=args.seed, **kw)
    ds = generate(spec)
    frame = pd.DataFrame(ds.x, columns=list(ds.w_names) + list(ds.z_names))
    frame["y"], frame["pred"], frame["loss"], frame["domain"] = ds.y, ds.pred, ds.loss, ds.domain
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format="%.17g", lineterminator="\n")
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_coverage(args) -> int:
    from .learners import default_candidates, fast_candidates
    from .nuisance import FitSettings
    from .simulate import BUILDERS, coverage_experiment

    spec = BUILDERS[args.kind]()
    cands = fast_candidates() if args.learners == "fast" else default_candidates()
    table = coverage_experiment(spec, args.estimator, args.targets, args.reps, args.n, args.alpha,
                                args.seed, settings=FitSettings(tuple(cands)), n_jobs=args.jobs)
    if args.json:
        _write(args.json, table.to_json() + "\n")
    _write(args.csv, table.to_csv())
    return EXIT_OK


def cmd_render(args) -> int:
    text = sys.stdin.read() if args.report == "-" else _read(args.report)
    report = DecompositionReport.from_json(text)
    _write(args.out, render_svg(report, args.panel))
    return EXIT_OK


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shiftdecomp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="decompose the performance gap between two domains")
    d.add_argument("--config", help="JSON config; its values override the flags below")
    d.add_argument("--data", help="CSV with a domain column ('-' reads stdin)")
    d.add_argument("--source", help="source-domain CSV (with --target)")
    d.add_argument("--target", help="target-domain CSV (with --source)")
    d.add_argument("--w-cols", type=_csv_list, help="comma-separated baseline covariates W")
    d.add_argument("--z-cols", type=_csv_list, help="comma-separated conditional covariates Z")
    d.add_argument("--y-col")
    d.add_argument("--domain-col")
    d.add_argument("--loss-col", help="per-row loss of the model under study")
    d.add_argument("--pred-col", help="predicted labels, or scores with --threshold")
    d.add_argument("--threshold", type=float)
    d.add_argument("--targets", type=_csv_list,
                   help="any of aggregate,detailed_covariate,detailed_outcome (default aggregate)")
    d.add_argument("--alpha", type=float, help="1 - CI level (default 0.1)")
    d.add_argument("--B", type=int, help="risk bins for the outcome-shift values (default 20)")
    d.add_argument("--gamma", type=float, help="subset draws per evaluation row (default 1)")
    d.add_argument("--train-fraction", type=float, help="default 0.8")
    d.add_argument("--folds", type=int, help="CV folds for model selection (default 3)")
    d.add_argument("--crossfit-folds", type=int, help="cross-fit the aggregate terms with K folds")
    d.add_argument("--inner-subsample", type=int, help="partner rows per outer row (default 2000)")
    d.add_argument("--clamp", type=float, nargs=2, metavar=("LO", "HI"))
    d.add_argument("--seed", type=int)
    d.add_argument("--learners", choices=("default", "fast"))
    d.add_argument("--threads", type=int)
    d.add_argument("--report", help="report JSON path (default stdout)")
    d.add_argument("--svg", help="aggregate chart path; detailed charts get -covariate/-outcome suffixes")
    d.set_defaults(fn=cmd_decompose)

    s = sub.add_parser("simulate", help="write a synthetic two-domain CSV")
    s.add_argument("--kind", choices=("gaussian_logistic", "uniform_logistic", "covariate_mixture"),
                   default="gaussian_logistic")
    s.add_argument("--n", type=int, default=5000, help="rows per domain")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mixture-gap", type=float)
    s.add_argument("--mixture-sd", type=float)
    s.add_argument("--out", default="-")
    s.set_defaults(fn=cmd_simulate)

    c = sub.add_parser("coverage", help="repeated-sampling CI coverage on a synthetic generator")
    c.add_argument("--kind", choices=("gaussian_logistic", "uniform_logistic", "covariate_mixture"),
                   default="gaussian_logistic")
    c.add_argument("--estimator", choices=("debiased", "plugin"), default="debiased")
    c.add_argument("--targets", type=_csv_list, default=["lambda_W", "lambda_Z", "lambda_Y"],
                   help="aggregate terms and/or vz:{1} / vy:{2,3} style subset values")
    c.add_argument("--reps", type=int, default=200)
    c.add_argument("--n", type=int, default=5000)
    c.add_argument("--alpha", type=float, default=0.1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--learners", choices=("default", "fast"), default="fast")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--csv", default="-")
    c.add_argument("--json")
    c.set_defaults(fn=cmd_coverage)

    r = sub.add_parser("render", help="render a report section as SVG")
    r.add_argument("--report", required=True, help="report JSON ('-' reads stdin)")
    r.add_argument("--panel", choices=("aggregate", "covariate", "outcome"), default="aggregate")
    r.add_argument("--out", default="-")
    r.set_defaults(fn=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ShiftDecompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
