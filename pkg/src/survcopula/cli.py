"""Command-line interface: ``survcopula <command> ...``.

Exit status is 0 on success, 2 when a fit did not converge and 1 on input
errors (malformed data or configuration, non-nested models, ...).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .copulas import Family
from .crossing import NoCrossingError, bootstrap_crossing, crossing_point, default_bracket
from .estimation import FitOptions, fit, lr_test
from .fileio import (
    to_jsonable,
    ConfigError,
    DatasetError,
    atomic_write_text,
    load_config,
    read_dataset,
    read_semicompeting,
    write_dataset,
    write_json,
)
from .likelihood import ModelSpec
from .simulation import Scenario, default_workers, generate_dataset, replica_rngs, run_mc

log = logging.getLogger("survcopula")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2
ALL_COPULAS = [f.value for f in Family]


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _config(args) -> dict:
    return load_config(args.config) if getattr(args, "config", None) else {}


def _model_spec(cfg: dict, args) -> ModelSpec:
    block = dict(cfg.get("model", {}))
    for key in ("copula", "baseline", "regression", "degree", "n_intervals"):
        val = getattr(args, key, None)
        if val is not None:
            block[key] = val
    if "copula" not in block:
        raise InputError("no copula given (use --copula or a config 'model' block)")
    return ModelSpec(**block)


def _fit_options(cfg: dict, seed: int | None = None, **overrides) -> FitOptions:
    block = {k: v for k, v in cfg.get("fit", {}).items() if k != "standardize"}
    if seed is not None:
        block["seed"] = seed
    block.update(overrides)
    return FitOptions(**block)


def _scenario(cfg: dict, args) -> Scenario:
    block = dict(cfg.get("scenario", {}))
    for key in ("copula", "tau", "n", "baseline", "regression"):
        val = getattr(args, key, None)
        if val is not None:
            block[key] = val
    seed = args.seed if getattr(args, "seed", None) is not None else cfg.get("seed", 2024)
    base = Scenario.standard(
        block.get("copula", "Clayton"),
        block.get("tau", 0.25),
        block.get("baseline", "weibull"),
        block.get("regression", "YP"),
        block.get("n", 500),
        seed,
    )
    extra = {k: v for k, v in block.items() if k not in ("copula", "tau", "baseline", "regression", "n")}
    return replace(base, **extra) if extra else base


def _workers(cfg, args) -> int:
    if getattr(args, "workers", None):
        return args.workers
    return cfg.get("workers", default_workers())


def _emit(obj, output):
    if output:
        write_json(output, obj)
        log.info("wrote %s", output)
    else:
        print(json.dumps(to_jsonable(obj), indent=2))


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    cfg = _config(args)
    ds = read_dataset(args.dataset, standardize=args.standardize or cfg.get("fit", {}).get("standardize", False))
    spec = _model_spec(cfg, args)
    res = fit(ds.data, spec, _fit_options(cfg, args.seed))
    report = res.to_dict()
    report["covariates"] = {"margin1": ds.names1, "margin2": ds.names2}
    _emit(report, args.output)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    cfg = _config(args)
    ds = read_dataset(args.dataset, standardize=args.standardize)
    options = _fit_options(cfg, args.seed)
    rows = []
    for cls in args.classes:
        for base in args.baselines:
            for cop in args.copulas:
                spec = ModelSpec(cop, base, cls)
                try:
                    r = fit(ds.data, spec, replace(options, compute_se=False))
                    rows.append([cop, base, cls, r.loglik, r.n_params, r.aic, r.converged])
                except (ValueError, FloatingPointError) as exc:
                    log.warning("%s failed: %s", spec.label(), exc)
                    rows.append([cop, base, cls, math.nan, 0, math.nan, False])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["copula", "baseline", "regression", "loglik", "n_params", "aic", "converged"])
    for row in rows:
        w.writerow([*row[:3], repr(row[3]), row[4], repr(row[5]), int(row[6])])
    if args.output:
        atomic_write_text(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    ok = [r for r in rows if r[6]]
    if ok:
        best = min(ok, key=lambda r: r[5])
        log.info("smallest AIC: %s-%s-%s (%.4f)", best[0], best[1], best[2], best[5])
    return EXIT_OK if len(ok) == len(rows) else EXIT_NONCONVERGED


def cmd_simulate(args) -> int:
    cfg = _config(args)
    s = _scenario(cfg, args)
    data = generate_dataset(s, replica_rngs(s.seed, 1)[0])
    write_dataset(args.output, data, names1=["x1_bin", "x1_norm"], names2=["x2_bin", "x2_norm"])
    f1, f2 = data.failure_rates()
    print(f"wrote {data.n} clusters to {args.output}; failure rates: margin 1 {f1:.3f}, margin 2 {f2:.3f}")
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = _config(args)
    s = _scenario(cfg, args)
    mc = cfg.get("mc", {})
    M = args.M or mc.get("M", 100)
    specs = [ModelSpec(**b) for b in mc.get("specs", [])] or [
        ModelSpec(s.copula, "weibull", s.regression)
    ]
    options = _fit_options(cfg, args.seed)
    report = run_mc(s, M, specs, workers=_workers(cfg, args), options=options, level=mc.get("level", 0.95))
    out = Path(args.output or "mc_out")
    write_json(out / "mc_report.json", report.to_dict())
    rows = report.flat_records()
    cols = sorted({k for r in rows for k in r}, key=lambda k: (k not in ("replica", "spec", "converged", "aic", "loglik"), k))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    atomic_write_text(out / "mc_replicas.csv", buf.getvalue())
    for lab, qs in report.statistics.items():
        print(f"{lab}: converged {report.converged[lab]}/{M}, mean AIC {report.mean_aic[lab]:.2f}, choice {report.choice[lab]:.3f}")
        for q, st in qs.items():
            print(f"  {q:12s} AE {st.AE:9.4f} SDE {st.SDE:7.4f} ASE {st.ASE:7.4f} ARB {st.ARB:8.3f}% CR {st.CR:6.2f}%")
    return EXIT_OK


def cmd_crossing(args) -> int:
    cfg = _config(args)
    block = cfg.get("crossing")
    if not block:
        raise InputError("config needs a 'crossing' block with x_control and x_treat")
    ds = read_dataset(args.dataset)
    spec = _model_spec(cfg, args)
    res = fit(ds.data, spec, _fit_options(cfg, args.seed))
    margin = block.get("margin", 1)
    bracket = tuple(block["bracket"]) if "bracket" in block else default_bracket(ds.data, margin)
    report = {"model": spec.label(), "margin": margin, "converged": res.converged, "bracket": list(bracket)}
    if not res.converged:
        report["status"] = "fit did not converge"
        _emit(report, args.output)
        return EXIT_NONCONVERGED
    try:
        crossing_point(res, margin, block["x_control"], block["x_treat"], bracket)
    except NoCrossingError as exc:
        report.update(status="no crossing", detail=str(exc))
        _emit(report, args.output)
        return EXIT_OK
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    bs = bootstrap_crossing(
        ds.data,
        res,
        margin,
        block["x_control"],
        block["x_treat"],
        B=args.B or block.get("B", 1000),
        level=block.get("level", 0.95),
        seed=seed,
        bracket=bracket,
        workers=_workers(cfg, args),
    )
    report.update(status="unreliable" if bs.unreliable else "ok", **bs.to_dict())
    _emit(report, args.output)
    return EXIT_OK


def cmd_lrtest(args) -> int:
    rcfg, fcfg = load_config(args.reduced), load_config(args.full)
    ds = read_dataset(args.dataset, standardize=args.standardize or fcfg.get("fit", {}).get("standardize", False))
    rspec = ModelSpec(**rcfg.get("model", {}))
    fspec = ModelSpec(**fcfg.get("model", {}))
    if rspec == fspec:
        raise InputError("not nested: the two configurations describe the same model")
    options = _fit_options(fcfg, args.seed, compute_se=False)
    reduced = fit(ds.data, rspec, options)
    full_model = fspec.resolve(ds.data)
    try:
        start = full_model.pack(reduced.params)
    except ValueError as exc:
        raise InputError(f"not nested: {exc}") from None
    full = fit(ds.data, full_model, options, start=start)
    lr = lr_test(reduced, full)
    level = args.level if args.level is not None else fcfg.get("lrtest", {}).get("level", 0.05)
    report = {
        "reduced": rspec.label(),
        "full": fspec.label(),
        "loglik_reduced": reduced.loglik,
        "loglik_full": full.loglik,
        "stat": lr.stat,
        "df": lr.df,
        "p_value": lr.p_value,
        "level": level,
        "decision": lr.decision(level),
        "converged": reduced.converged and full.converged,
    }
    _emit(report, args.output)
    return EXIT_OK if report["converged"] else EXIT_NONCONVERGED


def cmd_prepare(args) -> int:
    ds, ties = read_semicompeting(args.raw)
    write_dataset(args.output, ds.data, ds.cluster_ids, ds.names1, ds.names2)
    f1, f2 = ds.data.failure_rates()
    print(f"wrote {ds.data.n} clusters to {args.output}; event rates {f1:.3f} / {f2:.3f}")
    if ties:
        print(f"progression recorded at death time (treated as death only): {', '.join(ties)}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="survcopula", description="Archimedean survival-copula models with Yang-Prentice margins.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dataset=True, config=True):
        if dataset:
            sp.add_argument("dataset", help="dataset CSV (cluster_id, y1, d1, y2, d2, x1_*, x2_*)")
        if config:
            sp.add_argument("-c", "--config", help="JSON run configuration")
        sp.add_argument("-o", "--output", help="output path")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, help="worker processes (default: $SURVCOPULA_WORKERS or CPU count)")

    def model_flags(sp):
        sp.add_argument("--copula", choices=ALL_COPULAS)
        sp.add_argument("--baseline", choices=["weibull", "bp", "pe"])
        sp.add_argument("--regression", choices=["PH", "PO", "YP"])
        sp.add_argument("--degree", type=int, help="Bernstein degree (default ceil(n^0.4))")
        sp.add_argument("--n-intervals", dest="n_intervals", type=int, help="piecewise intervals (default ceil(n^0.4))")

    sp = sub.add_parser("fit", help="fit one model and write a JSON report")
    common(sp)
    model_flags(sp)
    sp.add_argument("--standardize", action="store_true", help="center/scale non-binary covariates")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("sweep", help="AIC table over copulas x baselines x regression classes")
    common(sp)
    sp.add_argument("--copulas", nargs="+", default=ALL_COPULAS, choices=ALL_COPULAS)
    sp.add_argument("--baselines", nargs="+", default=["weibull", "bp", "pe"], choices=["weibull", "bp", "pe"])
    sp.add_argument("--classes", nargs="+", default=["PH", "PO", "YP"], choices=["PH", "PO", "YP"])
    sp.add_argument("--standardize", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate", help="generate one dataset from a scenario")
    common(sp, dataset=False)
    sp.add_argument("--copula", choices=ALL_COPULAS)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--baseline", choices=["weibull", "expweibull"])
    sp.add_argument("--regression", choices=["PH", "PO", "YP"])
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("mc", help="Monte Carlo study; writes mc_report.json and mc_replicas.csv")
    common(sp, dataset=False)
    sp.add_argument("--M", type=int)
    sp.add_argument("--copula", choices=ALL_COPULAS)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--baseline", choices=["weibull", "expweibull"])
    sp.add_argument("--regression", choices=["PH", "PO", "YP"])
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("crossing", help="crossing survival time with a bootstrap interval")
    common(sp)
    model_flags(sp)
    sp.add_argument("--B", type=int)
    sp.set_defaults(func=cmd_crossing)

    sp = sub.add_parser("lrtest", help="likelihood-ratio test of a PH/PO model against YP")
    sp.add_argument("dataset")
    sp.add_argument("reduced", help="config of the reduced (PH or PO) model")
    sp.add_argument("full", help="config of the full (YP) model")
    sp.add_argument("--level", type=float)
    sp.add_argument("--standardize", action="store_true")
    sp.add_argument("-o", "--output")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_lrtest)

    sp = sub.add_parser("prepare", help="build bivariate margins from progression/death/follow-up times")
    sp.add_argument("raw", help="CSV with id, T, T_star, A, covariates...")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_prepare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DatasetError, ConfigError, InputError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
