"""Command-line entry point: ``grslra {batch,forecast,simulate,bench}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineConfig, cadzow_forecast, ssa_forecast
from .batch_solver import BatchConfig, SolverDivergence, run_batch
from .datagen import LTVSpec, ltv_impulse_response
from .io import (
    DataError,
    denormalize,
    load_matrix_csv,
    load_series_csv,
    normalize_unit,
    write_matrix_csv,
    write_series_csv,
    write_table_csv,
)
from .manifold import CGOptions
from .online import ForecastConfig, forecast_errors, run_stream, summarize
from .structure import ObservationMask, forecast_mask, hankel_build

log = logging.getLogger("grslra")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_cg(p):
    g = p.add_argument_group("inner CG")
    g.add_argument("--cg-iters", type=int, default=20)
    g.add_argument("--cg-ftol", type=float, default=None, help="relative cost-decrease stop (default 1e-5)")


def _cg_options(args) -> CGOptions:
    if args.cg_ftol is None:
        return CGOptions(max_iter=args.cg_iters)
    return CGOptions(max_iter=args.cg_iters, ftol=args.cg_ftol)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grslra", description="Robust Hankel low-rank approximation and forecasting.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("batch", help="decompose one Hankel (or arbitrary) matrix into Lhat + Shat")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--series", type=Path, help="CSV series; stacked into an m-row Hankel matrix")
    src.add_argument("--matrix", type=Path, help="CSV matrix, one row per line")
    b.add_argument("--column", default=None)
    b.add_argument("--m", type=int, help="Hankel rows (required with --series)")
    b.add_argument("--mask", type=Path, help="CSV 0/1 matrix of observed entries")
    b.add_argument("--forecast-r", type=int, default=0, help="hide the last r anti-diagonals")
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--p", type=float, default=0.5)
    b.add_argument("--mu0", type=float, default=0.05)
    b.add_argument("--muI", type=float, default=0.005)
    b.add_argument("--rho0", type=float, default=1e-6)
    b.add_argument("--rhoI", type=float, default=10.0)
    b.add_argument("--iters", type=int, default=128)
    b.add_argument("--tau", type=float, default=5e-4)
    b.add_argument("--init", choices=["svd", "random"], default="svd")
    b.add_argument("--fill", choices=["zeros", "subspace"], default="zeros")
    b.add_argument("--seed", type=int, default=None, help="required with --init random")
    b.add_argument("--out-dir", type=Path, default=Path("."))
    _add_cg(b)

    f = sub.add_parser("forecast", help="sliding-window robust forecasts over a series")
    _add_forecast_args(f)
    f.add_argument("--out", type=Path, default=Path("forecast.csv"))
    f.add_argument("--report", type=Path, default=Path("report.json"))

    s = sub.add_parser("simulate", help="noisy impulse response of a random time-varying system")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--n", type=int, default=300)
    s.add_argument("--drift", type=float, default=0.001)
    s.add_argument("--sigma", type=float, default=0.01)
    s.add_argument("--rate", type=float, default=0.05)
    s.add_argument("--amp", type=float, default=0.5)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out-dir", type=Path, default=Path("."))

    be = sub.add_parser("bench", help="robust forecaster vs. SSA and Cadzow on one series")
    _add_forecast_args(be, input_required=False)
    be.add_argument("--simulate-seed", type=int, default=None, help="bench on a simulated series instead of --input")
    be.add_argument("--sim-n", type=int, default=300)
    be.add_argument("--cadzow-iters", type=int, default=500)
    be.add_argument("--out", type=Path, default=Path("bench.csv"))
    be.add_argument("--report", type=Path, default=Path("bench.json"))
    return parser


def _add_forecast_args(p, input_required=True):
    p.add_argument("--input", type=Path, required=input_required)
    p.add_argument("--column", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--mu", type=float, default=0.005)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--rho0", type=float, default=1e-6)
    p.add_argument("--rhoI", type=float, default=10.0)
    p.add_argument("--imin", type=int, default=16)
    p.add_argument("--imax", type=int, default=128)
    p.add_argument("--eps-ref", type=float, default=5e-4)
    p.add_argument("--start", type=int, default=None, help="first forecast position, 1-based (default 2m)")
    p.add_argument("--fill", choices=["subspace", "zeros"], default="subspace")
    p.add_argument("--cold-start", action="store_true", help="random subspace per window (needs --seed)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--normalize", action="store_true", help="scale the series to [0, 1] first")
    _add_cg(p)


def _forecast_config(args) -> ForecastConfig:
    if args.cold_start and args.seed is None:
        raise UsageError("--cold-start needs an explicit --seed")
    return ForecastConfig(
        k=args.k,
        m=args.m,
        r=args.r,
        mu=args.mu,
        p=args.p,
        rho0=args.rho0,
        rhoI=args.rhoI,
        Imin=args.imin,
        Imax=args.imax,
        eps_ref=args.eps_ref,
        start=args.start,
        warm_start=not args.cold_start,
        fill=args.fill,
        seed=0 if args.seed is None else args.seed,
        cg=_cg_options(args),
    )


def _json_dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=True) + "\n", encoding="utf-8")


def cmd_batch(args) -> int:
    cfg = BatchConfig(
        k=args.k,
        p=args.p,
        mu0=args.mu0,
        muI=args.muI,
        rho0=args.rho0,
        rhoI=args.rhoI,
        I=args.iters,
        tau=args.tau,
        init=args.init,
        fill=args.fill,
        seed=args.seed,
        cg=_cg_options(args),
    )
    if args.series is not None:
        if args.m is None:
            raise UsageError("--series needs --m")
        X = hankel_build(load_series_csv(args.series, args.column).values, args.m)
    else:
        X = load_matrix_csv(args.matrix)
    if args.mask is not None:
        M = load_matrix_csv(args.mask)
        if M.shape != X.shape:
            raise DataError(f"mask shape {M.shape} does not match data shape {X.shape}")
        mask = ObservationMask(M != 0)
    else:
        mask = forecast_mask(*X.shape, args.forecast_r)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        res = run_batch(X, mask, cfg)
    except SolverDivergence as exc:
        _json_dump(args.out_dir / "diagnostics.json", {"config": cfg.to_dict(), "history": exc.history, "error": str(exc)})
        raise
    write_matrix_csv(args.out_dir / "Lhat.csv", res.Lhat)
    write_matrix_csv(args.out_dir / "Shat.csv", res.Shat)
    _json_dump(
        args.out_dir / "diagnostics.json",
        {
            "config": cfg.to_dict(),
            "shape": list(X.shape),
            "iterations_used": res.iterations_used,
            "eps": res.eps,
            "history": res.history,
            "elapsed": time.perf_counter() - t0,
        },
    )
    print(f"batch: {res.iterations_used} iterations, eps={res.eps:.3g}, outputs in {args.out_dir}")
    return EXIT_OK


def _load_forecast_series(args):
    sf = load_series_csv(args.input, args.column)
    d = sf.values
    norm = None
    if args.normalize:
        d, lo, hi = normalize_unit(d)
        norm = {"min": lo, "max": hi}
    return sf, d, norm


def forecast_report(d, cfg: ForecastConfig, norm=None, source=None) -> tuple[dict, list]:
    """Run the robust forecaster and assemble the JSON run report and CSV rows."""
    t0 = time.perf_counter()
    records = run_stream(d, cfg)
    elapsed = time.perf_counter() - t0
    err = forecast_errors(d, records)
    rows = []
    for rec, erow in zip(records, err):
        for h, pred in enumerate(rec.predictions):
            t = rec.j + h
            out = pred if norm is None else float(denormalize(pred, norm["min"], norm["max"]))
            truth = None
            if t < len(d):
                truth = d[t] if norm is None else float(denormalize(d[t], norm["min"], norm["max"]))
            rows.append(
                {
                    "j": rec.j,
                    "horizon": h + 1,
                    "target": t + 1,
                    "prediction": repr(out),
                    "actual": "" if truth is None else repr(float(truth)),
                    "abs_error": "" if not np.isfinite(erow[h]) else repr(float(erow[h])),
                }
            )
    report = {
        "source": source,
        "config": cfg.to_dict(),
        "normalization": norm,
        "summary": summarize(d, records),
        "records": [rec.to_dict() for rec in records],
        "timing": {"total_seconds": elapsed},
    }
    return report, rows


def cmd_forecast(args) -> int:
    cfg = _forecast_config(args)
    _, d, norm = _load_forecast_series(args)
    report, rows = forecast_report(d, cfg, norm, str(args.input))
    write_table_csv(args.out, rows)
    _json_dump(args.report, report)
    s = report["summary"]
    print(f"forecast: {s['n_records']} windows, mean abs deviation {s['mad_overall']:.4f}, mean iterations {s['mean_iterations']:.1f}")
    return EXIT_DIVERGED if s["n_diverged"] else EXIT_OK


def cmd_simulate(args) -> int:
    spec = LTVSpec(k=args.k, N=args.n, drift=args.drift, sigma=args.sigma, sp_rate=args.rate, sp_amp=args.amp, seed=args.seed)
    out = ltv_impulse_response(spec)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_series_csv(args.out_dir / "clean.csv", out.clean, "clean")
    write_series_csv(args.out_dir / "noisy.csv", out.noisy, "noisy")
    write_series_csv(args.out_dir / "outliers.csv", out.outliers.astype(int), "outlier")
    _json_dump(args.out_dir / "simulation.json", {"spec": spec.to_dict(), "n_outliers": int(out.outliers.sum())})
    print(f"simulate: {spec.N} samples, {int(out.outliers.sum())} outliers, written to {args.out_dir}")
    return EXIT_OK


def _baseline_errors(d, truth, m, k, r, first, fn):
    errs = np.full((len(d) - first + 1, r), np.nan)
    for i, j in enumerate(range(first, len(d) + 1)):
        pred = fn(d[:j])
        for h in range(r):
            if j + h < len(d):
                errs[i, h] = abs(pred[h] - truth[j + h])
    return errs


def _row(method, errs, seconds):
    row = {"method": method, "mad_overall": float(np.nanmean(errs)), "seconds": seconds}
    for h in range(errs.shape[1]):
        row[f"mad_h{h + 1}"] = float(np.nanmean(errs[:, h]))
    return row


def cmd_bench(args) -> int:
    cfg = _forecast_config(args)
    if args.simulate_seed is not None:
        sim = ltv_impulse_response(LTVSpec(k=args.k, N=args.sim_n, seed=args.simulate_seed))
        d, truth, norm, source = sim.noisy, sim.clean, None, f"simulated LTV seed {args.simulate_seed}"
    elif args.input is not None:
        _, d, norm = _load_forecast_series(args)
        truth, source = d, str(args.input)
    else:
        raise UsageError("bench needs --input or --simulate-seed")
    m, k, r = cfg.m, cfg.k, cfg.r
    first = max(2 * m - 1, min(cfg.first_position, len(d)))

    t0 = time.perf_counter()
    records = run_stream(d, cfg)
    robust = forecast_errors(truth, records)
    rows = [_row("grslra", robust, time.perf_counter() - t0)]

    t0 = time.perf_counter()
    errs = _baseline_errors(d, truth, m, k, r, first, lambda h: ssa_forecast(h, m, k, r))
    rows.append(_row("ssa", errs, time.perf_counter() - t0))

    bcfg = BaselineConfig(max_iters=args.cadzow_iters)
    t0 = time.perf_counter()
    errs = _baseline_errors(d, truth, m, k, r, first, lambda h: cadzow_forecast(h, m, k, r, bcfg))
    rows.append(_row("cadzow", errs, time.perf_counter() - t0))

    write_table_csv(args.out, rows)
    _json_dump(args.report, {"source": source, "config": cfg.to_dict(), "normalization": norm, "results": rows})
    for row in rows:
        print(f"{row['method']:>8}: mean abs deviation {row['mad_overall']:.4f}  ({row['seconds']:.1f}s)")
    return EXIT_OK


COMMANDS = {"batch": cmd_batch, "forecast": cmd_forecast, "simulate": cmd_simulate, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SolverDivergence as exc:
        print(f"grslra: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, ValueError) as exc:
        print(f"grslra: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
