"""Command-line front end: ``reachquant {verify,feasibility,simulate,compare,sweep}``.

Exit status: 0 success, 2 config/parse error, 3 certificate rejected,
4 infeasible (T, N), 5 quantizer overflow. ``REACHQUANT_OUT`` overrides the
configured output directory (``--out`` overrides both).
"""
from __future__ import annotations

import argparse
import csv
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, example_config
from .numerics import induced_inf_norm
from .observer import (
    LMI_FORM,
    CertificateError,
    derive_gains,
    make_bound_functions,
    verify_certificate,
)
from .plant import observability_rank
from .quantizer import EncodedPacket, QuantizerOverflow, pack_packet
from .schemes import (
    SchemeKind,
    compare_schemes,
    min_feasible_N,
    norm_proof_ratio,
)
from .sim import (
    InfeasibleConfigError,
    run_closed_loop,
    steady_state_metrics,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VERIFY = 3
EXIT_INFEASIBLE = 4
EXIT_OVERFLOW = 5

OUT_ENV = "REACHQUANT_OUT"


class _Exit(Exception):
    def __init__(self, code, message=""):
        super().__init__(message)
        self.code = code


def _load(args) -> ExperimentConfig:
    cfg = example_config() if args.config in (None, "example") else load_config(args.config)
    seeds = None
    if getattr(args, "seeds", None) is not None:
        seeds = tuple(range(args.seeds))
    if getattr(args, "seed", None) is not None:
        seeds = (args.seed,)
    return cfg.with_overrides(
        scheme=getattr(args, "scheme", None),
        seeds=seeds,
        dt=getattr(args, "dt", None),
        horizon=getattr(args, "horizon", None),
        workers=getattr(args, "workers", None),
        inflation=getattr(args, "inflation", None),
        halfwidth_decoder=True if getattr(args, "halfwidth_decoder", False) else None,
    )


def _out_dir(args, cfg) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV) or cfg.out)


def _fmt_vec(v):
    return "[" + ", ".join(f"{x:.4f}" for x in np.ravel(v)) + "]"


# --- verify ------------------------------------------------------------------

def cmd_verify(cfg: ExperimentConfig, stream=None) -> int:
    plant, cert, bounds = cfg.plant(), cfg.certificate(), cfg.bounds()
    report = verify_certificate(plant, cert)
    gains = derive_gains(cert, plant)
    fns = make_bound_functions(cert, gains, plant, bounds)
    p = lambda *a: print(*a, file=stream or sys.stdout)
    p(f"LMI form        : {LMI_FORM}")
    p(f"result          : {report}")
    p(f"K = P^-1 Q      : {_fmt_vec(gains.K)}")
    p(f"lambda_e        : {gains.lambda_e:.6g}")
    p(f"lambda_max(P)   : {fns.extras['lambda_max_P']:.6g}")
    p(f"lambda_min(P)   : {fns.extras['lambda_min_P']:.6g}")
    p(f"beta_hat(r, s)  : {fns.kl_coeff:.6g} * exp(-{fns.lambda_e / 2:.6g} s) * r")
    p(f"gamma_hat(r)    : {fns.gain_coeff:.6g} * r")
    p(f"gamma_r(s)      : {fns.gain_coeff * fns.recon_input_gain:.6g} * s")
    p(f"beta_d(0)       : {float(fns.beta_d(0.0)):.6g}   (limit {float(fns.gamma_hat(bounds.d_b)):.6g})")
    p(f"|KH|            : {induced_inf_norm(gains.K @ plant.H):.6g}")
    rank = observability_rank(plant)
    note = "" if rank == plant.n else "  WARNING: (A, H) not observable"
    p(f"observability   : rank {rank} of {plant.n}{note}")
    return EXIT_OK if report.passed else EXIT_VERIFY


# --- feasibility ---------------------------------------------------------------

def cmd_feasibility(cfg: ExperimentConfig, stream=None) -> int:
    A = np.array(cfg.A)
    rep_set, rep_norm = compare_schemes(A, cfg.T, cfg.N)
    p = lambda *a: print(*a, file=stream or sys.stdout)
    p(f"T = {cfg.T:g}, N = {cfg.N}")
    p(f"set-based  rho(|Lambda|/N)  = {rep_set.lhs:.6f}  {'feasible' if rep_set.feasible else 'INFEASIBLE'}")
    p(f"norm-based exp(|A|T)/N      = {rep_norm.lhs:.6f}  {'feasible' if rep_norm.feasible else 'INFEASIBLE'}")
    dominance = rep_set.lhs <= rep_norm.lhs + 1e-8
    p(f"dominance set <= norm       : {'holds' if dominance else 'VIOLATED'}")
    n_set = min_feasible_N(A, cfg.T, SchemeKind.SET_BASED)
    n_norm = min_feasible_N(A, cfg.T, SchemeKind.NORM_BASED)
    p(f"minimal feasible N          : set {n_set}, norm {n_norm}")
    p(f"norm proof ratio |A|T/N     : {norm_proof_ratio(induced_inf_norm(A), cfg.T, cfg.N):.6f}  (diagnostic)")
    chosen = {SchemeKind.SET_BASED: rep_set, SchemeKind.NORM_BASED: rep_norm}
    ok = all(chosen[s].feasible for s in cfg.schemes())
    return EXIT_OK if ok else EXIT_INFEASIBLE


# --- simulate / compare ---------------------------------------------------------

def _run_one(cfg: ExperimentConfig, scheme_value: str, seed: int, halfwidth_decoder: bool,
             out_dir: str | None):
    """Worker: one closed-loop run. Returns a summary dict (never the trace)."""
    scheme = SchemeKind(scheme_value)
    row = {"scheme": scheme_value, "seed": seed,
           "decoder": "halfwidth" if halfwidth_decoder else "centroid",
           "inflation": cfg.inflation}
    try:
        trace = run_closed_loop(
            cfg.plant(), cfg.bounds(), cfg.certificate(), cfg.quantizer(), scheme,
            cfg.signals(), cfg.horizon, cfg.dt, seed, T=cfg.T,
            x0=cfg.initial_state(), halfwidth_decoder=halfwidth_decoder,
            inflation=cfg.inflation)
    except QuantizerOverflow as exc:
        row.update(status="overflow", error=str(exc))
        return row
    m = steady_state_metrics(trace)
    row.update(status="ok", eq_inf=m.eq_inf, er_inf=m.er_inf,
               transmissions=len(trace.transmissions))
    if out_dir is not None:
        stem = f"{scheme_value}_seed{seed}" + ("_halfwidth" if halfwidth_decoder else "")
        path = write_trace_csv(trace, Path(out_dir) / f"{stem}.csv")
        with open(Path(out_dir) / f"{stem}.bin", "wb") as fh:
            for r in trace.transmissions:
                fh.write(pack_packet(EncodedPacket(r.indices, r.k)))
        row["trace"] = str(path)
    return row


def _run_all(cfg: ExperimentConfig, out_dir: Path | None) -> list[dict]:
    jobs = [(s.value, seed, False) for s in cfg.schemes() for seed in cfg.seeds]
    if cfg.halfwidth_decoder:
        jobs += [(s.value, seed, True) for s in cfg.schemes() for seed in cfg.seeds]
    target = None if out_dir is None else str(out_dir)
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_one, cfg, s, seed, pd, target) for s, seed, pd in jobs]
            return [f.result() for f in futures]
    return [_run_one(cfg, s, seed, pd, target) for s, seed, pd in jobs]


def _precheck(cfg: ExperimentConfig):
    report = verify_certificate(cfg.plant(), cfg.certificate())
    if not report.passed:
        raise _Exit(EXIT_VERIFY, f"observer certificate rejected: {report}")
    rep_set, rep_norm = compare_schemes(np.array(cfg.A), cfg.T, cfg.N)
    reports = {SchemeKind.SET_BASED: rep_set, SchemeKind.NORM_BASED: rep_norm}
    for s in cfg.schemes():
        if not reports[s].feasible:
            raise _Exit(EXIT_INFEASIBLE, f"infeasible configuration: {reports[s]}")


def _summary_table(rows, stream):
    """One column per scheme, min/median/max over seeds."""
    p = lambda *a: print(*a, file=stream or sys.stdout)
    for decoder in ("centroid", "halfwidth"):
        sel = [r for r in rows if r["decoder"] == decoder]
        if not sel:
            continue
        schemes = [s for s in ("set", "norm") if any(r["scheme"] == s for r in sel)]
        p(f"\nsteady-state errors ({decoder} decoder), min / median / max over seeds")
        p(f"{'':28s}" + "".join(f"{s + '-based':>28s}" for s in schemes))
        for key, label in (("eq_inf", "quantization error e_q"), ("er_inf", "reconstruction error e_r")):
            cells = []
            for s in schemes:
                vals = [r[key] for r in sel if r["scheme"] == s and r["status"] == "ok"]
                over = sum(1 for r in sel if r["scheme"] == s and r["status"] != "ok")
                if vals:
                    cell = f"{min(vals):.4f}/{statistics.median(vals):.4f}/{max(vals):.4f}"
                else:
                    cell = "n/a"
                if over:
                    cell += f" ({over} overflow)"
                cells.append(f"{cell:>28s}")
            p(f"{label:28s}" + "".join(cells))


def _write_summary(rows, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "summary.csv"
    keys = ["scheme", "decoder", "inflation", "seed", "status", "eq_inf", "er_inf", "transmissions", "trace"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(r[k]) if isinstance(r.get(k), float) else r.get(k, "")) for k in keys})
    return path


def cmd_simulate(cfg: ExperimentConfig, out_dir: Path, stream=None) -> int:
    _precheck(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _run_all(cfg, out_dir)
    path = _write_summary(rows, out_dir)
    _summary_table(rows, stream)
    print(f"\ntraces and summary written to {out_dir} ({path.name})", file=stream or sys.stdout)
    if any(r["status"] == "overflow" and r["decoder"] == "centroid" for r in rows):
        return EXIT_OVERFLOW
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, stream=None) -> int:
    cfg = cfg.with_overrides(scheme="both")
    code = cmd_feasibility(cfg, stream)
    if code != EXIT_OK:
        return code
    _precheck(cfg)
    rows = _run_all(cfg, None)
    _summary_table(rows, stream)
    if any(r["status"] == "overflow" and r["decoder"] == "centroid" for r in rows):
        return EXIT_OVERFLOW
    return EXIT_OK


# --- sweep --------------------------------------------------------------------

SWEEP_COLUMNS = ["T", "N", "lhs_set", "lhs_norm", "feasible_set", "feasible_norm",
                 "eq_inf_set", "er_inf_set", "eq_inf_norm", "er_inf_norm"]


def _sweep_cell(cfg: ExperimentConfig, T: float, N: int, simulate: bool) -> dict:
    rep_set, rep_norm = compare_schemes(np.array(cfg.A), T, N)
    row = {"T": T, "N": N, "lhs_set": rep_set.lhs, "lhs_norm": rep_norm.lhs,
           "feasible_set": rep_set.feasible, "feasible_norm": rep_norm.feasible}
    if not simulate:
        return row
    cell_cfg = replace(cfg, T=T, N=N, Br=None)
    for scheme, rep in ((SchemeKind.SET_BASED, rep_set), (SchemeKind.NORM_BASED, rep_norm)):
        if not rep.feasible:
            continue
        try:
            res = _run_one(cell_cfg, scheme.value, cfg.seeds[0], False, None)
        except ValueError:
            continue  # horizon too short for a steady-state metric at this T
        if res["status"] == "ok":
            row[f"eq_inf_{scheme.value}"] = res["eq_inf"]
            row[f"er_inf_{scheme.value}"] = res["er_inf"]
    return row


def sweep(cfg: ExperimentConfig, T_values, N_values, simulate: bool = True) -> list[dict]:
    cells = [(float(T), int(N)) for T in T_values for N in N_values]
    if not cells:
        raise ValueError("sweep ranges must be nonempty")
    if cfg.workers > 1 and simulate:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_sweep_cell, cfg, T, N, simulate) for T, N in cells]
            return [f.result() for f in futures]
    return [_sweep_cell(cfg, T, N, simulate) for T, N in cells]


def write_sweep_csv(rows, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(r[k]) if isinstance(r.get(k), float) else r.get(k, ""))
                        for k in SWEEP_COLUMNS})
    return path


def cmd_sweep(cfg: ExperimentConfig, T_values, N_values, out_dir: Path, simulate=True,
              stream=None) -> int:
    rows = sweep(cfg, T_values, N_values, simulate)
    path = write_sweep_csv(rows, out_dir / "sweep.csv")
    print(f"{len(rows)} cells written to {path}", file=stream or sys.stdout)
    return EXIT_OK


# --- entry point ------------------------------------------------------------------

def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachquant",
        description="Dynamic quantization for remote state estimation over a finite-rate channel.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="experiment config file (default: bundled two-state example)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("verify", parents=[common], help="check the observer LMI certificate")
    sub.add_parser("feasibility", parents=[common], help="boundedness conditions for both schemes")

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--scheme", choices=["set", "norm", "both"])
    g = run_opts.add_mutually_exclusive_group()
    g.add_argument("--seed", type=int, help="single disturbance seed")
    g.add_argument("--seeds", type=int, help="use seeds 0..SEEDS-1")
    run_opts.add_argument("--dt", type=float)
    run_opts.add_argument("--horizon", type=float)
    run_opts.add_argument("--workers", type=int)
    run_opts.add_argument("--paper-decoder", "--halfwidth-decoder", dest="halfwidth_decoder",
                          action="store_true",
                          help="also run with the half-width decoder formula")
    run_opts.add_argument("--inflation", choices=["conservative", "integral"],
                          help="range inflation constant (default: conservative)")

    p_sim = sub.add_parser("simulate", parents=[common, run_opts], help="run closed-loop simulations")
    p_sim.add_argument("--out", help=f"output directory (env {OUT_ENV})")
    sub.add_parser("compare", parents=[common, run_opts], help="feasibility plus steady-state table")
    p_sw = sub.add_parser("sweep", parents=[common, run_opts], help="(T, N) grid to CSV")
    p_sw.add_argument("--out", help=f"output directory (env {OUT_ENV})")
    p_sw.add_argument("--T-values", type=_float_list, required=True, help="comma-separated")
    p_sw.add_argument("--N-values", type=_int_list, required=True, help="comma-separated")
    p_sw.add_argument("--no-sim", action="store_true", help="feasibility only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "feasibility":
            return cmd_feasibility(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, _out_dir(args, cfg))
        if args.command == "compare":
            return cmd_compare(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.T_values, args.N_values, _out_dir(args, cfg),
                             simulate=not args.no_sim)
    except (ConfigError, CertificateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY if isinstance(exc, CertificateError) else EXIT_PARSE
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InfeasibleConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except QuantizerOverflow as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
