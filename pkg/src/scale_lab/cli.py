"""Command-line entry points.

Four subcommands:

* ``flow``   -- integrate the continuous flow for a named signal and write
               the trace plus its expansion-remainder report;
* ``probe``  -- instantaneous rescale probes (or a step-rescale experiment
               with ``--step-scale``);
* ``sweep``  -- the full (beta1, beta2) x seed training sweep with
               oscillation scoring;
* ``report`` -- recompute rates and p-values from stored grids, or from an
               externally supplied omega matrix.

Exit codes: 0 success, 1 usage error, 2 runtime or parse error.  The
environment variable SCALE_LAB_THREADS caps worker threads.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DimensionError, DomainError, FlowAbort
from .flow import TimeScales, integrate_flow, steady_state_init
from .invariance import StepScaleExperiment, exact_invariance_probe, step_scale_grid
from .metrics import grid_report
from .optimizers import MomentState, OptimizerConfig
from .problems import make_problem
from .reporting import (CsvParseError, RunManifest, flow_trace_csv, probe_csv,
                        read_omega_grids, read_omega_matrix, run_trace_csv,
                        step_trace_csv, summary_csv, sweep_grid_csv, write_csv,
                        write_svg_lines)
from .signals import constant_signal, exponential_signal, sinusoidal_log_signal
from .training import sweep_grid
from .drift import measure_remainder


class UsageError(Exception):
    """Bad flag values; reported with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise DomainError(f"not a comma-separated float list: {text!r}")


def _threads(requested: int) -> int:
    cap = os.environ.get("SCALE_LAB_THREADS", "")
    if cap.strip():
        return max(1, min(requested, int(cap)))
    return max(1, requested)


def _manifest(args, command: str, skip=("out", "plot", "func")) -> RunManifest:
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in skip and not callable(v)}
    return RunManifest(command=command, config={k: str(v) for k, v in config.items()},
                       version=__version__)


# ---------------------------------------------------------------- flow

def _build_signal(args):
    if args.signal == "const":
        return constant_signal(args.scale)
    if args.signal == "exp":
        return exponential_signal(args.delta0, args.scale)
    if args.signal == "sin-log":
        return sinusoidal_log_signal(args.amplitude, args.omega, args.scale)
    raise DomainError(f"unknown signal {args.signal!r}")


def cmd_flow(args) -> int:
    out = Path(args.out)
    manifest = _manifest(args, "flow")
    ts = TimeScales(args.tau1, args.tau2, args.eta_bar, args.dt)
    signal = _build_signal(args)
    t_end = args.t_end if args.t_end is not None else ts.burn_in + 5.0 * ts.tau_max
    init = steady_state_init(signal, ts, t0=0.0)
    trace = integrate_flow(signal, ts, init, t_end=t_end, h=args.h)

    files = [flow_trace_csv(trace, out / "trace.csv")]
    report = None
    if t_end > ts.burn_in:
        report = measure_remainder(trace, signal, ts)
        delta0 = signal.params.get("delta0", "")
        rows = [(name, delta0, ch.max_abs,
                 "" if ch.bound_sup is None else ch.bound_sup,
                 "" if np.isnan(ch.constant) else ch.constant, "")
                for name, ch in report.channels.items()]
        files.append(write_csv(out / "remainder.csv",
                               ["channel", "delta0", "remainder", "bound", "constant",
                                "fitted_order"], rows))
    if args.plot:
        files.append(write_svg_lines(out / "flow.svg",
                                     [("norm_R", trace.t, trace.norm_r)],
                                     title=f"flow {args.signal}"))
    for f in files:
        manifest.add_output(f)
    manifest.finish()
    manifest.write(out)
    r_last = float(np.max(np.abs(trace.r[-1])))
    print(f"flow: {trace.t.size} samples to t={trace.t[-1]:.3g}; ||R||_inf(end) = {r_last:.9f}")
    if report is None:
        print(f"  (run shorter than burn-in {ts.burn_in:g}; no remainder report)")
    else:
        for name, ch in report.channels.items():
            print(f"  remainder[{name}] = {ch.max_abs:.3e}")
    return 0


# ---------------------------------------------------------------- probe

def cmd_probe(args) -> int:
    out = Path(args.out)
    manifest = _manifest(args, "probe")
    files = []
    if args.step_scale:
        betas = _floats(args.beta_grid)
        if any(not 0.0 < b < 1.0 for b in betas):
            raise UsageError(f"beta grid values must lie in (0,1): {betas}")
        grid = [(b1, b2) for b1 in betas for b2 in betas]
        jump = args.jump if args.jump is not None else args.steps // 2
        exp = StepScaleExperiment(base=np.array([args.base]),
                                  schedule=[(jump, args.multiplier)], beta_grid=grid)
        traces = step_scale_grid(exp, steps=args.steps, eta=args.eta)
        rows = []
        svg_series = []
        for (b1, b2), tr in sorted(traces.items()):
            files.append(step_trace_csv(tr, out / f"stepscale_{b1}_{b2}.csv"))
            rows.append((b1, b2, tr.transient_integral(jump, reference=1.0)))
            svg_series.append((f"({b1},{b2})", tr.steps, tr.norm_r))
        files.append(write_csv(out / "stepscale_summary.csv",
                               ["beta1", "beta2", "transient_integral"], rows))
        if args.plot:
            files.append(write_svg_lines(out / "stepscale.svg", svg_series,
                                         title=f"x{args.multiplier} rescale at step {jump}"))
        print(f"step-scale: {len(traces)} cells, jump x{args.multiplier} at step {jump}")
    else:
        lambdas = _floats(args.lambdas)
        if any(lam <= 0.0 for lam in lambdas):
            raise UsageError(f"rescaling factors must be positive: {lambdas}")
        g = np.array(_floats(args.g))
        state = config = None
        if args.method == "adam":
            m = np.array(_floats(args.m)) if args.m else np.zeros_like(g)
            v = np.array(_floats(args.v)) if args.v else np.ones_like(g)
            state = MomentState(m=m, v=v, theta=np.zeros_like(g), k=args.k)
            config = OptimizerConfig(beta1=args.beta1, beta2=args.beta2,
                                     epsilon=args.epsilon, bias_correction=args.bias_correction)
        result = exact_invariance_probe(args.method, state, g, lambdas, config)
        files.append(probe_csv(result, out / "probe.csv"))
        print(f"probe {args.method}: classification = {result.classification}")
        for lam, dev in zip(result.lambda_values, result.deviations):
            print(f"  lambda={lam:g}: deviation = {dev:.6e}")
    for f in files:
        manifest.add_output(f)
    manifest.finish()
    manifest.write(out)
    return 0


# ---------------------------------------------------------------- sweep

def cmd_sweep(args) -> int:
    out = Path(args.out)
    manifest = _manifest(args, "sweep")
    betas = _floats(args.beta_grid)
    if any(not 0.0 < b < 1.0 for b in betas) or not betas:
        raise UsageError(f"beta grid values must lie in (0,1): {betas}")
    if args.steps < 1 or args.window < 1 or args.seeds < 1:
        raise UsageError("steps, window, and seeds must all be >= 1")
    problem = make_problem(args.problem, seed=args.data_seed)
    seeds = list(range(args.seeds)) if args.seed_list is None else [
        int(s) for s in _floats(args.seed_list)]
    result = sweep_grid(problem, beta_axis=betas, seeds=seeds,
                        steps=args.steps, batch_size=args.batch_size, eta=args.eta,
                        window=args.window, metric=args.metric,
                        threads=_threads(args.threads))
    manifest.seeds = seeds

    files = []
    for (b1, b2, seed), trace in sorted(result.traces.items()):
        files.append(run_trace_csv(trace, out / "cells" / f"trace_{b1}_{b2}_s{seed}.csv"))
    files.append(sweep_grid_csv(result, out / "grid.csv"))
    files.append(summary_csv(result.report, out / "summary.csv"))
    if args.plot:
        series = [(f"({b1},{b2})", tr.k, tr.norm_r)
                  for (b1, b2, seed), tr in sorted(result.traces.items()) if seed == seeds[0]]
        files.append(write_svg_lines(out / "sweep.svg", series,
                                     title=f"{args.problem} ||R_k||, seed {seeds[0]}"))
    for f in files:
        manifest.add_output(f)
    manifest.finish()
    manifest.write(out)
    rep = result.report
    print(f"sweep {args.problem}: metric={args.metric} window={args.window} "
          f"K={rep.hits} N={rep.trials} rate={rep.rate:.1%} p={rep.p_value:.6g}")
    return 0


# ---------------------------------------------------------------- report

def cmd_report(args) -> int:
    out = Path(args.out)
    manifest = _manifest(args, "report")
    if args.ingest:
        matrix, axis = read_omega_matrix(Path(args.ingest))
        grids = [matrix] * args.assume_seeds
        rep = grid_report(grids, axis)
        mode = f"aggregated x{args.assume_seeds}"
    elif args.grid:
        grids, axis = read_omega_grids(Path(args.grid), metric=args.metric)
        rep = grid_report(grids, axis)
        mode = "per-seed"
    else:
        raise DomainError("report needs --grid or --ingest")
    files = [summary_csv(rep, out / "report_summary.csv")]
    for f in files:
        manifest.add_output(f)
    manifest.finish()
    manifest.write(out)
    print(f"report ({mode}): K={rep.hits} N={rep.trials} rate={rep.rate:.1%} "
          f"p={rep.p_value:.6g}")
    if rep.degenerate_rows:
        print(f"  degenerate rows (all-equal): {rep.degenerate_rows}")
    return 0


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scale-lab",
                     description="Adam flow, scale-invariance probes, and oscillation statistics")
    parser.add_argument("--version", action="version", version=f"scale-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("flow", help="integrate the continuous Adam flow")
    p.add_argument("--signal", required=True, choices=("const", "exp", "sin-log"))
    p.add_argument("--delta0", type=float, default=0.05)
    p.add_argument("--amplitude", type=float, default=0.05)
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--tau1", type=float, default=1.0)
    p.add_argument("--tau2", type=float, default=1.0)
    p.add_argument("--eta-bar", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--out", default="scale-lab-out/flow")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("probe", help="gradient rescale probes")
    p.add_argument("--method", choices=("adam", "signsgd", "gd"), default="signsgd")
    p.add_argument("--lambdas", default="0.1,2,10")
    p.add_argument("--g", default="1.0")
    p.add_argument("--m", default=None)
    p.add_argument("--v", default=None)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.9)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--bias-correction", action="store_true")
    p.add_argument("--step-scale", action="store_true")
    p.add_argument("--base", type=float, default=1.0)
    p.add_argument("--multiplier", type=float, default=10.0)
    p.add_argument("--jump", type=int, default=None)
    p.add_argument("--steps", type=int, default=32000)
    p.add_argument("--eta", type=float, default=1e-3)
    p.add_argument("--beta-grid", default="0.9,0.99,0.999")
    p.add_argument("--out", default="scale-lab-out/probe")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("sweep", help="momentum-grid training sweep")
    p.add_argument("--problem", required=True, choices=("quadratic", "logistic", "mlp"))
    p.add_argument("--seeds", type=int, default=3, help="number of seeds (0..n-1)")
    p.add_argument("--seed-list", default=None, help="explicit comma-separated seeds")
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--metric", choices=("omega1", "omega2"), default="omega1")
    p.add_argument("--beta-grid", default="0.9,0.99,0.999")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="scale-lab-out/sweep")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="recompute rates and p-values from grids")
    p.add_argument("--grid", default=None, help="grid.csv from a sweep")
    p.add_argument("--metric", choices=("omega1", "omega2"), default="omega1")
    p.add_argument("--ingest", default=None, help="externally supplied omega matrix CSV")
    p.add_argument("--assume-seeds", type=int, default=1,
                   help="replicate an aggregated matrix over this many seeds")
    p.add_argument("--out", default="scale-lab-out/report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"scale-lab: usage error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, DimensionError, CsvParseError, FlowAbort) as exc:
        print(f"scale-lab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"scale-lab: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
