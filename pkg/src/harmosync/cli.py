"""Command-line interface: ``analyze``, ``simulate``, ``sweep`` and ``verify``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import kernels
from .graph import GraphError, SpectrumError, build_laplacian, read_graph
from .output import OutputError, emit_plot_data, write_events_csv, write_rows_csv, write_trace_csv
from .propagation import CertificateError, FrameError, build_eps_frame, certificate, system_matrices
from .quantizer import ZoomError
from .scenario import ScenarioError, load_scenario
from .simulator import InfeasibleSamplingError, long_run_error, simulate, sweep, sync_error
from .stability import DegenerateSamplingError, feasible_windows, spectral_radius_reduced
from .verify import verify_reference

CONFIG_ERRORS = (
    ScenarioError,
    GraphError,
    SpectrumError,
    InfeasibleSamplingError,
    DegenerateSamplingError,
    CertificateError,
    FrameError,
    ZoomError,
    OutputError,
    FileNotFoundError,
)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _complexes(text: str) -> list[complex]:
    return [complex(x.replace("i", "j")) for x in text.replace(",", " ").split()]


def cmd_analyze(args) -> int:
    if args.eigenvalues:
        lams = _complexes(args.eigenvalues)
        sysm = None
    else:
        L = build_laplacian(read_graph(args.graph))
        sysm = system_matrices(args.omega, args.tau, L)
        lams = list(sysm.spectrum.lambdas)
    report = feasible_windows(lams, args.omega, k_max=args.windows)
    print(f"omega = {args.omega:.10g}   tau = {args.tau:.10g}")
    print(f"{'mode':>4}  {'Re(lambda)':>12}  {'Im(lambda)':>12}  {'phi':>10}  {'arccot(phi)':>11}")
    for i, m in enumerate(report.per_mode, start=2):
        print(f"{i:>4}  {m.lam.real:>12.6f}  {m.lam.imag:>12.6f}  {m.phi:>10.6f}  {m.arccot_phi:>11.6f}")
    print(f"angular margin = {report.tau0:.6f} rad")
    for k, (lo, hi) in enumerate(report.windows):
        print(f"window {k}: ({lo:.6f}, {hi:.6f})")
    feasible = report.is_feasible(args.tau)
    print(f"tau feasible: {'yes' if feasible else 'no'}")
    if feasible:
        print(f"rho(E_hat) = {spectral_radius_reduced(lams, args.omega, args.tau):.10f}")

    cert = None
    if args.certificate:
        if sysm is None:
            print("certificate needs a graph (the eigenvalues alone do not fix the basis)", file=sys.stderr)
            return 2
        if not feasible:
            print("no certificate: sampling period is infeasible")
        else:
            frame = build_eps_frame(sysm, args.eps_norm, args.frame)
            cert = certificate(sysm, frame, args.delta, args.M, args.eps_slack, strict=False)
            print(f"frame = {frame.method}  c_out = {cert.c_out:.6g}  c_in = {cert.c_in:.6g}  xi_bar = {cert.xi_bar:.6g}")
            for key, val in cert.as_row().items():
                print(f"{key} = {val:.10g}")
            print(f"T_steps = {cert.T_steps}")
            print("certificate: " + ("valid" if cert.valid else "INVALID (" + "; ".join(cert.issues) + ")"))

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_rows_csv(out / "modes.csv", ["mode", "lambda_re", "lambda_im", "phi", "arccot_phi"],
                       [(i, m.lam.real, m.lam.imag, m.phi, m.arccot_phi) for i, m in enumerate(report.per_mode, 2)])
        write_rows_csv(out / "windows.csv", ["k", "lower", "upper"],
                       [(k, lo, hi) for k, (lo, hi) in enumerate(report.windows)])
        if cert is not None:
            row = {**cert.as_row(), "T_steps": cert.T_steps, "valid": cert.valid}
            write_rows_csv(out / "certificate.csv", list(row), [list(row.values())])
    return 0


def _backend(name):
    if name == "auto":
        return None
    backends = kernels.available_backends()
    if name not in backends:
        raise ZoomError(f"backend {name!r} is not available (have: {', '.join(backends)})")
    return backends[name]


def cmd_simulate(args) -> int:
    config = load_scenario(args.scenario)
    if args.dense is not None:
        config = replace(config, dense=args.dense)
    trace = simulate(config, backend=_backend(args.backend))
    err = sync_error(trace)
    cert = trace.certificate
    print(f"backend = {trace.backend}  samples = {len(trace.t)}  mode = {trace.mode}")
    if trace.feasible is not None:
        print(f"tau feasible: {'yes' if trace.feasible else 'no'}")
    if cert is not None:
        print(f"rho = {cert.rho:.6f}  M_threshold = {cert.M_threshold:.6g}  certificate: "
              + ("valid" if cert.valid else "invalid"))
    if trace.k0 is not None:
        print(f"zoom-in from k0 = {trace.k0}, theta = {trace.theta:.6g}, dwell = {trace.T_steps} samples")
    if len(err):
        print(f"err_inf: start = {err[0]:.6g}  final = {err[-1]:.6g}  long-run max = {long_run_error(trace):.6g}")
    print(f"saturated samples: {int(trace.saturated.sum())}")
    if args.out:
        out = Path(args.out)
        emit_plot_data(trace, out)
        write_trace_csv(trace, out / "trace.csv")
        write_events_csv(trace, out / "events.csv")
        print(f"wrote {out}/trace.csv, events.csv, positions.csv, velocities.csv, error.csv")
    return 0


def cmd_sweep(args) -> int:
    config = load_scenario(args.scenario)
    taus = _floats(args.taus) if args.taus else [config.tau]
    mus = _floats(args.mus) if args.mus else [config.mu]
    deltas = _floats(args.deltas) if args.deltas else [config.Delta]
    rows = sweep(config, taus, mus, deltas, jobs=args.jobs)
    keys = ["tau", "mu", "Delta", "status", "feasible", "rho", "certified", "M_threshold", "saturated",
            "long_run_error", "message"]
    table = [[r.get(k, "") for k in keys] for r in rows]
    if args.out:
        write_rows_csv(args.out, keys, table)
    for r in rows:
        if r["status"] == "ok":
            print(f"tau={r['tau']:<8.4g} mu={r['mu']:<8.4g} Delta={r['Delta']:<8.4g} "
                  f"long-run err={r['long_run_error']:.4g} certified={r['certified']}")
        else:
            print(f"tau={r['tau']:<8.4g} mu={r['mu']:<8.4g} Delta={r['Delta']:<8.4g} error: {r['message']}")
    return 0


def cmd_verify(args) -> int:
    report = verify_reference()
    print(report.format())
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harmosync", description="Quantized sampled-data synchronization of harmonic oscillator networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="feasibility windows, spectral radius and certificate")
    src = a.add_mutually_exclusive_group()
    src.add_argument("--graph", default="standin", help="edge-list file or 'standin' (default)")
    src.add_argument("--eigenvalues", help="comma/space separated nonzero Laplacian eigenvalues, e.g. '1.5,3+0.2i'")
    a.add_argument("--omega", type=float, default=math.sqrt(math.pi / 2))
    a.add_argument("--tau", type=float, default=0.1)
    a.add_argument("--delta", type=float, default=0.5)
    a.add_argument("--M", type=float, default=10.0)
    a.add_argument("--eps-slack", type=float, default=0.1)
    a.add_argument("--eps-norm", type=float, default=None)
    a.add_argument("--frame", choices=("auto", "eigen", "schur"), default="auto")
    a.add_argument("--windows", type=int, default=2, help="list feasibility windows k = 0..WINDOWS")
    a.add_argument("--certificate", action="store_true", help="also compute the convergence certificate")
    a.add_argument("--out", help="directory for modes.csv, windows.csv, certificate.csv")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", help="output directory for trace.csv, events.csv and plot data")
    s.add_argument("--dense", type=int, default=None, help="sub-steps per sampling period")
    s.add_argument("--backend", choices=("auto", "cython", "python"), default="auto")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="grid over tau, mu and Delta with a long-run error summary")
    w.add_argument("--scenario", required=True)
    w.add_argument("--taus")
    w.add_argument("--mus")
    w.add_argument("--deltas")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--out", help="summary CSV path")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="recompute the reference table and spectral radius")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
