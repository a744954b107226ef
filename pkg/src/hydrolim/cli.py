"""Command line entry point: ``hydrolim sweep|run-pe|run-ns|verify|norms``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .dynamics import NS, PE, NonFinite, StepperConfig, integrate, read_trajectory, write_trajectory
from .norms import e1_norm

EXIT_OK, EXIT_CONFIG, EXIT_NONFINITE, EXIT_IO = 0, 2, 3, 4


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_sweep(args) -> int:
    cfg = harness.SweepConfig.load(args.config)
    out = Path(args.out or cfg.output_dir)
    report = harness.run_sweep(cfg)
    harness.emit_report(report, out)
    for r in report.rows:
        x = "-" if r["x_eps"] is None else f"{r['x_eps']:.6e}"
        print(f"eps={r['eps']:<8g} X={x:<14} {r['status']}")
    if report.slope is not None:
        print(f"slope={report.slope:.4f} intercept={report.intercept:.4f} R2={report.r2:.5f}")
    else:
        print("slope undefined (degenerate sweep)")
    if report.preflight and not report.preflight["ok"]:
        print("warning: time-discretization error is not an order below the smallest X", file=sys.stderr)
    print(f"report written to {out}")
    if not report.ok_rows():
        return EXIT_NONFINITE
    return EXIT_OK


def _run(cfg: harness.SweepConfig, system, subdir: str, out) -> int:
    u0 = harness.initial_data(cfg)
    if isinstance(system, NS):
        u0 = harness.perturbed_data(cfg, u0, system.eps)
    traj = integrate(u0, system, StepperConfig(cfg.dt, cfg.T, cfg.sample_stride))
    manifest = write_trajectory(traj, Path(out or cfg.output_dir) / subdir)
    summary = {"manifest": str(manifest), "samples": len(traj), "T": float(traj.times[-1])}
    if len(traj) > 1:
        summary["e1"] = e1_norm(traj, cfg.p, cfg.q).as_dict()
    _print(summary)
    return EXIT_OK


def cmd_run_pe(args) -> int:
    cfg = harness.SweepConfig.load(args.config)
    return _run(cfg, PE(), "pe", args.out)


def cmd_run_ns(args) -> int:
    cfg = harness.SweepConfig.load(args.config)
    if not args.eps > 0:
        raise harness.ConfigError("--eps must be positive")
    return _run(cfg, NS(args.eps), f"ns_eps_{args.eps:g}", args.out)


def cmd_norms(args) -> int:
    traj = read_trajectory(args.manifest)
    if len(traj) < 2:
        raise harness.ConfigError("trajectory needs at least two samples for a time norm")
    try:
        n = e1_norm(traj, args.p, args.q)
    except ValueError as exc:
        raise harness.ConfigError(str(exc)) from None
    _print({"p": args.p, "q": args.q, "e1_h2q": n.h2q, "e1_lq": n.lq, "e1_dt": n.dt, "total": n.value})
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    results = verify.run_all(quick=args.quick)
    failed = 0
    for c in results:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.detail}")
        failed += not c.ok
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hydrolim", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run an eps sweep and write report.csv/report.json")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: config output_dir)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("run-pe", help="integrate the primitive equations")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_run_pe)

    s = sub.add_parser("run-ns", help="integrate the rescaled Navier-Stokes system")
    s.add_argument("config")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_run_ns)

    s = sub.add_parser("verify", help="manufactured-solution and property checks")
    s.add_argument("--quick", action="store_true", help="smaller grids and fewer samples")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("norms", help="E_1 norm components of a stored trajectory")
    s.add_argument("manifest")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--q", type=float, default=2.0)
    s.set_defaults(func=cmd_norms)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFinite as exc:
        print(f"non-finite solution: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
