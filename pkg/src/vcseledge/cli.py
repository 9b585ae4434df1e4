"""Command-line interface.

Subcommands: `calibrate` (find the operating point), `run` (single-kernel
or gradient edge detection on a PGM image), `fixtures` (emit the test
images), `trace` (plot a stored trajectory CSV).  The VCSELEDGE_OUT
environment variable sets the default output root (default ./vcseledge-out).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .errors import VcselEdgeError
from .pipeline import (
    CalibrationReport,
    RunConfig,
    calibrate,
    run_gradient,
    run_single_kernel,
    write_test_images,
)
from .sfm import DEFAULT_DT, SfmParams


def _out_root() -> Path:
    return Path(os.environ.get("VCSELEDGE_OUT", "vcseledge-out"))


def _params_from(args) -> SfmParams:
    over = {}
    if args.mu is not None:
        over["mu"] = args.mu
    if args.detuning_ghz is not None:
        over["delta_f"] = args.detuning_ghz
    return dataclasses.replace(SfmParams(), **over)


def _add_param_flags(sp) -> None:
    sp.add_argument("--mu", type=float, default=None,
                    help="pump current relative to threshold")
    sp.add_argument("--detuning-ghz", type=float, default=None,
                    help="injection frequency detuning in GHz")
    sp.add_argument("--dt", type=float, default=DEFAULT_DT,
                    help="integrator step in ns")


def _cmd_calibrate(args) -> int:
    params = _params_from(args)
    report = calibrate(params, seeds=tuple(range(args.seeds)), dt=args.dt)
    out = Path(args.out) if args.out else _out_root() / "calibration.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    report.save(out)
    print(f"locking edge      : {report.locking_edge:.6g}")
    print(f"baseline amplitude: {report.baseline:.6g}")
    print(f"mod_depth         : {report.mod_depth:.3g}")
    print(f"threshold         : {report.threshold:.6g}")
    print(f"spike latency     : {report.latency_ns * 1e3:.1f} ps")
    print(f"spike FWHM        : {report.fwhm_ns * 1e3:.1f} ps")
    print(f"validation        : {'pass' if report.passed else 'FAIL'}")
    print(f"report written to {out}")
    return 0 if report.passed else 1


def _kernel_args(cfg_kwargs: dict, args) -> None:
    if args.kernel is not None and args.gradient is not None:
        raise VcselEdgeError("use either --kernel or --gradient, not both")
    if args.kernel is not None:
        try:
            cfg_kwargs["kernel_id"] = int(args.kernel)
        except ValueError:
            cfg_kwargs["kernel_file"] = args.kernel
    elif args.gradient is not None:
        x, y = (int(s) for s in args.gradient.split(","))
        cfg_kwargs["gradient"] = (x, y)


def _cmd_run(args) -> int:
    cfg_kwargs = dict(image=args.image, params=_params_from(args),
                      dt=args.dt, seed=args.seed,
                      pixel_period=args.pixel_ns, pulse_hold=args.hold_ns,
                      outdir=Path(args.out) if args.out else _out_root() / "run")
    _kernel_args(cfg_kwargs, args)
    cfg = RunConfig(**cfg_kwargs)
    report = CalibrationReport.load(args.calibration) if args.calibration else None
    if cfg.gradient is not None:
        traj, raster, rmap = run_gradient(cfg, report)
    else:
        traj, raster, rmap = run_single_kernel(cfg, report)
    print(f"{len(raster)} spikes over {traj.duration:.1f} ns; "
          f"{(rmap.counts > 0).sum()} active pixels of {rmap.counts.size}")
    print(f"outputs in {cfg.outdir}")
    return 0


def _cmd_fixtures(args) -> int:
    outdir = Path(args.out) if args.out else _out_root() / "fixtures"
    for name, path in write_test_images(outdir).items():
        print(f"{name}: {path}")
    return 0


def _cmd_trace(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    csv = Path(args.csv) if args.csv else Path(args.indir) / "trace.csv"
    data = np.loadtxt(csv, delimiter=",", skiprows=1)
    t, total = data[:, 0], data[:, 3]
    if args.window:
        t0, t1 = (float(s) for s in args.window.split(","))
        m = (t >= t0) & (t <= t1)
        t, total = t[m], total[m]
    fig, ax = plt.subplots(figsize=(10, 3.2))
    ax.plot(t, total, lw=0.6)
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("total intensity")
    fig.tight_layout()
    out = Path(args.out) if args.out else csv.with_suffix(".png")
    fig.savefig(out, dpi=160)
    print(f"plot written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vcseledge",
                                 description="Spiking laser-neuron edge detection")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("calibrate", help="find baseline, mod_depth, threshold")
    _add_param_flags(sp)
    sp.add_argument("--seeds", type=int, default=10,
                    help="number of noise seeds to validate across")
    sp.add_argument("--out", default=None, help="report JSON path")
    sp.set_defaults(func=_cmd_calibrate)

    sp = sub.add_parser("run", help="edge-detect a PGM image")
    sp.add_argument("--image", required=True, help="source PGM (P2 or P5)")
    sp.add_argument("--kernel", default=None,
                    help="built-in kernel id 1..8 or a 2x2 matrix file")
    sp.add_argument("--gradient", default=None, metavar="X,Y",
                    help="rotation-paired kernel ids, e.g. 1,3")
    sp.add_argument("--calibration", default=None,
                    help="stored calibration JSON (default: calibrate now)")
    sp.add_argument("--seed", type=int, default=0, help="noise seed")
    sp.add_argument("--pixel-ns", type=float, default=1.5,
                    help="pixel slot duration in ns")
    sp.add_argument("--hold-ns", type=float, default=0.25,
                    help="pulse hold duration in ns")
    sp.add_argument("--out", default=None, help="output directory")
    _add_param_flags(sp)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("fixtures", help="write the programmatic test images")
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=_cmd_fixtures)

    sp = sub.add_parser("trace", help="plot a stored trace.csv")
    sp.add_argument("--in", dest="indir", default=".",
                    help="run output directory containing trace.csv")
    sp.add_argument("--csv", default=None, help="explicit trace CSV path")
    sp.add_argument("--window", default=None, metavar="T0,T1",
                    help="time window in ns")
    sp.add_argument("--out", default=None, help="PNG path")
    sp.set_defaults(func=_cmd_trace)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VcselEdgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
