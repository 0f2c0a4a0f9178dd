"""Command-line front end.

Every subcommand writes CSV (or a single value) to stdout or ``--out``.
Exit status: 0 on success, 2 for invalid arguments, 3 for numerical or I/O
failures.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .entanglement import EB_TOL, eb_order
from .experiment import (
    Band,
    Curve,
    MonteCarlo,
    SweepSpec,
    critical_damping,
    default_grid,
    line_channel,
    mc_band,
    optimize_filter,
    stage_channel,
    sweep_phi,
    sweep_theta,
)
from .channels import choi
from .matcore import NumericalError
from .optics import ROE_MEAN, load_optics

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(ValueError):
    pass


def _fmt(x: float, precision: int) -> str:
    text = f"{x:.{precision}f}"
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def write_curve_csv(data: Union[Curve, Band], precision: int = 9) -> str:
    """Render a curve or band as CSV text (LF line ends, angles in radians)."""
    if len(data) == 0:
        raise ValueError("nothing to write")
    if isinstance(data, Curve):
        lines = ["angle_rad,concurrence,negativity,is_eb"]
        for a, c, n, eb in data.points():
            lines.append(f"{_fmt(a, precision)},{_fmt(c, precision)},{_fmt(n, precision)},{int(bool(eb))}")
    else:
        lines = ["angle_rad,c_min,c_max"]
        for a, lo, hi in data.points():
            lines.append(f"{_fmt(a, precision)},{_fmt(lo, precision)},{_fmt(hi, precision)}")
    return "\n".join(lines) + "\n"


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return value


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _finite(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"{text} is not finite")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebamend",
        description="Entanglement transmission through repeated rotated damping maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map", choices=("pd", "ad"), required=True, help="rotated phase or amplitude damping")
    common.add_argument("--unit", choices=("rad", "deg"), default="rad", help="unit of angle flags (default rad)")
    common.add_argument("--out", "-o", default=None, help="output file (default stdout)")
    common.add_argument("--precision", type=int, default=9, help="digits after the decimal point")
    common.add_argument("--tol", type=float, default=EB_TOL, help="negativity tolerance of the EB test")

    optics = argparse.ArgumentParser(add_help=False)
    optics.add_argument("--roe", action="store_true", help="realistic optical elements (AD only)")
    optics.add_argument("--optics", default=None, metavar="FILE", help="optics KEY=value file (implies --roe)")

    damping = argparse.ArgumentParser(add_help=False)
    damping.add_argument("--damping", type=_probability, required=True, help="p (pd) or eta (ad)")
    damping.add_argument("--fidelity", type=float, default=1.0, help="Werner input fidelity")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--from", dest="start", type=_finite, default=None, help="first grid angle")
    grid.add_argument("--to", dest="stop", type=_finite, default=None, help="last grid angle")
    grid.add_argument("--steps", type=int, default=None, help="number of grid points")

    parents = [common, damping, optics, grid]
    sub.add_parser("sweep-theta", parents=parents, help="scan the plate angle theta without filter")
    p = sub.add_parser("sweep-phi", parents=parents, help="scan the filter angle phi at fixed theta")
    p.add_argument("--theta", type=_finite, required=True)

    p = sub.add_parser("band", parents=parents, help="Monte-Carlo concurrence envelope")
    p.add_argument("--sweep", choices=("theta", "phi"), default="theta", help="swept angle")
    p.add_argument("--theta", type=_finite, default=None, help="fixed theta for --sweep phi")
    p.add_argument("--samples", type=_positive_int, default=1000, help="draws per grid point")
    p.add_argument("--seed", type=_seed, default=0, help="base RNG seed")
    p.add_argument("--sigma-f", type=float, default=0.016, help="fidelity spread")
    p.add_argument("--sigma-theta", type=float, default=None, help="default 0.5 degrees")

    p = sub.add_parser("eb-order", parents=[common, damping, optics], help="entanglement-breaking order")
    p.add_argument("--theta", type=_finite, required=True)
    p.add_argument("--max-n", type=_positive_int, default=16, help="largest order tried")

    p = sub.add_parser("critical-damping", parents=[common], help="damping threshold of the two-stage line")
    p.add_argument("--theta", type=_finite, required=True)
    p.add_argument("--bisect-tol", type=float, default=1e-6, help="bisection interval width")

    p = sub.add_parser("optimize-filter", parents=[common, damping, optics], help="best filter angle")
    p.add_argument("--theta", type=_finite, required=True)

    p = sub.add_parser("choi", parents=[common, damping, optics], help="Choi state of the two-stage line")
    p.add_argument("--theta", type=_finite, required=True)
    p.add_argument("--phi", type=_finite, default=None, help="filter angle (omit for no filter)")
    p.add_argument("--stages", type=_positive_int, default=2, help="1 for a single map")
    return parser


def _angles(args) -> None:
    # convert every angle flag to radians in place
    if args.unit != "deg":
        return
    for name in ("start", "stop", "theta", "phi", "sigma_theta"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(args, name, math.radians(value))


def _optics(args):
    path = getattr(args, "optics", None)
    if path is not None:
        try:
            return load_optics(path)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from exc
    return ROE_MEAN if getattr(args, "roe", False) else None


def _spec(args, sweep_var: str, optics) -> SweepSpec:
    start, stop, count = default_grid(args.map, sweep_var)
    grid = (
        start if args.start is None else args.start,
        stop if args.stop is None else args.stop,
        count if args.steps is None else args.steps,
    )
    mc = MonteCarlo()
    if args.command == "band":
        sigma_theta = mc.sigma_theta if args.sigma_theta is None else args.sigma_theta
        mc = MonteCarlo(args.samples, args.seed, args.sigma_f, sigma_theta)
    return SweepSpec(
        map_kind=args.map,
        damping=args.damping,
        sweep_var=sweep_var,
        grid=grid,
        fixed_theta=getattr(args, "theta", None),
        input_fidelity=args.fidelity,
        roe=optics is not None,
        optics=optics,
        mc=mc,
    )


def _execute(args) -> str:
    _angles(args)
    if args.precision < 0 or args.precision > 17:
        raise UsageError("--precision must be between 0 and 17")
    if args.tol < 0:
        raise UsageError("--tol must be non-negative")
    optics = _optics(args)
    cmd = args.command
    if cmd == "sweep-theta":
        return write_curve_csv(sweep_theta(_spec(args, "theta", optics), args.tol), args.precision)
    if cmd == "sweep-phi":
        return write_curve_csv(sweep_phi(_spec(args, "phi", optics), args.tol), args.precision)
    if cmd == "band":
        if args.sweep == "phi" and args.theta is None:
            raise UsageError("--sweep phi needs --theta")
        return write_curve_csv(mc_band(_spec(args, args.sweep, optics)), args.precision)
    if cmd == "eb-order":
        k = eb_order(stage_channel(args.map, args.damping, args.theta, optics), args.max_n, args.tol)
        return ("none" if k is None else str(k)) + "\n"
    if cmd == "critical-damping":
        d = critical_damping(args.map, args.theta, args.bisect_tol)
        return ("none" if d is None else _fmt(d, args.precision)) + "\n"
    if cmd == "optimize-filter":
        if not 0.25 <= args.fidelity <= 1.0:
            raise UsageError("--fidelity must lie in [0.25, 1]")
        best = optimize_filter(args.map, args.damping, args.theta, args.fidelity, optics)
        return f"phi_star,c_star\n{_fmt(best.phi_star, args.precision)},{_fmt(best.c_star, args.precision)}\n"
    if cmd == "choi":
        if args.stages == 1:
            if args.phi is not None:
                raise UsageError("--phi needs --stages 2")
            channel = stage_channel(args.map, args.damping, args.theta, optics)
        elif args.stages == 2:
            channel = line_channel(args.map, args.damping, args.theta, args.phi, optics)
        else:
            raise UsageError("--stages must be 1 or 2")
        state = choi(channel)
        rows = ["row,col,re,im"]
        for (i, j), z in np.ndenumerate(state):
            rows.append(f"{i},{j},{_fmt(z.real, args.precision)},{_fmt(z.imag, args.precision)}")
        return "\n".join(rows) + "\n"
    raise UsageError(f"unknown command {cmd}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        text = _execute(args)
    except (NumericalError, OSError) as exc:
        print(f"ebamend: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ebamend: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _write(text, args.out)
    except OSError as exc:
        print(f"ebamend: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())
