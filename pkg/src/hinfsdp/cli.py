"""Command-line front end: ``hinfsdp {norm,worst-input,kyp-dual,bode}``.

Exit codes: 0 success, 2 usage or input error, 3 unstable system,
4 solver or numerical failure, 5 output path not writable.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys as _sys
from typing import Optional, Sequence

import numpy as np

from .certificate import analyze
from .exceptions import HinfError, InputError, NumericalError, SolverError, StabilityError
from .lti import FrequencyBand, StateSpace, gain, load_system, trajectory
from .oracle import verify_certificate
from .problems import build_dual, build_primal
from .solver import Settings, raise_for_status, solve, solve_dual_lmi

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNSTABLE = 3
EXIT_SOLVER = 4
EXIT_PATH = 5


class _PathError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:#.9g}"


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _band_from_args(args) -> FrequencyBand:
    if args.low is not None:
        return FrequencyBand.low(args.low)
    if args.high is not None:
        return FrequencyBand.high(args.high)
    if args.band is not None:
        return FrequencyBand.middle(*args.band)
    return FrequencyBand.full()


def _settings_from_args(args) -> Settings:
    return Settings(tol_feas=args.tol_feas, tol_gap=args.tol_gap, max_iters=args.max_iters)


@contextlib.contextmanager
def _open_out(path: Optional[str]):
    if path is None or path == "-":
        yield _sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise _PathError(f"cannot write {path}: {exc.strerror or exc}") from exc
    with fh:
        yield fh


def _cmd_norm(args) -> int:
    sys = load_system(args.system)
    band = _band_from_args(args)
    res = analyze(sys, band, _settings_from_args(args))
    cert = res.certificate
    if args.json:
        out = {
            "band": str(band),
            "norm": res.norm,
            "objective": res.solution.objective,
            "dual_objective": res.solution.dual_objective,
            "status": res.solution.status.value,
            "iterations": res.solution.iterations,
            "residuals": vars(res.solution.residuals),
            "certificate": cert.to_dict(),
            "dynamics_residual": cert.dynamics_residual(sys),
            "gain_at_theta": float(gain(sys, cert.theta_opt)),
        }
        print(json.dumps(out, indent=2))
        return EXIT_OK
    r = res.solution.residuals
    print(f"band        {band}")
    print(f"norm        {_fmt(res.norm)}")
    print(f"theta       {_fmt(cert.theta_opt)}")
    print(f"mu_opt      {_fmt(cert.mu_opt)}")
    print(f"status      {res.solution.status.value} ({res.solution.iterations} iterations)")
    print(f"residuals   eq {r.primal_eq:.2e}  psd {r.psd_violation:.2e}  gap {r.duality_gap:.2e}")
    print(f"certificate dynamics residual {cert.dynamics_residual(sys):.2e}")
    return EXIT_OK


def _cmd_worst_input(args) -> int:
    sys = load_system(args.system)
    band = _band_from_args(args)
    with _open_out(args.out) as fh:
        res = analyze(sys, band, _settings_from_args(args))
        cert = res.certificate
        w, z = trajectory(sys, cert.sinusoid, args.steps)
        power = np.cumsum(np.sum(np.abs(z) ** 2, axis=1)) / np.arange(1, args.steps + 1)
        writer = csv.writer(fh, lineterminator="\n")
        header = ["k"]
        header += [f"{p}_w{i}" for i in range(sys.m) for p in ("re", "im")]
        header += [f"{p}_z{i}" for i in range(sys.l) for p in ("re", "im")]
        header.append("running_power")
        writer.writerow(header)
        for k in range(args.steps):
            row = [str(k)]
            for v in (*w[k], *z[k]):
                row += [repr(float(v.real)), repr(float(v.imag))]
            row.append(repr(float(power[k])))
            writer.writerow(row)
    rel = abs(power[-1] - cert.mu_opt) / max(1.0, cert.mu_opt)
    target = _sys.stderr if fh is _sys.stdout else _sys.stdout
    print(f"theta {_fmt(cert.theta_opt)}  mu_opt {_fmt(cert.mu_opt)}  "
          f"final running power {_fmt(float(power[-1]))}  relative error {rel:.2e}", file=target)
    return EXIT_OK


def _cmd_kyp_dual(args) -> int:
    sys = load_system(args.system)
    band = _band_from_args(args)
    settings = _settings_from_args(args)
    sys.check_stable()
    dual = raise_for_status(solve_dual_lmi(build_dual(sys, band), settings), "dual LMI")
    primal = raise_for_status(solve(build_primal(sys, band), settings), "lifted SDP")
    gap = abs(dual.lam - primal.objective) / (1.0 + abs(primal.objective))
    if args.json:
        print(json.dumps({
            "band": str(band),
            "lambda": dual.lam,
            "p_norm": dual.p_norm,
            "not_attained": dual.not_attained,
            "status": dual.status.value,
            "primal_objective": primal.objective,
            "relative_gap": gap,
        }, indent=2))
        return EXIT_OK
    print(f"band        {band}")
    print(f"lambda      {_fmt(dual.lam)}")
    print(f"||P||       {dual.p_norm:.3e}")
    print(f"primal      {_fmt(primal.objective)}")
    print(f"gap         {gap:.2e}")
    print(f"status      {dual.status.value}")
    if dual.not_attained:
        print("NOT-ATTAINED: dual infimum approached only as ||P|| grows without bound")
    return EXIT_OK


def _cmd_bode(args) -> int:
    sys = load_system(args.system)
    sys.check_stable()
    K = args.grid
    theta = np.array([-math.pi]) if K == 1 else np.linspace(-math.pi, math.pi, K)
    g = gain(sys, theta)
    with _open_out(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "gain"])
        for t, v in zip(theta, g):
            writer.writerow([repr(float(t)), repr(float(v))])
    return EXIT_OK


def _add_band_flags(p):
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--low", type=float, metavar="THETA0", help="low band |theta| <= THETA0")
    grp.add_argument("--high", type=float, metavar="THETA0", help="high band |theta| >= THETA0")
    grp.add_argument("--band", type=float, nargs=2, metavar=("THETA1", "THETA2"),
                     help="middle band THETA1 <= theta <= THETA2")


def _add_settings_flags(p):
    p.add_argument("--tol-feas", type=float, default=Settings.tol_feas)
    p.add_argument("--tol-gap", type=float, default=Settings.tol_gap)
    p.add_argument("--max-iters", type=_positive_int, default=Settings.max_iters)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hinfsdp",
        description="H-infinity norms of discrete-time systems via a lifted SDP. Angles in radians.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="norm, worst-case frequency and solver report")
    p.add_argument("system", help="system JSON file")
    _add_band_flags(p)
    _add_settings_flags(p)
    p.add_argument("--json", action="store_true", help="emit the full result as JSON")
    p.set_defaults(func=_cmd_norm)

    p = sub.add_parser("worst-input", help="simulate the worst-case sinusoid to CSV")
    p.add_argument("system")
    _add_band_flags(p)
    _add_settings_flags(p)
    p.add_argument("--steps", type=_positive_int, default=1000)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_worst_input)

    p = sub.add_parser("kyp-dual", help="solve the dual LMI and diagnose attainment")
    p.add_argument("system")
    _add_band_flags(p)
    _add_settings_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_kyp_dual)

    p = sub.add_parser("bode", help="gain on a uniform grid over [-pi, pi] to CSV")
    p.add_argument("system")
    p.add_argument("--grid", type=_positive_int, default=512)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_bode)
    return parser


def _thread_limit():
    value = os.environ.get("HINF_THREADS")
    if not value:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    try:
        n = int(value)
    except ValueError:
        raise InputError(f"HINF_THREADS must be an integer, got {value!r}")
    return threadpool_limits(limits=max(1, n))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except _PathError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_PATH
    except StabilityError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_UNSTABLE
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except (SolverError, NumericalError, HinfError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    _sys.exit(main())
