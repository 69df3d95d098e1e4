"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import experiments as ex
from . import hamiltonian as ham
from . import rng as rng_mod
from .fitting import FitError
from .protocol import ProtocolConfig, run_protocol
from .statevector import StateError, load_amplitudes
from .verify import SUITES, run_suites

log = logging.getLogger("qphase")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _shared_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--qubits", type=int, default=3, help="qubits per register")
    p.add_argument("--delta", type=float, default=None, help="phase step per cycle (radians)")
    p.add_argument("--cycles", type=int, default=None, help="number of protocol cycles / Trotter steps")
    p.add_argument("--alpha", type=float, default=None, help="total phase coefficient (delta = alpha / cycles)")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--repetitions", type=int, default=100)
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default: ${rng_mod.SEED_ENV_VAR} or {rng_mod.DEFAULT_SEED})")
    p.add_argument("--mode", default=None)
    p.add_argument("--completion", choices=("householder", "gram-schmidt"), default="householder")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_flags()
    parser = argparse.ArgumentParser(prog="qphase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("demo-quadratic", parents=[shared], help="quadratic phase via post-selected cycles")

    sw = sub.add_parser("sweep-success", parents=[shared], help="single-cycle success probability sweep")
    sw.add_argument("--delta-min", type=float, default=-8.0)
    sw.add_argument("--delta-max", type=float, default=8.0)
    sw.add_argument("--points", type=int, default=65)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--no-scatter", action="store_true", help="skip per-repetition fits")

    ft = sub.add_parser("fit", parents=[shared], help="fit a sweep CSV")
    ft.add_argument("--input", required=True)

    tr = sub.add_parser("trotter", parents=[shared], help="Trotterized evolution vs the exact propagator")
    tr.add_argument("--spec", default=None, help="HamiltonianSpec JSON (default: harmonic oscillator)")
    tr.add_argument("--time", type=float, default=1.0)
    tr.add_argument("--max-delta", type=float, default=ham.DEFAULT_MAX_DELTA)

    rn = sub.add_parser("run", parents=[shared], help="run the protocol on amplitude files")
    rn.add_argument("--psi", required=True)
    rn.add_argument("--phi", required=True)

    vf = sub.add_parser("verify", parents=[shared], help="run property suites")
    vf.add_argument("suite", nargs="?", default="all", choices=SUITES + ("all",))
    return parser


def _seed(args) -> int:
    return args.seed if args.seed is not None else rng_mod.default_seed()


def _completion(args) -> str:
    return args.completion.replace("-", "_")


def _emit(report, args) -> None:
    if args.output:
        ex.export(report, args.format, args.output)
        log.info("wrote %s", args.output)
    else:
        sys.stdout.write(ex.report_text(report, args.format))


def cmd_demo(args) -> int:
    delta = 0.05 if args.delta is None else args.delta
    cycles = 100 if args.cycles is None else args.cycles
    if args.alpha is not None:
        delta = args.alpha / cycles
    if cycles < 1:
        raise UsageError("--cycles must be >= 1")
    report = ex.demo_quadratic(delta, cycles, args.qubits, _completion(args))
    _emit(report, args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    mode = args.mode or "sampled"
    cfg = ex.SweepConfig(
        delta_min=args.delta_min, delta_max=args.delta_max, delta_points=args.points,
        n_shot=args.shots, n_repetition=args.repetitions, seed=_seed(args), mode=mode,
        n=args.qubits, completion=_completion(args),
    )
    report = ex.sweep_success(cfg, workers=args.workers, scatter=not args.no_scatter)
    if report.flagged:
        log.warning("%d sweep rows outside the 5-sigma band: %s", len(report.flagged), report.flagged)
    _emit(report, args)
    return EXIT_OK


def cmd_fit(args) -> int:
    fit = ex.fit_from_csv(args.input)
    _emit({"kind": "fit", "input": args.input, "fit": fit.to_dict()}, args)
    return EXIT_OK


def cmd_trotter(args) -> int:
    steps = 8 if args.cycles is None else args.cycles
    if args.spec:
        spec = ham.HamiltonianSpec.load(args.spec)
        if args.cycles is not None:
            spec = spec.with_steps(steps)
    else:
        spec = ham.harmonic_oscillator(args.qubits, total_time=args.time, steps=steps)
    mode = args.mode or "exact_phase"
    if mode not in ham.PHASE_MODES:
        raise UsageError(f"--mode for trotter must be one of {ham.PHASE_MODES}")
    psi = ham.gaussian_state(spec.n)
    final = ham.evolve(psi, spec, mode, args.max_delta)
    exact = ham.exact_evolution(psi, spec)
    report = {
        "kind": "trotter",
        "mode": mode,
        "spec": spec.to_dict(),
        "error": ham.pure_state_distance(final, exact),
        "rows": [{"x": k, "re": float(z.real), "im": float(z.imag),
                  "exact_re": float(e.real), "exact_im": float(e.imag)}
                 for k, (z, e) in enumerate(zip(final.amplitudes, exact.amplitudes))],
    }
    _emit(report, args)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.delta is None and args.alpha is None:
        raise UsageError("give --delta or --alpha")
    cycles = 1 if args.cycles is None else args.cycles
    mode = args.mode or "postselected"
    psi = load_amplitudes(args.psi)
    phi = load_amplitudes(args.phi)
    cfg = ProtocolConfig(cycles=cycles, delta=args.delta, alpha=args.alpha, mode=mode,
                         seed=_seed(args), completion=_completion(args))
    result = run_protocol(psi, phi, cfg)
    if args.format == "csv":
        amps = result.final_state.amplitudes
        report = {"rows": [{"x": k, "re": float(z.real), "im": float(z.imag)} for k, z in enumerate(amps)]}
    else:
        report = result.to_dict()
    _emit(report, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_suites(args.suite)
    for name, checks in report["suites"].items():
        for c in checks:
            log.info("%-14s %-4s %s %s", name, "PASS" if c["passed"] else "FAIL", c["name"], c["detail"])
    if args.format == "csv":
        rows = [{"suite": s, **c} for s, cs in report["suites"].items() for c in cs]
        _emit({"rows": rows}, args)
    else:
        _emit(report, args)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


COMMANDS = {
    "demo-quadratic": cmd_demo,
    "sweep-success": cmd_sweep,
    "fit": cmd_fit,
    "trotter": cmd_trotter,
    "run": cmd_run,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"qphase: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, StateError, FitError, ValueError, json.JSONDecodeError) as exc:
        print(f"qphase: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
