"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as mio
from .bench import (BenchConfig, ExperimentData, StageError, SystemSpec, add_noise,
                    collect, estimate, make_system, reduce, run_reduction_experiment)
from .design import DesignError, load_design
from .estimation import EstimationError, EstimationResult
from .linalg import NumericalError
from .lti import SingularPointError, UnstableSystemError, spectrum
from .oracle import bode_data, verify_rom

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("mmreduce")


class CommandError(Exception):
    def __init__(self, stage, message, code):
        super().__init__(message)
        self.stage = stage
        self.code = code


def _design(args):
    return load_design(args.design, unit=args.freq_unit)


def cmd_gen_system(args):
    spec = SystemSpec(kind=args.kind, n=args.n, m=args.m, p=args.p, seed=args.seed,
                      real_part_range=(args.real_min, args.real_max),
                      freq_range=(args.freq_min, args.freq_max),
                      resistance=args.resistance, inductance=args.inductance,
                      capacitance=args.capacitance)
    if args.kind == "ladder" and (args.m != 2 or args.p != 2):
        raise CommandError("gen-system", "ladder networks have m = p = 2", EXIT_USAGE)
    sys_ = make_system(spec)
    sys_.check_stable()
    mio.save_statespace(args.out, sys_, meta={"kind": args.kind, "seed": args.seed})
    print(f"wrote {args.out}: n={sys_.n} m={sys_.m} p={sys_.p}")
    return EXIT_OK


def cmd_design_check(args):
    design = _design(args)
    gap = design.check_disjoint()
    g, f = design.generator, design.filter
    print(f"nu = {design.nu}")
    print("right points (sigma(S)):", " ".join(f"{z:.6g}" for z in spectrum(g.S)))
    print("left points  (sigma(Q)):", " ".join(f"{z:.6g}" for z in spectrum(f.Q)))
    print(f"(S, L) observable, (S, omega0) excitable, (Q, R) reachable; "
          f"min |s_i - q_j| = {gap:.6g}")
    return EXIT_OK


def cmd_collect(args):
    sys_ = mio.load_statespace(args.sys)
    design = _design(args)
    data = collect(sys_, design, args.dt, args.duration)
    if args.snr_db is not None:
        seeds = np.random.SeedSequence(args.noise_seed).generate_state(len(data.varpi) + 1)
        if args.noise_on in ("varpi", "both"):
            data.varpi = [add_noise(v, args.snr_db, int(s))
                          for v, s in zip(data.varpi, seeds[1:])]
        if args.noise_on in ("y", "both"):
            data.y = add_noise(data.y, args.snr_db, int(seeds[0]))
    files = data.save(args.out)
    print(f"wrote {len(files)} trajectories ({data.times.size} samples) to {args.out}")
    return EXIT_OK


def cmd_estimate(args):
    design = _design(args)
    data = ExperimentData.load(args.data)
    if len(data.varpi) == 0:
        raise CommandError("estimate", f"no varpi_in*.csv files in {args.data}",
                           EXIT_USAGE)
    est = estimate(data, design, nu_tilde=args.nu_tilde, q_tilde=args.q_tilde,
                   eta=args.eta, k0=args.k0, stride=args.stride)
    est.save(args.out)
    status = "converged" if est.converged else "NOT converged (best estimates written)"
    print(f"wrote {args.out}: {status}")
    return EXIT_OK if est.converged else EXIT_VALIDATION


def cmd_reduce(args):
    design = _design(args)
    est = EstimationResult.load(args.est)
    rom = reduce(est, design)
    mio.save_rom(args.out, rom)
    if args.update_est:
        est.save(args.est)
    stable = rom.diagnostics["stable"]
    print(f"wrote {args.out}: order {rom.order}, cond(Ups Pi) = "
          f"{rom.diagnostics['cond_ups_pi']:.3e}, stable = {stable}")
    return EXIT_OK


def cmd_verify(args):
    rom = mio.load_rom(args.rom)
    sys_ = mio.load_statespace(args.sys)
    design = _design(args)
    rep = verify_rom(rom, sys_, design.generator, design.filter, args.tol)
    if args.out:
        Path(args.out).write_text(json.dumps(rep.to_dict(), indent=1))
    print(f"kind={rep.kind} tol={rep.tol:g}")
    print(f"right: worst {rep.worst_right:.3e} ({'claimed' if rep.claims_right else 'not claimed'})")
    print(f"left:  worst {rep.worst_left:.3e} ({'claimed' if rep.claims_left else 'not claimed'})")
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def cmd_bode(args):
    model = mio.load_model(args.model)
    if args.log:
        grid = np.logspace(np.log10(args.fmin), np.log10(args.fmax), args.points)
    else:
        grid = np.linspace(args.fmin, args.fmax, args.points)
    bode_data(model, grid).to_csv(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_spectrum(args):
    model = mio.load_model(args.model)
    M = model.A if hasattr(model, "A") else model.F
    ev = spectrum(M)
    np.savetxt(args.out, np.column_stack([ev.real, ev.imag]), delimiter=",",
               fmt="%.17g", header="real,imag", comments="")
    print(f"wrote {args.out}: {ev.size} eigenvalues, max real part {ev.real.max():.6g}")
    return EXIT_OK


def cmd_bench(args):
    cfg = BenchConfig.load(args.config)
    res = run_reduction_experiment(cfg, args.out, config_dir=Path(args.config).parent)
    for key in ("e_c_pi", "e_ups_b", "e_ups_pi"):
        if key in res:
            print(f"{key} = {res[key]:.3e}")
    ok = True
    if "verify_dd" in res and (cfg.noise.snr_db is None):
        ok = res["verify_dd"]["passed"] and res["verify_mb"]["passed"]
        print(f"verification: {'PASS' if ok else 'FAIL'}")
    print(f"results in {args.out}")
    return EXIT_OK if ok else EXIT_VALIDATION


def build_parser():
    p = argparse.ArgumentParser(
        prog="mmreduce",
        description="Data-driven two-sided moment matching for MIMO LTI systems.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    def design_arg(sp):
        sp.add_argument("--design", required=True, help="JSON design file")
        sp.add_argument("--freq-unit", choices=("rad_s", "hz"), default="rad_s",
                        help="unit of bare 'freqs' lists in the design file "
                             "(explicit freqs_rad_s / freqs_hz keys are unaffected)")

    sp = sub.add_parser("gen-system", help="generate a synthetic full-order model")
    sp.add_argument("--kind", choices=("random", "ladder"), default="random")
    sp.add_argument("--n", type=int, required=True, help="state dimension")
    sp.add_argument("--m", type=int, default=2, help="inputs")
    sp.add_argument("--p", type=int, default=2, help="outputs")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--real-min", type=float, default=-3.0, help="random: most negative real part")
    sp.add_argument("--real-max", type=float, default=-0.5, help="random: least negative real part")
    sp.add_argument("--freq-min", type=float, default=0.5, help="random: lowest pole frequency (rad/s)")
    sp.add_argument("--freq-max", type=float, default=30.0, help="random: highest pole frequency (rad/s)")
    sp.add_argument("--resistance", type=float, default=1.0, help="ladder: ohms per section")
    sp.add_argument("--inductance", type=float, default=1e-3, help="ladder: henry per section")
    sp.add_argument("--capacitance", type=float, default=1e-3, help="ladder: farad per section")
    sp.add_argument("--out", required=True, help="output matrix container (.mtx)")
    sp.set_defaults(func=cmd_gen_system)

    sp = sub.add_parser("design-check", help="validate a design file")
    design_arg(sp)
    sp.set_defaults(func=cmd_design_check)

    sp = sub.add_parser("collect", help="simulate the experiments and write CSV data")
    sp.add_argument("--sys", required=True, help="full-order model (.mtx)")
    design_arg(sp)
    sp.add_argument("--dt", type=float, required=True, help="sample step (s)")
    sp.add_argument("--duration", type=float, required=True, help="record length (s)")
    sp.add_argument("--snr-db", type=float, default=None, help="add measurement noise")
    sp.add_argument("--noise-seed", type=int, default=0)
    sp.add_argument("--noise-on", choices=("varpi", "y", "both"), default="varpi")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_collect)

    sp = sub.add_parser("estimate", help="estimate C*Pi and Ups*B from data")
    sp.add_argument("--data", required=True, help="directory written by 'collect'")
    design_arg(sp)
    sp.add_argument("--nu-tilde", type=int, default=None, help="snapshot window for C*Pi (default nu)")
    sp.add_argument("--q-tilde", type=int, default=1, help="snapshot window for Ups*B")
    sp.add_argument("--eta", type=float, default=1e-9, help="rate threshold per unit time")
    sp.add_argument("--k0", type=int, default=0, help="warm-up sample index")
    sp.add_argument("--stride", type=int, default=1, help="grid samples between C*Pi snapshots")
    sp.add_argument("--out", required=True, help="output JSON")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("reduce", help="solve for Ups*Pi and build the two-sided ROM")
    sp.add_argument("--est", required=True, help="estimate JSON")
    design_arg(sp)
    sp.add_argument("--update-est", action="store_true",
                    help="write the computed Ups*Pi back into the estimate file")
    sp.add_argument("--out", required=True, help="output ROM (.mtx)")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("verify", help="check interpolation conditions against the FOM")
    sp.add_argument("--rom", required=True)
    sp.add_argument("--sys", required=True)
    design_arg(sp)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--out", default=None, help="optional JSON report")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bode", help="frequency response data as CSV")
    sp.add_argument("--model", required=True, help="system or ROM (.mtx)")
    sp.add_argument("--fmin", type=float, default=0.1, help="rad/s")
    sp.add_argument("--fmax", type=float, default=1e4, help="rad/s")
    sp.add_argument("--points", type=int, default=200)
    sp.add_argument("--linear", dest="log", action="store_false",
                    help="linearly spaced grid (default logarithmic)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bode)

    sp = sub.add_parser("spectrum", help="eigenvalues as CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("bench", help="run a configured reduction experiment")
    sp.add_argument("--config", required=True, help="BenchConfig JSON")
    sp.add_argument("--out", required=True, help="results directory")
    sp.set_defaults(func=cmd_bench)
    return p


def _classify(exc):
    if isinstance(exc, StageError):
        return _classify(exc.__cause__)
    if isinstance(exc, (NumericalError, EstimationError, SingularPointError,
                        np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (FileNotFoundError, IsADirectoryError, PermissionError)):
        return EXIT_USAGE
    if isinstance(exc, (DesignError, UnstableSystemError, mio.FormatError,
                        ValueError, KeyError, json.JSONDecodeError)):
        return EXIT_VALIDATION
    return None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:
        code = _classify(exc)
        if code is None:
            raise
        stage = exc.stage if isinstance(exc, StageError) else args.command
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
