"""Extraction and elapsed times of data-driven vs model-based reduction across n.

Prints a table with one row per model order: data-driven extraction
(estimation + reduction, all data processed), oracle extraction (full
Sylvester solves) and FOM / ROM simulation times on the same input.

Usage: python3 scripts/run_timing.py --sizes 200 500 1000 2000 --repeats 5
"""

import argparse
import json
import time

import numpy as np

from mmreduce.bench import collect, estimate, random_stable_system, reduce
from mmreduce.design import design_from_dict
from mmreduce.lti import simulate_input
from mmreduce.oracle import solve_both

DESIGN = {
    "right": {"freqs_rad_s": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0], "direction": [1.0, 4.0]},
    "left": {"freqs_rad_s": [1.5, 3.0, 6.0, 12.0, 24.0, 48.0], "direction": [4.0, 1.0]},
}


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 2000])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--duration", type=float, default=30.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--out", default=None, help="optional JSON file for the table")
    args = ap.parse_args()

    design = design_from_dict(DESIGN)
    rows = []
    print(f"{'n':>6} {'dd extract [s]':>15} {'oracle extract [s]':>19} "
          f"{'FOM elapsed [s]':>16} {'ROM elapsed [s]':>16}")
    for n in args.sizes:
        sys = random_stable_system(n, 2, 2, seed=1, verify=False)
        data = collect(sys, design, args.dt, args.duration)
        rom, t_dd = best_of(lambda: reduce(estimate(data, design, eta=0.0, stride=20), design),
                            args.repeats)
        _, t_mb = best_of(lambda: solve_both(sys, design.generator, design.filter,
                                             method="schur"), 1)
        u = data.omega.samples @ design.generator.L.T
        _, t_fom = best_of(lambda: simulate_input(sys, u, data.times), 1)
        _, t_rom = best_of(lambda: simulate_input(rom.as_statespace(), u, data.times),
                           args.repeats)
        rows.append({"n": n, "extraction_dd": t_dd, "extraction_mb": t_mb,
                     "elapsed_fom": t_fom, "elapsed_rom": t_rom})
        print(f"{n:>6} {t_dd:>15.4f} {t_mb:>19.3f} {t_fom:>16.3f} {t_rom:>16.4f}")
    if len(rows) > 1:
        a, b = rows[0], rows[-1]
        print(f"ratio n={b['n']}/n={a['n']}: data-driven "
              f"{b['extraction_dd'] / a['extraction_dd']:.2f}, oracle "
              f"{b['extraction_mb'] / a['extraction_mb']:.1f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=1, default=float)


if __name__ == "__main__":
    main()
