#!/usr/bin/env python3
"""Run the tableau optimizer for the shipped (s, p) set and write the
results into the builtin registry with provenance.

Usage: build_optimized_methods.py [s,p [s,p ...]]   (default: shipped set)
"""

import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sspif import certify, optimize, tableau

SHIPPED = [(2, 2), (3, 3), (3, 4), (4, 3), (4, 4), (5, 4)]


def main(argv):
    cases = SHIPPED
    if argv:
        cases = [tuple(int(t) for t in arg.split(",")) for arg in argv]
    out_dir = tableau.builtin_registry_dir()
    os.makedirs(out_dir, exist_ok=True)
    for s, p in cases:
        t0 = time.perf_counter()
        problem = optimize.OptimizationProblem(s=s, p=p, seed=0)
        res = optimize.optimize_tsrk(problem)
        dt = time.perf_counter() - t0
        m = res.method
        path = os.path.join(out_dir, f"{m.name}.txt")
        tableau.save_method(m, path)
        mono = certify.abscissa_monotone(tableau.abscissas(m))
        print(
            f"({s},{p}): C={res.certified_C:.6f} maxres="
            f"{res.order_report.max_abs():.2e} monotone={mono} "
            f"starts={res.starts_used} t={dt:.0f}s -> {path}",
            flush=True,
        )


if __name__ == "__main__":
    main(sys.argv[1:])
