"""Convergence of the approximating numeraires rho_n on the log-infinite market.

Prints rho_n for n = 1, 2, 4, ... with the distance to the reference value,
the step from the previous n, and the fitted decay rate of the error.

Usage: python3 scripts/approximation_convergence.py [--cap 10]
"""

from __future__ import annotations

import argparse

import numpy as np

from levy_nfl.io import load_fixture
from levy_nfl.numeraire import solve_numeraire

REFERENCE = 0.915822291494887  # scripts/loginfinite_oracle.py


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cap", type=int, default=10, help="largest j in n = 2**j")
    args = ap.parse_args()
    spec = load_fixture("loginfinite")
    # approx_stop = 0 forces the full trace up to 2**cap
    res = solve_numeraire(spec.triplet, spec.constraints, approx_stop=0.0, approx_cap=args.cap)
    ns, errs = [], []
    prev = None
    print(f"{'n':>6} {'rho_n':>12} {'rho - rho_n':>12} {'step':>10}")
    for n, r, _ in res.approx_trace:
        e = REFERENCE - float(r[0])
        step = "" if prev is None else f"{float(r[0]) - prev:.3e}"
        ns.append(n)
        errs.append(e)
        prev = float(r[0])
        print(f"{n:>6d} {r[0]:>12.8f} {e:>12.3e} {step:>10}")
    slope = np.polyfit(np.log(ns[2:]), np.log(np.abs(errs[2:])), 1)[0]
    print(f"log-log slope of the error for n >= 4: {slope:.3f}")
    print(f"polished rho = {res.rho[0]:.10f}, error {abs(res.rho[0] - REFERENCE):.2e}")


if __name__ == "__main__":
    main()
