"""Brute-force reference value for the numeraire of the log-infinite market.

Market: b = c = 0, nu(dx) = 1{-1 < x <= 1} dx + x^-1 log(1+x)^-2 dx on [1, inf).
The numeraire rho in [0, 1] is the root of the first-order quantity

    G(r) = int (x / (1 + r x) - x 1{|x| <= 1}) nu(dx),

which is decreasing in r.  We scan G on a coarse grid, rescan the bracketing
cell at 1e-5 resolution, then refine the root with mpmath at 30 digits.  The
tail is integrated after x = exp(t): direct quadrature of the 1/(x log^2 x)
decay on [1, inf) loses accuracy.

Usage: python3 scripts/loginfinite_oracle.py [--approx]
"""

from __future__ import annotations

import argparse

import mpmath as mp
import numpy as np
from scipy import integrate

mp.mp.dps = 30


def first_order_mp(r, n=None):
    r = mp.mpf(r)
    small = mp.quad(lambda x: -r * x**2 / (1 + r * x), [-1, 0, 1])
    damp = (lambda t: 1) if n is None else (lambda t: mp.exp(-t / n))

    def tail(t):
        e = mp.exp(t)
        return damp(t) * e / ((1 + r * e) * mp.log1p(e) ** 2)

    return small + mp.quad(tail, [0, 1, 10, 100, 1000, 1e5, mp.inf])


def first_order_float(r: float) -> float:
    small = integrate.quad(lambda x: -r * x * x / (1 + r * x), -1, 1, points=[0], epsabs=1e-12)[0]
    tail = integrate.quad(
        lambda t: np.exp(t) / ((1 + r * np.exp(min(t, 700.0))) * np.logaddexp(0.0, t) ** 2)
        if t < 700
        else 1.0 / (r * t * t),
        0,
        np.inf,
        epsabs=1e-12,
        limit=500,
    )[0]
    return small + tail


def scan_root() -> tuple[float, float]:
    coarse = np.linspace(0.01, 0.99, 99)
    vals = [first_order_float(r) for r in coarse]
    i = next(j for j in range(len(vals) - 1) if vals[j] > 0 >= vals[j + 1])
    fine = np.arange(coarse[i], coarse[i + 1] + 1e-5, 1e-5)
    fv = np.array([first_order_float(r) for r in fine])
    j = int(np.nonzero((fv[:-1] > 0) & (fv[1:] <= 0))[0][0])
    return float(fine[j]), float(fine[j + 1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--approx", action="store_true", help="also solve the damped markets n = 1, 2, 4, ...")
    args = ap.parse_args()
    lo, hi = scan_root()
    print(f"scan bracket at 1e-5 resolution: [{lo:.5f}, {hi:.5f}]")
    root = mp.findroot(first_order_mp, (lo, hi), solver="illinois")
    print(f"rho = {mp.nstr(root, 20)}")
    if args.approx:
        for n in (1, 2, 4, 8, 16, 64, 256, 1024):
            rn = mp.findroot(lambda r: first_order_mp(r, n), (0.05, 0.999), solver="illinois")
            print(f"n = {n:5d}  rho_n = {mp.nstr(rn, 15)}")


if __name__ == "__main__":
    main()
