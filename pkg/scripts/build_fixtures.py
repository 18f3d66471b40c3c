"""Write the bundled market specs into src/levy_nfl/fixtures/.

Usage: python3 scripts/build_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "levy_nfl" / "fixtures"
FULL = {"type": "full"}
ORTHANT = {"type": "orthant"}


def interval(lo, hi, lo_closed=True, hi_closed=True):
    return {"type": "interval", "lo": lo, "hi": hi, "loClosed": lo_closed, "hiClosed": hi_closed}


def poly(coeffs, support):
    return {"family": "polynomialOnInterval", "params": {"coeffs": coeffs}, "support": support}


def market(b, c, atoms=(), densities=()):
    b = list(np.atleast_1d(b).astype(float))
    return {
        "dimension": len(b),
        "b": b,
        "c": np.atleast_2d(c).astype(float).tolist(),
        "nu": {"atoms": [{"x": list(map(float, x)), "rate": r} for x, r in atoms], "densities": list(densities)},
    }


def spec(comment, mkt, constraints=FULL, horizon=1.0, **options):
    out = {
        "schemaVersion": "1.0",
        "comment": comment,
        "market": mkt,
        "constraints": constraints,
        "horizon": "infinite" if horizon is None else {"finite": horizon},
    }
    if options:
        out["options"] = options
    return out


def parabola_market():
    q = -np.log(1.0 - (np.arange(1, 6) - 0.5) / 5.0)
    atoms = [((e, f - 1.0), 1.0 / 25.0) for e in q for f in q]
    small = sum(np.asarray(x) * r for x, r in atoms if np.linalg.norm(x) <= 1.0)
    return market(small, np.zeros((2, 2)), atoms)


UNIT = poly([1.0, 1.0], interval(-1.0, 1.0, False, True))
LOGINF = [
    poly([1.0], interval(-1.0, 1.0, False, True)),
    {"family": "powerLogTail", "params": {"q": 2.0, "scale": 1.0}, "support": interval(1.0, "inf")},
]
CUBIC_TAIL = {"family": "powerLawTail", "params": {"p": 3.0, "scale": 1.0}, "support": interval(1.0, "inf")}

FIXTURES = {
    "bsm": spec("One-asset Black-Scholes market, b = 0.08, c = 0.04; numeraire 2.", market(0.08, 0.04)),
    "bsm1d": spec("One-asset Black-Scholes market for the completeness check.", market(0.05, 0.04)),
    "bsm2d": spec(
        "Two correlated Black-Scholes assets; numeraire solves c rho = b.",
        market([0.1, 0.05], [[0.04, 0.01], [0.01, 0.09]]),
    ),
    "paper_1d": spec(
        "b = 1, c = 0, jump density 1 + x on (-1, 1]; numeraire 1 with growth slope 1/3 there.",
        market(1.0, 0.0, densities=[UNIT]),
    ),
    "paper_1d_infinite": spec(
        "The (1 + x) jump market on an infinite horizon: positive drift, so P is no supermartingale measure.",
        market(1.0, 0.0, densities=[UNIT]),
        horizon=None,
    ),
    "loginfinite": spec(
        "Uniform jumps on (-1, 1] plus x^-1 log(1 + x)^-2 on [1, inf): the log-utility of every long position is infinite.",
        market(0.0, 0.0, densities=LOGINF),
    ),
    "monotone_poisson": spec(
        "Unit upward jumps at rate 1 with compensated drift 0: the long position is an increasing profit.",
        market(1.0, 0.0, [((1.0,), 1.0)]),
    ),
    "decreasing_poisson": spec(
        "Jumps of -0.5 at rate 1 with compensated drift 0: the short position is an increasing profit.",
        market(-0.5, 0.0, [((-0.5,), 1.0)]),
    ),
    "two_sided": spec(
        "Jumps of +0.5 and -0.5 at rate 1 each, no drift: no immediate arbitrage.",
        market(0.0, 0.0, [((0.5,), 1.0), ((-0.5,), 1.0)]),
    ),
    "diffusive": spec(
        "Brownian part c = 0.04 with upward jumps: the Gaussian part rules out immediate arbitrage.",
        market(0.1, 0.04, [((0.5,), 1.0)]),
    ),
    "parabola": spec(
        "Two assets, 25 atoms (e, f - 1) on the Exp(1) midpoint-quantile grid, rate 1/25 each, "
        "pure compound Poisson; portfolios constrained to p_0^2 <= p_1.",
        parabola_market(),
        {"type": "parabola", "params": {"dimension": 2, "i": 0, "j": 1}},
    ),
    "remark_esmm_not_emm": spec(
        "c = 0, jump density x^-3 on [1, inf), b = -1.5: mean rate -0.5, so P is a strict supermartingale measure.",
        market(-1.5, 0.0, densities=[CUBIC_TAIL]),
    ),
    "ih_positive_drift_orthant": spec(
        "Black-Scholes with b = 0.1 > 0, long-only, infinite horizon: drift condition violated.",
        market(0.1, 0.04),
        ORTHANT,
        horizon=None,
    ),
    "ih_negative_drift_orthant": spec(
        "Black-Scholes with b = -0.1, long-only, infinite horizon: drift condition holds.",
        market(-0.1, 0.04),
        ORTHANT,
        horizon=None,
    ),
    "ih_martingale": spec(
        "Symmetric jumps of +-0.5 and no drift, infinite horizon: X is a martingale.",
        market(0.0, 0.0, [((0.5,), 1.0), ((-0.5,), 1.0)]),
        horizon=None,
    ),
    "ih_remark": spec(
        "The x^-3 tail market with mean rate -0.5 on an infinite horizon: drift condition holds.",
        market(-1.5, 0.0, densities=[CUBIC_TAIL]),
        horizon=None,
    ),
    "ih_heavy_tail": spec(
        "Jump density x^-1.5 on [1, inf) with b = -10: the tail mean is infinite, so the drift condition fails.",
        market(
            -10.0,
            0.0,
            densities=[{"family": "powerLawTail", "params": {"p": 1.5, "scale": 1.0}, "support": interval(1.0, "inf")}],
        ),
        horizon=None,
    ),
    "complete_single_atom": spec(
        "c = 0, one jump size -0.5 at rate 1, b = 0: complete.",
        market(0.0, 0.0, [((-0.5,), 1.0)]),
    ),
    "incomplete_two_atoms": spec(
        "c = 0, jump sizes -0.5 and 0.5: more jump points than the kernel dimension, incomplete.",
        market(0.0, 0.0, [((-0.5,), 1.0), ((0.5,), 1.0)]),
    ),
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, obj in FIXTURES.items():
        (OUT / f"{name}.json").write_text(json.dumps(obj, indent=2) + "\n")
    print(f"wrote {len(FIXTURES)} fixtures to {OUT}")


if __name__ == "__main__":
    main()
