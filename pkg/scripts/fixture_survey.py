"""Run the no-free-lunch analysis, numeraire, Esscher and completeness checks on every bundled fixture.

Usage: python3 scripts/fixture_survey.py [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import time

from levy_nfl.arbitrage import nfl_report
from levy_nfl.errors import IaoPresent, LevyNflError, NoEsmm
from levy_nfl.io import fixture_names, load_fixture, to_jsonable
from levy_nfl.measure_transform import check_completeness, find_esmm
from levy_nfl.numeraire import solve_numeraire


def survey(name: str) -> dict:
    spec = load_fixture(name)
    tri, C = spec.triplet, spec.constraints
    t0 = time.perf_counter()
    row = {"fixture": name, "horizon": "inf" if spec.horizon is None else spec.horizon}
    rep = nfl_report(tri, C, spec.horizon)
    row["freeLunch"] = rep.free_lunch
    row["statuses"] = rep.statuses
    try:
        res = solve_numeraire(tri, C)
        row["rho"] = res.rho.tolist()
        row["growthRate"] = res.growth_rate
    except IaoPresent as exc:
        row["rho"] = None
        row["iao"] = exc.certificate.xi.tolist()
    cone = C if C.is_cone else C.closed_conic_hull()
    try:
        e = find_esmm(tri, cone)
        row["esscher"] = {"eta": list(e.params.eta), "class": e.classification}
    except NoEsmm:
        row["esscher"] = None
    try:
        v = check_completeness(tri, C)
        row["complete"] = v.complete if v.complete else v.reason
    except LevyNflError:
        row["complete"] = "constrained"
    row["seconds"] = time.perf_counter() - t0
    return row


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--json", help="write the rows to this file")
    args = ap.parse_args()
    rows = [survey(n) for n in fixture_names()]
    print(f"{'fixture':<28}{'lunch':<7}{'rho':<26}{'esscher':<24}{'complete':<26}{'sec':>6}")
    for r in rows:
        rho = "IAO " + str(r["iao"]) if r["rho"] is None else "[" + ", ".join(f"{v:.6g}" for v in r["rho"]) + "]"
        ess = "none" if r["esscher"] is None else f"{r['esscher']['class']} eta0={r['esscher']['eta'][0]:.4g}"
        print(f"{r['fixture']:<28}{str(r['freeLunch']):<7}{rho:<26}{ess:<24}{str(r['complete']):<26}{r['seconds']:>6.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(to_jsonable(rows), fh, indent=2)


if __name__ == "__main__":
    main()
