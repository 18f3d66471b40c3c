"""Command-line entry point: ``levy-nfl <command> <spec.json> [options]``.

Exit codes: 0 when no free lunch is found, 2 when one is found (or a
simulation verdict is "violated"), 1 on input or numerical errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .arbitrage import find_immediate_arbitrage, nfl_report
from .errors import HorizonCapReached, IaoPresent, LevyNflError, NoEsmm, PreconditionError
from .io import MarketSpec, load_spec, to_jsonable
from .measure_transform import check_completeness, find_esmm
from .numeraire import solve_numeraire
from . import simulator

log = logging.getLogger("levy_nfl")

OK, FREE_LUNCH, ERROR = 0, 2, 1


def _emit(payload: dict, args, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(to_jsonable(payload), indent=2))
    else:
        print("\n".join(lines))


def _fmt(v) -> str:
    return np.array2string(np.asarray(v, float), precision=10, separator=", ")


def cmd_analyze(spec: MarketSpec, args) -> int:
    rep = nfl_report(spec.triplet, spec.constraints, spec.horizon)
    hz = "infinite" if spec.horizon is None else f"T = {spec.horizon:g}"
    lines = [f"horizon: {hz}"] + [f"  {k:<18} {v}" for k, v in rep.statuses.items()]
    cert = rep.evidence["recessionCone"]
    if cert["verdict"] == "found":
        lines.append(f"immediate arbitrage xi = {cert['xi']}")
    _emit(rep.to_json(), args, lines)
    return FREE_LUNCH if rep.free_lunch else OK


def cmd_numeraire(spec: MarketSpec, args) -> int:
    tol = args.tol if args.tol is not None else spec.option("tol", 1e-10)
    try:
        res = solve_numeraire(spec.triplet, spec.constraints, tol=tol)
    except IaoPresent as exc:
        _emit(
            {"numeraire": None, "certificate": exc.certificate.to_json()},
            args,
            [f"no numeraire: immediate arbitrage xi = {_fmt(exc.certificate.xi)}"],
        )
        return FREE_LUNCH
    lines = [
        f"rho            = {_fmt(res.rho)}",
        f"growth rate    = {res.growth_rate:.12g}",
        f"kkt residual   = {res.kkt_residual:.3g}",
        f"iterations     = {res.iterations}",
    ]
    for n, r, g in res.approx_trace:
        lines.append(f"  n = {n:<5d} rho_n = {_fmt(r)}  g_n = {g:.10g}")
    _emit(res.to_json(), args, lines)
    return OK


def _cone_of(spec: MarketSpec):
    return spec.constraints if spec.constraints.is_cone else spec.constraints.closed_conic_hull()


def cmd_esscher(spec: MarketSpec, args) -> int:
    T = spec.horizon if spec.horizon is not None else 1.0
    try:
        res = find_esmm(spec.triplet, _cone_of(spec), T)
    except NoEsmm as exc:
        _emit(
            {"esmm": None, "witness": exc.witness.to_json()},
            args,
            [f"ESMM no: immediate arbitrage xi = {_fmt(exc.witness.xi)}"],
        )
        return FREE_LUNCH
    emm = res.classification == "EMM"
    lines = [
        f"eta = {_fmt(res.params.eta)}, g = {res.params.g_tag}, psi = {res.params.psi:.10g}",
        f"ESMM yes, EMM {'yes' if emm else 'no'}",
    ]
    _emit(res.to_json(), args, lines)
    return OK


def cmd_complete(spec: MarketSpec, args) -> int:
    v = check_completeness(spec.triplet, spec.constraints)
    line = "complete" if v.complete else f"incomplete ({v.reason})"
    _emit(v.to_json(), args, [line, f"dim ker c = {v.kernel_dim}"])
    return OK


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_simulate(spec: MarketSpec, args) -> int:
    seed = args.seed if args.seed is not None else spec.option("seed", 0)
    n_paths = args.paths if args.paths is not None else spec.option("paths", 100_000)
    steps = spec.option("steps", 4)
    T = spec.horizon if spec.horizon is not None else 1.0
    tri, C = spec.triplet, spec.constraints
    eps = spec.option("epsilon", 1e-3)
    what = args.what
    if what == "supermartingale":
        rho = solve_numeraire(tri, C).rho
        pis = [np.asarray(p, float) for p in spec.option("portfolios", [np.zeros(tri.dim).tolist()])]
        plan = simulator.simulation_plan(tri, eps)
        paths = simulator.sample_paths(plan, T, steps, n_paths, seed)
        lr = simulator.log_wealth(paths, rho)
        reports = [simulator.supermartingale_test(simulator.log_wealth(paths, p), lr, paths.time_grid, seed) for p in pis]
        if args.csv:
            ratio = np.exp(simulator.log_wealth(paths, pis[0]) - lr)
            rows = ([i, *r] for i, r in enumerate(ratio.tolist()))
            _write_csv(args.csv, ["path"] + [f"t={t:g}" for t in paths.time_grid], rows)
        payload = {"rho": rho, "portfolios": pis, "reports": [r.to_json() for r in reports]}
        lines = [f"rho = {_fmt(rho)}"] + [
            f"pi = {_fmt(p)}: E[W^pi_T/W^rho_T] = {r.estimate:.6f} +- {r.standard_error:.6f} ({r.verdict})"
            for p, r in zip(pis, reports)
        ]
        _emit(payload, args, lines)
        return FREE_LUNCH if any(r.verdict == "violated" for r in reports) else OK
    if what == "iao-demo":
        cert = find_immediate_arbitrage(tri, C.recession_cone())
        if not cert.found:
            raise PreconditionError("no immediate arbitrage over the recession cone; nothing to demonstrate")
        rep = simulator.increasing_profit_demo(tri, cert.xi, T, n_paths, seed, n_steps=max(steps, 20))
        _emit(
            {"xi": cert.xi, "report": rep.to_json()},
            args,
            [f"xi = {_fmt(cert.xi)}", f"P[W_T > 1] = {rep.estimate:.6f}", f"monotone fraction = {rep.details['monotoneFraction']}"],
        )
        return FREE_LUNCH
    if what == "infinite-horizon":
        try:
            rep = simulator.infinite_horizon_free_lunch_demo(
                tri,
                C,
                spec.option("level", 2.0),
                seed,
                n_paths=min(n_paths, 2000) if args.paths is None else n_paths,
                max_horizon=spec.option("maxHorizon", 1000.0),
            )
        except HorizonCapReached as exc:
            _emit({"error": str(exc), "report": exc.report.to_json()}, args, [f"error: {exc}"])
            return ERROR
        d = rep.details
        _emit(
            rep.to_json(),
            args,
            [f"hit fraction {rep.estimate:.4f} at level {d['level']} by horizon {d['horizon']:g}",
             f"mean terminal wealth {d['meanTerminalWealth']:.4f} >= {d['wealthBound']:.4f}"],
        )
        return FREE_LUNCH if rep.verdict == "violated" else OK
    if what == "esscher-martingale":
        res = find_esmm(tri, _cone_of(spec), T)
        rep = simulator.esscher_martingale_test(tri, res.params, T, n_paths, seed)
        _emit(
            {"esscher": res.params.to_json(), "report": rep.to_json()},
            args,
            [f"E[Z_T] = {rep.estimate:.6f} +- {rep.standard_error:.6f} ({rep.verdict})"],
        )
        return OK if rep.verdict == "consistent" else FREE_LUNCH
    raise ValueError(f"unknown simulation {what!r}")


COMMANDS = {
    "analyze": cmd_analyze,
    "numeraire": cmd_numeraire,
    "esscher": cmd_esscher,
    "complete": cmd_complete,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levy-nfl", description="No-free-lunch analysis of exponential Lévy markets.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("spec", help="market spec JSON file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--paths", type=int)
    ap.add_argument("--csv", help="write per-path values of a simulation to this file")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--json", action="store_true", help="print machine-readable JSON")
    ap.add_argument(
        "--what",
        choices=["supermartingale", "iao-demo", "infinite-horizon", "esscher-martingale"],
        default="supermartingale",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = load_spec(args.spec)
        return COMMANDS[args.command](spec, args)
    except (LevyNflError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
