"""Immediate arbitrage opportunities and the no-free-lunch report.

An immediate arbitrage opportunity is a direction ``xi`` outside the null
investments with ``xi' c = 0``, ``xi' x >= 0`` nu-a.e. and nonnegative
compensated drift ``xi' b - int xi' x 1{|x|<=1} nu(dx)``.  Deciding whether the
recession cone of the constraints contains one is the master test: every
no-free-lunch statement reduces to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .constraints import (
    ConstraintSet,
    NullSpaceBasis,
    _svd_kernel,
    kernel_basis,
    null_space,
)
from .errors import NotAnIAO, UnsupportedVariant
from .levy_core import ZERO, Growth, JumpMeasure, LevyTriplet, integrate

LP_TOL = 1e-9
CONDITIONS = ("NUIP", "NUPBR", "NA", "NFLVR", "ESMM-exists", "numeraire-exists", "ESMD-exists")


@dataclass(frozen=True, eq=False)
class ArbitrageCertificate:
    """Outcome of the cone test: ``found`` with ``xi``, or empty with the method used."""

    found: bool
    xi: np.ndarray | None
    method: str
    tolerance: float
    resolution: int | None = None
    drift_part: float | None = None
    null_distance: float | None = None

    def to_json(self) -> dict:
        out = {"verdict": "found" if self.found else "empty", "method": self.method, "tolerance": self.tolerance}
        if self.resolution is not None:
            out["resolution"] = self.resolution
        if self.found:
            out.update(xi=self.xi.tolist(), driftPart=self.drift_part, nullDistance=self.null_distance)
        return out


@dataclass(frozen=True)
class _SupportData:
    """Directions the IAO conditions are tested against."""

    ineq: np.ndarray  # rows v with xi'v >= 0 required
    eq: np.ndarray  # rows v with xi'v = 0 required (infinite-variation segments)
    small_mean: np.ndarray  # int x 1{|x|<=1} nu over the finite-variation part


def _support_data(triplet: LevyTriplet) -> _SupportData:
    d = triplet.dim
    nu = triplet.nu
    x, r = nu.atom_array(d)
    ineq, eq = [x], []
    small = (x * r[:, None])[np.linalg.norm(x, axis=1) <= 1.0].sum(axis=0) if len(x) else np.zeros(d)
    for seg in nu.densities:
        p, rays = seg.vrep()
        rows = np.vstack([p, rays])
        rows = rows[np.any(rows != 0, axis=1)]
        if seg.infinite_variation():
            eq.append(rows)
            continue
        ineq.append(rows)
        for j in range(d):
            small[j] += integrate(
                JumpMeasure((), (seg,)),
                lambda y, j=j: np.where(np.einsum("ij,ij->i", y, y) <= 1.0, y[:, j], 0.0),
                tail=ZERO,
                origin=lambda u, j=j: Growth(sign=float(np.sign(u[j])), k=1.0),
            )
    return _SupportData(
        np.vstack(ineq).reshape(-1, d),
        np.vstack(eq).reshape(-1, d) if eq else np.zeros((0, d)),
        small,
    )


def arbitrage_basis(triplet: LevyTriplet, nb: NullSpaceBasis) -> np.ndarray:
    """Orthonormal basis (rows) of ``ker c`` intersected with the complement of the null investments."""
    kc = kernel_basis(triplet.c)
    if kc.size == 0:
        return np.zeros((0, triplet.dim))
    proj = np.array([nb.project_out(v) for v in kc])
    _, comp = _svd_kernel(proj, triplet.dim, rel=1e-9)
    return comp


def compensated_drift(triplet: LevyTriplet, xi) -> float:
    """``xi' b - int xi' x 1{|x|<=1} nu(dx)`` (``-inf`` for infinite variation along xi)."""
    xi = np.asarray(xi, float)

    def f(x):
        return np.where(np.einsum("ij,ij->i", x, x) <= 1.0, x @ xi, 0.0)

    mean = integrate(triplet.nu, f, tail=ZERO, origin=lambda u: Growth(sign=float(np.sign(u @ xi)), k=1.0))
    return float(xi @ triplet.b) - mean


def _certificate(triplet, xi, nb, method, resolution=None) -> ArbitrageCertificate:
    xi = xi / np.linalg.norm(xi)
    xi = np.where(np.abs(xi) < 1e-14, 0.0, xi)
    return ArbitrageCertificate(
        True,
        xi,
        method,
        LP_TOL,
        resolution=resolution,
        drift_part=compensated_drift(triplet, xi),
        null_distance=nb.distance(xi),
    )


def _lp_search(triplet, cone: ConstraintSet, B: np.ndarray, data: _SupportData):
    k, d = B.shape
    blocks = cone.lp_blocks()
    nv_rays = sum(blk[1].shape[0] for blk in blocks if blk[0] == "V")
    n = k + nv_rays
    A_ub, b_ub, A_eq, b_eq = [], [], [], []

    def pad(row_z, row_l=None):
        row = np.zeros(n)
        row[:k] = row_z
        if row_l is not None:
            row[k:] = row_l
        return row

    for v in data.ineq:
        A_ub.append(pad(-(B @ v)))
        b_ub.append(0.0)
    for v in data.eq:
        A_eq.append(pad(B @ v))
        b_eq.append(0.0)
    A_ub.append(pad(-(B @ (triplet.b - data.small_mean))))
    b_ub.append(0.0)
    off = 0
    for blk in blocks:
        if blk[0] == "H":
            for arow, a in zip(blk[1], blk[2]):
                A_ub.append(pad(B @ arow))
                b_ub.append(0.0)
        else:
            R = blk[1]
            for i in range(d):
                lam = np.zeros(nv_rays)
                lam[off : off + R.shape[0]] = -R[:, i]
                A_eq.append(pad(B[:, i], lam))
                b_eq.append(0.0)
            off += R.shape[0]
    bounds = [(-1.0, 1.0)] * k + [(0.0, None)] * nv_rays
    opts = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
    for j in range(k):
        for sgn in (1.0, -1.0):
            obj = np.zeros(n)
            obj[j] = -sgn
            res = linprog(
                obj,
                A_ub=np.array(A_ub) if A_ub else None,
                b_ub=np.array(b_ub) if b_ub else None,
                A_eq=np.array(A_eq) if A_eq else None,
                b_eq=np.array(b_eq) if b_eq else None,
                bounds=bounds,
                method="highs",
                options=opts,
            )
            if res.status == 0 and -res.fun > LP_TOL:
                return B.T @ res.x[:k]
    return None


def _grid_candidates(B: np.ndarray, cone: ConstraintSet, data: _SupportData, drift: np.ndarray, resolution: int) -> np.ndarray:
    k = B.shape[0]
    if k == 1:
        return np.array([[1.0], [-1.0]])
    eye = np.eye(k)
    cands = [eye, -eye]
    if k == 2:
        th = 2 * np.pi * np.arange(resolution) / resolution
        cands.append(np.column_stack([np.cos(th), np.sin(th)]))
        struct = [B @ v for v in np.vstack([data.ineq, data.eq])]
        struct.append(B @ drift)
        for w in struct:
            if np.linalg.norm(w) > 1e-14:
                o = np.array([-w[1], w[0]]) / np.linalg.norm(w)
                cands.extend([o[None, :], -o[None, :]])
    else:
        i = np.arange(resolution) + 0.5
        if k == 3:
            phi = np.arccos(1 - 2 * i / resolution)
            th = np.pi * (1 + 5**0.5) * i
            cands.append(np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)]))
        else:
            rng = np.random.default_rng(0)
            g = rng.standard_normal((resolution, k))
            cands.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    _, rays = cone.generators()
    for r in rays:
        z = B @ r
        if np.linalg.norm(z) > 1e-12:
            cands.append((z / np.linalg.norm(z))[None, :])
    return np.vstack(cands)


def _grid_search(triplet, cone, B, data, resolution):
    passing = []
    for z in _grid_candidates(B, cone, data, triplet.b - data.small_mean, resolution):
        xi = B.T @ z
        xi = xi / np.linalg.norm(xi)
        if not cone.contains(xi, tol=1e-9):
            continue
        vals = data.ineq @ xi
        if np.any(vals < -1e-12 * np.maximum(1.0, np.linalg.norm(data.ineq, axis=1))):
            continue
        if data.eq.size and np.any(np.abs(data.eq @ xi) > 1e-12):
            continue
        if compensated_drift(triplet, xi) < -1e-10:
            continue
        passing.append(np.round(xi, 12))
    if not passing:
        return None
    passing.sort(key=lambda v: tuple(v))
    return passing[0]


def find_immediate_arbitrage(
    triplet: LevyTriplet,
    cone: ConstraintSet,
    null_basis: NullSpaceBasis | None = None,
    *,
    method: str = "auto",
    resolution: int = 720,
) -> ArbitrageCertificate:
    """Search the cone for an immediate arbitrage opportunity.

    ``method="auto"`` solves LPs when the jump measure is atomic and the cone is
    polyhedral, otherwise scans unit directions (``"grid"``); ``"lp"`` forces
    the LP, which uses support V-representations for density segments.
    """
    if not cone.is_cone:
        raise UnsupportedVariant("find_immediate_arbitrage needs a cone; pass the recession cone")
    nb = null_basis if null_basis is not None else null_space(triplet)
    B = arbitrage_basis(triplet, nb)
    polyhedral = cone.lp_blocks() is not None
    if method == "auto":
        method = "lp" if polyhedral and triplet.nu.is_atomic else "grid"
    if method == "lp" and not polyhedral:
        raise UnsupportedVariant("LP path needs a polyhedral cone")
    tag = "exactLP" if method == "lp" else "sphereGrid"
    res = resolution if method == "grid" else None
    if B.shape[0] == 0:
        return ArbitrageCertificate(False, None, tag, LP_TOL, resolution=res)
    data = _support_data(triplet)
    xi = _lp_search(triplet, cone, B, data) if method == "lp" else _grid_search(triplet, cone, B, data, resolution)
    if xi is None:
        return ArbitrageCertificate(False, None, tag, LP_TOL, resolution=res)
    return _certificate(triplet, xi, nb, tag, res)


def verify_certificate(triplet: LevyTriplet, cert: ArbitrageCertificate, cone: ConstraintSet) -> list[str]:
    """Names of violated certificate invariants (empty list when valid)."""
    if not cert.found:
        return []
    xi = cert.xi
    bad = []
    if np.linalg.norm(xi @ triplet.c) > 1e-10:
        bad.append("xi'c != 0")
    pts, rays = triplet.nu.support_vrep(triplet.dim)
    if np.any(pts @ xi < -1e-12) or np.any(rays @ xi < -1e-12):
        bad.append("negative jump exposure")
    if cert.drift_part < -1e-10:
        bad.append("negative compensated drift")
    if cert.null_distance < 1e-8:
        bad.append("xi is a null investment")
    if not all(cone.contains(a * xi, tol=1e-9 * a) for a in (1.0, 1e3)):
        bad.append("xi outside the cone")
    return bad


@dataclass(frozen=True, eq=False)
class IncreasingProfit:
    """Split of ``xi' X`` into a nonnegative drift rate and nonnegative jumps."""

    linear_drift: float
    atoms: list = field(default_factory=list)  # (x, rate, xi'x)
    densities: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "linearDrift": self.linear_drift,
            "atoms": [{"x": list(map(float, x)), "rate": r, "profit": p} for x, r, p in self.atoms],
            "densities": len(self.densities),
        }


def increasing_profit_decomposition(triplet: LevyTriplet, xi) -> IncreasingProfit:
    xi = np.asarray(xi, float)
    if np.linalg.norm(xi @ triplet.c) > 1e-10:
        raise NotAnIAO("xi'c != 0")
    pts, rays = triplet.nu.support_vrep(triplet.dim)
    if np.any(pts @ xi < -1e-12) or np.any(rays @ xi < -1e-12):
        raise NotAnIAO("xi has negative jump exposure")
    drift = compensated_drift(triplet, xi)
    if drift < -1e-10:
        raise NotAnIAO("compensated drift is negative")
    if null_space(triplet).distance(xi) < 1e-8:
        raise NotAnIAO("xi is a null investment")
    atoms = [(a.x, a.rate, float(np.dot(a.x, xi))) for a in triplet.nu.atoms]
    return IncreasingProfit(max(drift, 0.0), atoms, list(triplet.nu.densities))


# --------------------------------------------------------------------------
# report


@dataclass(frozen=True, eq=False)
class NflReport:
    horizon: float | None  # None means infinite
    statuses: dict
    evidence: dict

    def to_json(self) -> dict:
        hz = "infinite" if self.horizon is None else {"finite": self.horizon}
        return {"horizon": hz, "statuses": dict(self.statuses), "certificate": self.evidence}

    @property
    def free_lunch(self) -> bool:
        return any(v == "fails" for v in self.statuses.values())


def _all(value: str) -> dict:
    return {c: value for c in CONDITIONS}


def nfl_report(triplet: LevyTriplet, C: ConstraintSet, horizon: float | None = 1.0) -> NflReport:
    """Aggregate the cone tests into statuses of the no-free-lunch conditions."""
    from .constraints import check_null_in_constraints
    from .measure_transform import is_supermartingale_measure

    nb = null_space(triplet)
    check_null_in_constraints(C, nb)
    rec = C.recession_cone()
    cert = find_immediate_arbitrage(triplet, rec, nb)
    evidence = {"recessionCone": cert.to_json()}
    if horizon is None:
        ok, direction, value = is_supermartingale_measure(triplet, C)
        evidence["supermartingale"] = {
            "holds": ok,
            "worstDirection": None if direction is None else direction.tolist(),
            "value": value,
        }
        s = "holds" if ok else "fails"
        st = {c: s for c in CONDITIONS}
        st["P-supermartingale"] = s
        st["NUIP"] = "fails" if cert.found else "holds"
        if cert.found:
            st["numeraire-exists"] = "fails"
        elif not ok:
            st["numeraire-exists"] = "notDecidedHere"
        return NflReport(None, st, evidence)
    if cert.found:
        return NflReport(horizon, _all("fails"), evidence)
    if C.is_cone:
        return NflReport(horizon, _all("holds"), evidence)
    st = {c: "holds" for c in ("NUIP", "NUPBR", "numeraire-exists", "ESMD-exists")}
    hull = C.closed_conic_hull()
    cert2 = find_immediate_arbitrage(triplet, hull, nb)
    evidence["conicHull"] = cert2.to_json()
    if cert2.found:
        st.update({"ESMM-exists": "fails", "NA": "notDecidedHere", "NFLVR": "notDecidedHere"})
    else:
        st.update({"ESMM-exists": "holds", "NA": "holds", "NFLVR": "holds"})
    return NflReport(horizon, {c: st[c] for c in CONDITIONS}, evidence)
