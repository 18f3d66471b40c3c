"""Closed convex constraint sets and the geometry derived from a market.

Every set is one variant of a small catalog so that recession cones and closed
conic hulls are exact.  Polyhedral projections are least-distance programs
solved through NNLS (Lawson–Hanson), cones given by rays use NNLS directly, the
parabola uses its cubic normal equation, and intersections fall back to
Dykstra's alternating projections.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .errors import ConvergenceFailure, InvalidTriplet, PreconditionError, UnsupportedVariant
from .levy_core import JumpMeasure, LevyTriplet

MEMBERSHIP_TOL = 1e-9


def _vec(p, d: int) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != d:
        raise ValueError(f"expected a vector of length {d}, got {p.size}")
    return p


def _least_distance(G: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Minimum-norm ``x`` with ``G x >= h`` (Lawson–Hanson LDP via NNLS)."""
    m, d = G.shape
    if m == 0:
        return np.zeros(d)
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(d + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * (m + d + 1))
    r = E @ u - f
    if abs(r[-1]) < 1e-14:
        raise ConvergenceFailure("polyhedron is empty")
    return -r[:d] / r[-1]


class ConstraintSet(ABC):
    """A closed convex set ``C`` containing the origin."""

    dim: int

    @abstractmethod
    def contains(self, p, tol: float = MEMBERSHIP_TOL) -> bool: ...

    @abstractmethod
    def project(self, p) -> np.ndarray: ...

    @abstractmethod
    def recession_cone(self) -> "ConstraintSet": ...

    @abstractmethod
    def closed_conic_hull(self) -> "ConstraintSet": ...

    @abstractmethod
    def to_json(self) -> dict: ...

    is_cone: bool = False

    def halfspaces(self):
        """``(A, a)`` with ``C = {p : A p <= a}``, or None if not available."""
        return None

    def lp_blocks(self):
        """Linear description for LPs: list of ``("H", A, a)`` / ``("V", R)`` blocks, or None."""
        H = self.halfspaces()
        return None if H is None else [("H", H[0], H[1])]

    def generators(self) -> tuple[np.ndarray, np.ndarray]:
        """Representative points and directions of the set (vertices and rays)."""
        return np.zeros((1, self.dim)), np.zeros((0, self.dim))

    @property
    def is_polyhedral(self) -> bool:
        return self.lp_blocks() is not None


class FullSpace(ConstraintSet):
    is_cone = True

    def __init__(self, dim: int):
        self.dim = int(dim)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        return bool(np.all(np.isfinite(_vec(p, self.dim))))

    def project(self, p):
        return _vec(p, self.dim).copy()

    def recession_cone(self):
        return self

    def closed_conic_hull(self):
        return self

    def halfspaces(self):
        return np.zeros((0, self.dim)), np.zeros(0)

    def generators(self):
        e = np.eye(self.dim)
        return np.zeros((1, self.dim)), np.vstack([e, -e])

    def to_json(self):
        return {"type": "full", "params": {"dimension": self.dim}}

    def __repr__(self):
        return f"FullSpace({self.dim})"


class Box(ConstraintSet):
    """``{p : lo <= p <= hi}`` with infinite bounds allowed."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, float).reshape(-1)
        self.hi = np.asarray(hi, float).reshape(-1)
        self.dim = self.lo.size
        if self.hi.size != self.dim or np.any(self.lo > self.hi):
            raise InvalidTriplet("box bounds inconsistent")
        if np.any(self.lo > 0) or np.any(self.hi < 0):
            raise InvalidTriplet("constraint set must contain the origin")

    @property
    def is_cone(self) -> bool:
        return bool(np.all(np.isin(self.lo, (0.0, -np.inf))) and np.all(np.isin(self.hi, (0.0, np.inf))))

    def contains(self, p, tol=MEMBERSHIP_TOL):
        p = _vec(p, self.dim)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def project(self, p):
        return np.clip(_vec(p, self.dim), self.lo, self.hi)

    def recession_cone(self):
        lo = np.where(np.isfinite(self.lo), 0.0, -np.inf)
        hi = np.where(np.isfinite(self.hi), 0.0, np.inf)
        return Box(lo, hi)

    def closed_conic_hull(self):
        lo = np.where(self.lo < 0, -np.inf, 0.0)
        hi = np.where(self.hi > 0, np.inf, 0.0)
        if np.all(np.isinf(lo)) and np.all(np.isinf(hi)):
            return FullSpace(self.dim)
        return Box(lo, hi)

    def halfspaces(self):
        rows, rhs = [], []
        for i in range(self.dim):
            if np.isfinite(self.hi[i]):
                e = np.zeros(self.dim)
                e[i] = 1.0
                rows.append(e)
                rhs.append(self.hi[i])
            if np.isfinite(self.lo[i]):
                e = np.zeros(self.dim)
                e[i] = -1.0
                rows.append(e)
                rhs.append(-self.lo[i])
        return np.array(rows).reshape(-1, self.dim), np.array(rhs)

    def generators(self):
        choices = []
        rays = []
        for i in range(self.dim):
            opts = [v for v in (self.lo[i], self.hi[i]) if np.isfinite(v)] or [0.0]
            choices.append(sorted(set(opts)))
            e = np.zeros(self.dim)
            e[i] = 1.0
            if self.hi[i] == np.inf:
                rays.append(e)
            if self.lo[i] == -np.inf:
                rays.append(-e)
        verts = np.array(list(itertools.product(*choices)), float).reshape(-1, self.dim)
        return verts, np.array(rays).reshape(-1, self.dim)

    def to_json(self):
        out = lambda v: None if not np.isfinite(v) else float(v)  # noqa: E731
        return {"type": "box", "params": {"lo": [out(v) for v in self.lo], "hi": [out(v) for v in self.hi]}}

    def __repr__(self):
        return f"Box({self.lo.tolist()}, {self.hi.tolist()})"


class Orthant(Box):
    """Nonnegative orthant."""

    def __init__(self, dim: int):
        super().__init__(np.zeros(dim), np.full(dim, np.inf))

    def to_json(self):
        return {"type": "orthant", "params": {"dimension": self.dim}}

    def __repr__(self):
        return f"Orthant({self.dim})"


class Polyhedron(ConstraintSet):
    """``{p : A p <= a}``; requires ``a >= 0`` so that the origin is feasible."""

    def __init__(self, A, a):
        self.A = np.atleast_2d(np.asarray(A, float))
        self.a = np.asarray(a, float).reshape(-1)
        self.dim = self.A.shape[1]
        if self.A.shape[0] != self.a.size:
            raise InvalidTriplet("polyhedron A/a shape mismatch")
        if np.any(self.a < 0):
            raise InvalidTriplet("constraint set must contain the origin")

    @property
    def is_cone(self) -> bool:
        return bool(np.all(self.a == 0))

    def contains(self, p, tol=MEMBERSHIP_TOL):
        p = _vec(p, self.dim)
        return bool(np.all(self.A @ p <= self.a + tol * (1.0 + np.abs(self.a))))

    def project(self, p):
        p = _vec(p, self.dim)
        if np.all(self.A @ p <= self.a):
            return p.copy()
        if self.dim == 1:
            col = self.A[:, 0]
            with np.errstate(divide="ignore"):
                hi = np.min(np.where(col > 0, self.a / np.where(col > 0, col, 1.0), np.inf), initial=np.inf)
                lo = np.max(np.where(col < 0, self.a / np.where(col < 0, col, 1.0), -np.inf), initial=-np.inf)
            return np.clip(p, lo, hi)
        return p + _least_distance(-self.A, self.A @ p - self.a)

    def recession_cone(self):
        return Polyhedron(self.A, np.zeros_like(self.a))

    def closed_conic_hull(self):
        tight = self.a == 0
        return Polyhedron(self.A[tight].reshape(-1, self.dim), np.zeros(int(tight.sum())))

    def halfspaces(self):
        return self.A, self.a

    def generators(self):
        return _polyhedron_vertices(self.A, self.a), _cone_extreme_rays(self.A)

    def to_json(self):
        return {"type": "polyhedron", "params": {"A": self.A.tolist(), "a": self.a.tolist()}}

    def __repr__(self):
        return f"Polyhedron(rows={self.A.shape[0]}, dim={self.dim})"


def _polyhedron_vertices(A: np.ndarray, a: np.ndarray, cap: int = 5000) -> np.ndarray:
    m, d = A.shape
    verts = [np.zeros(d)]
    if m < d or math.comb(m, d) > cap:
        return np.array(verts)
    for rows in itertools.combinations(range(m), d):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, a[list(rows)])
        if np.all(A @ v <= a + 1e-9):
            verts.append(v)
    return np.unique(np.round(np.array(verts), 12), axis=0)


def _cone_extreme_rays(A: np.ndarray, cap: int = 5000) -> np.ndarray:
    """Lineality directions and extreme rays (modulo lineality) of ``{r : A r <= 0}``."""
    m, d = A.shape
    if m == 0:
        e = np.eye(d)
        return np.vstack([e, -e])
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
    out = []
    for v in vt[rank:]:
        out.extend([v, -v])
    W = vt[:rank]
    Ar = A @ W.T
    if rank == 1:
        cands = [np.array([1.0]), np.array([-1.0])]
    elif math.comb(m, rank - 1) <= cap:
        cands = []
        for rows in itertools.combinations(range(m), rank - 1):
            M = Ar[list(rows)]
            _, s2, vt2 = np.linalg.svd(M)
            if np.sum(s2 > 1e-12) < rank - 1:
                continue
            cands.extend([vt2[-1], -vt2[-1]])
    else:
        cands = []
    for r in cands:
        if np.all(Ar @ r <= 1e-10):
            out.append(W.T @ r)
    if not out:
        return np.zeros((0, d))
    return np.unique(np.round(np.array(out), 12), axis=0)


class PolyhedralCone(ConstraintSet):
    """``{R lambda : lambda >= 0}`` generated by the rows of ``rays``."""

    is_cone = True

    def __init__(self, rays):
        self.rays = np.atleast_2d(np.asarray(rays, float))
        self.dim = self.rays.shape[1]
        norms = np.linalg.norm(self.rays, axis=1)
        if np.any(norms == 0):
            raise InvalidTriplet("cone rays must be nonzero")
        self.rays = self.rays / norms[:, None]

    def _nnls(self, p):
        lam, res = nnls(self.rays.T, p, maxiter=50 * (self.rays.shape[0] + self.dim))
        return lam, res

    def contains(self, p, tol=MEMBERSHIP_TOL):
        p = _vec(p, self.dim)
        _, res = self._nnls(p)
        return bool(res <= tol * (1.0 + np.linalg.norm(p)))

    def project(self, p):
        lam, _ = self._nnls(_vec(p, self.dim))
        return self.rays.T @ lam

    def recession_cone(self):
        return self

    def closed_conic_hull(self):
        return self

    def lp_blocks(self):
        return [("V", self.rays)]

    def generators(self):
        return np.zeros((1, self.dim)), self.rays.copy()

    def to_json(self):
        return {"type": "cone", "params": {"rays": self.rays.tolist()}}

    def __repr__(self):
        return f"PolyhedralCone({self.rays.tolist()})"


class Parabola(ConstraintSet):
    """``{p : p_i**2 <= p_j}``; remaining coordinates are free."""

    def __init__(self, dim: int = 2, i: int = 0, j: int = 1):
        if i == j or not (0 <= i < dim and 0 <= j < dim):
            raise InvalidTriplet("parabola needs two distinct coordinates")
        self.dim, self.i, self.j = int(dim), int(i), int(j)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        p = _vec(p, self.dim)
        return bool(p[self.i] ** 2 <= p[self.j] + tol * (1.0 + abs(p[self.j])))

    def project(self, p):
        p = _vec(p, self.dim).copy()
        x, y = p[self.i], p[self.j]
        if x * x <= y:
            return p
        # nearest boundary point (t, t^2): 2 t^3 + (1 - 2 y) t - x = 0
        roots = np.roots([2.0, 0.0, 1.0 - 2.0 * y, -x])
        real = [r.real for r in roots if abs(r.imag) < 1e-9 * (1 + abs(r))]
        if not real:
            real = [min(roots, key=lambda r: abs(r.imag)).real]
        t = min(real, key=lambda t: (t - x) ** 2 + (t * t - y) ** 2)
        for _ in range(3):
            f = 2 * t**3 + (1 - 2 * y) * t - x
            df = 6 * t * t + 1 - 2 * y
            if df == 0:
                break
            t -= f / df
        p[self.i], p[self.j] = t, t * t
        return p

    def recession_cone(self):
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        lo[self.i] = hi[self.i] = 0.0
        lo[self.j] = 0.0
        return Box(lo, hi)

    def closed_conic_hull(self):
        lo = np.full(self.dim, -np.inf)
        lo[self.j] = 0.0
        return Box(lo, np.full(self.dim, np.inf))

    def generators(self):
        rays = [np.eye(self.dim)[self.j]]
        for k in range(self.dim):
            if k not in (self.i, self.j):
                rays.extend([np.eye(self.dim)[k], -np.eye(self.dim)[k]])
        pts = []
        for t in np.linspace(-3, 3, 25):
            v = np.zeros(self.dim)
            v[self.i], v[self.j] = t, t * t
            pts.append(v)
        return np.array(pts), np.array(rays)

    def to_json(self):
        return {"type": "parabola", "params": {"dimension": self.dim, "i": self.i, "j": self.j}}

    def __repr__(self):
        return f"Parabola(p{self.i}^2 <= p{self.j})"


class Intersection(ConstraintSet):
    def __init__(self, members):
        self.members = list(members)
        if not self.members:
            raise InvalidTriplet("empty intersection list")
        self.dim = self.members[0].dim
        if any(m.dim != self.dim for m in self.members):
            raise InvalidTriplet("intersection members differ in dimension")

    @property
    def is_cone(self) -> bool:
        return all(m.is_cone for m in self.members)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        return all(m.contains(p, tol) for m in self.members)

    def halfspaces(self):
        hs = [m.halfspaces() for m in self.members]
        if any(h is None for h in hs):
            return None
        return np.vstack([h[0] for h in hs]), np.concatenate([h[1] for h in hs])

    def lp_blocks(self):
        blocks = [m.lp_blocks() for m in self.members]
        if any(b is None for b in blocks):
            return None
        return [blk for b in blocks for blk in b]

    def project(self, p):
        p = _vec(p, self.dim)
        H = self.halfspaces()
        if H is not None:
            return Polyhedron(*H).project(p)
        return dykstra([m.project for m in self.members], p, contains=self.contains)

    def recession_cone(self):
        return Intersection([m.recession_cone() for m in self.members])

    def closed_conic_hull(self):
        H = self.halfspaces()
        if H is None:
            raise UnsupportedVariant("closed conic hull of a non-polyhedral intersection")
        return Polyhedron(*H).closed_conic_hull()

    def generators(self):
        H = self.halfspaces()
        if H is not None:
            return Polyhedron(*H).generators()
        pts, rays = [], []
        for m in self.members:
            v, r = m.generators()
            pts.append(v)
            rays.append(r)
        pts = np.unique(np.round([self.project(v) for v in np.vstack(pts)], 12), axis=0)
        rec = self.recession_cone()
        rays = [r for r in np.vstack(rays) if rec.contains(r, tol=1e-9)]
        return pts, np.array(rays).reshape(-1, self.dim)

    def to_json(self):
        return {"type": "intersection", "params": {"members": [m.to_json() for m in self.members]}}

    def __repr__(self):
        return f"Intersection({self.members})"


def dykstra(projections, p, tol: float = 1e-12, max_iter: int = 10_000, contains=None) -> np.ndarray:
    """Dykstra's alternating projections onto an intersection of closed convex sets."""
    x = np.asarray(p, float).copy()
    incs = [np.zeros_like(x) for _ in projections]
    for _ in range(max_iter):
        x_prev = x
        moved = 0.0
        for k, proj in enumerate(projections):
            y = x + incs[k]
            x = proj(y)
            moved = max(moved, float(np.linalg.norm(y - x - incs[k])))
            incs[k] = y - x
        # x can stall for a few sweeps while the increments still change
        if max(moved, float(np.linalg.norm(x - x_prev))) <= tol * (1.0 + np.linalg.norm(x)):
            return x
    if contains is not None and contains(x, 1e-8):
        return x
    raise ConvergenceFailure("Dykstra projection did not converge")


def zero_set(dim: int) -> Box:
    return Box(np.zeros(dim), np.zeros(dim))


def constraint_from_json(obj: dict, dim: int) -> ConstraintSet:
    kind = obj["type"]
    prm = obj.get("params", {})
    if kind == "full":
        return FullSpace(prm.get("dimension", dim))
    if kind == "orthant":
        return Orthant(prm.get("dimension", dim))
    if kind == "box":
        lo = [-np.inf if v is None else float(v) for v in prm["lo"]]
        hi = [np.inf if v is None else float(v) for v in prm["hi"]]
        return Box(lo, hi)
    if kind == "polyhedron":
        return Polyhedron(np.asarray(prm["A"], float).reshape(-1, dim), prm["a"])
    if kind == "cone":
        return PolyhedralCone(prm["rays"])
    if kind == "parabola":
        return Parabola(prm.get("dimension", dim), prm.get("i", 0), prm.get("j", 1))
    if kind == "intersection":
        return Intersection([constraint_from_json(m, dim) for m in prm["members"]])
    raise UnsupportedVariant(f"unknown constraint type {kind!r}")


# --------------------------------------------------------------------------
# market-derived geometry


@dataclass(frozen=True, eq=False)
class NullSpaceBasis:
    """Orthonormal bases of the null investments and of their complement."""

    basis: np.ndarray
    complement: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def project_out(self, p) -> np.ndarray:
        """Component of ``p`` orthogonal to the null investments."""
        p = np.asarray(p, float)
        return p - self.basis.T @ (self.basis @ p) if self.basis.size else p.copy()

    def distance(self, p) -> float:
        return float(np.linalg.norm(self.project_out(p)))


def _svd_kernel(M: np.ndarray, d: int, rel: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    if M.size == 0 or not np.any(M):
        return np.eye(d), np.zeros((0, d))
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > rel * s[0]))
    return vt[rank:], vt[:rank]


def null_space(triplet: LevyTriplet) -> NullSpaceBasis:
    """Null investments: ``zeta' c = 0``, ``zeta' x = 0`` nu-a.e., ``zeta' b = 0``."""
    d = triplet.dim
    pts, rays = triplet.nu.support_vrep(d)
    M = np.vstack([triplet.c, triplet.b[None, :], pts, rays])
    ker, comp = _svd_kernel(M, d)
    return NullSpaceBasis(ker, comp)


def kernel_basis(c: np.ndarray, rel: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (rows) of ``ker c``."""
    return _svd_kernel(np.asarray(c, float), c.shape[0], rel)[0]


def natural_constraints(nu: JumpMeasure, dim: int) -> Polyhedron:
    """``C_0 = {p : nu[p'x < -1] = 0}`` as a polyhedron from the support's V-representation."""
    pts, rays = nu.support_vrep(dim)
    pts = pts[np.any(pts != 0, axis=1)]
    A = np.vstack([-pts, -rays])
    a = np.concatenate([np.ones(len(pts)), np.zeros(len(rays))])
    return Polyhedron(A.reshape(-1, dim), a)


def natural_constraints_contains(nu: JumpMeasure, p, tol: float = 0.0) -> bool:
    p = np.asarray(p, float).reshape(-1)
    pts, rays = nu.support_vrep(p.size)
    return bool(np.all(pts @ p >= -1.0 - tol) and np.all(rays @ p >= -tol))


def check_null_in_constraints(C: ConstraintSet, nb: NullSpaceBasis) -> None:
    """Raise PreconditionError unless every null investment lies in ``C``."""
    for z in nb.basis:
        for s in (1.0, -1.0):
            for a in (1.0, 1e3):
                if not C.contains(s * a * z, tol=1e-9 * a):
                    raise PreconditionError("null investments are not contained in the constraint set")


def sample_points(C: ConstraintSet, n: int, radius: float, center=None, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points of the box around ``center``, projected onto ``C``."""
    from scipy.stats import qmc

    d = C.dim
    center = np.zeros(d) if center is None else np.asarray(center, float)
    if d == 1:
        u = (np.arange(n) + 0.5) / n
        raw = u[:, None]
    else:
        raw = qmc.Halton(d, scramble=True, seed=seed).random(n)
    pts = center + radius * (2.0 * raw - 1.0)
    return np.array([C.project(p) for p in pts])
