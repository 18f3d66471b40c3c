"""Growth rate, relative rate of return and the numéraire portfolio.

The numéraire ``rho`` maximizes the growth rate ``g`` over ``C ∩ N^⊥`` and is
characterized by ``rel(pi | rho) <= 0`` for every admissible ``pi``.  When the
jump measure does not integrate the log, ``g`` can be ``+inf``; the solver then
walks the damped measures ``f_n nu`` and finishes on the relative growth
``g(pi) - g(pi0)``, which stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constraints import (
    ConstraintSet,
    NullSpaceBasis,
    Polyhedron,
    check_null_in_constraints,
    dykstra,
    natural_constraints,
    null_space,
)
from .errors import ConvergenceFailure, IaoPresent, PreconditionError
from .levy_core import (
    BOUNDED,
    ZERO,
    Growth,
    JumpMeasure,
    LevyTriplet,
    approximate,
    integrate,
    integrates_log,
)

# --------------------------------------------------------------------------
# domain and contact checks


def in_domain(nu: JumpMeasure, pi, strict_atoms: bool = True) -> bool:
    """``nu[pi'x <= -1] = 0``: atoms strictly above -1, density supports at or above it."""
    pi = np.asarray(pi, float)
    d = pi.size
    x, _ = nu.atom_array(d)
    if len(x) and np.any(1.0 + x @ pi <= (0.0 if strict_atoms else -1e-12)):
        return False
    for seg in nu.densities:
        pts, rays = seg.vrep()
        if np.any(1.0 + pts @ pi < -1e-12) or np.any(rays @ pi < -1e-12):
            return False
    return True


def _contacts(nu: JumpMeasure, pi: np.ndarray) -> list[np.ndarray]:
    """Support points where ``1 + pi'x = 0`` and the density does not vanish."""
    out = []
    for seg in nu.densities:
        pts, _ = seg.vrep()
        for v in pts:
            if abs(1.0 + v @ pi) <= 1e-12 and seg.density_at(v[None, :])[0] > 1e-300:
                out.append(v)
    return out


def _inner(x):
    return np.einsum("ij,ij->i", x, x) <= 1.0


# --------------------------------------------------------------------------
# growth rate and its derivatives


def growth_rate(triplet: LevyTriplet, pi) -> float:
    """``pi'b - pi'c pi / 2 + int (log(1 + pi'x) - pi'x 1{|x|<=1}) nu(dx)``."""
    pi = np.asarray(pi, float).reshape(triplet.dim)
    if not in_domain(triplet.nu, pi):
        return -math.inf
    base = float(pi @ triplet.b - 0.5 * pi @ triplet.c @ pi)
    if triplet.nu.is_zero:
        return base

    def f(x):
        px = x @ pi
        return np.log1p(px) - np.where(_inner(x), px, 0.0)

    def tail(u):
        a = float(pi @ u)
        if a > 0:
            return Growth(m=1.0)
        return ZERO if a == 0 else Growth(sign=-1.0, m=1.0)

    return base + integrate(triplet.nu, f, tail=tail, origin=Growth(sign=-1.0, k=2.0))


def _directional(triplet: LevyTriplet, pi: np.ndarray, d: np.ndarray) -> float:
    """``d'b - d'c pi + int (d'x / (1 + pi'x) - d'x 1{|x|<=1}) nu(dx)``."""
    base = float(d @ triplet.b - d @ triplet.c @ pi)
    nu = triplet.nu
    if nu.is_zero or not np.any(d):
        return base
    signs = {float(np.sign(v @ d)) for v in _contacts(nu, pi)} - {0.0}
    if len(signs) > 1:
        raise PreconditionError("directional derivative has the form inf - inf")
    if signs:
        return math.copysign(math.inf, signs.pop())

    def f(x):
        dx = x @ d
        return dx / (1.0 + x @ pi) - np.where(_inner(x), dx, 0.0)

    def tail(u):
        a, s = float(pi @ u), float(np.sign(d @ u))
        if s == 0:
            return ZERO
        return Growth(sign=s) if a > 0 else Growth(sign=s, k=1.0)

    return base + integrate(nu, f, tail=tail, origin=Growth(k=2.0))


def growth_rate_derivative(triplet: LevyTriplet, pi, direction) -> float:
    """Directional derivative of the growth rate at ``pi`` along ``direction``."""
    pi = np.asarray(pi, float).reshape(triplet.dim)
    if not in_domain(triplet.nu, pi):
        raise PreconditionError("growth rate is -inf at pi")
    return _directional(triplet, pi, np.asarray(direction, float).reshape(triplet.dim))


def growth_gradient(triplet: LevyTriplet, pi) -> np.ndarray:
    pi = np.asarray(pi, float).reshape(triplet.dim)
    return np.array([_directional(triplet, pi, e) for e in np.eye(triplet.dim)])


def rel_rate(triplet: LevyTriplet, pi, rho) -> float:
    """Relative rate of return of ``pi`` with respect to ``rho``."""
    rho = np.asarray(rho, float).reshape(triplet.dim)
    if not in_domain(triplet.nu, rho):
        raise PreconditionError("rel needs nu[rho'x <= -1] = 0")
    return _directional(triplet, rho, np.asarray(pi, float).reshape(triplet.dim) - rho)


def relative_growth(triplet: LevyTriplet, pi, pi0) -> float:
    """``g(pi) - g(pi0)`` as a single integral, finite even when ``g`` itself is not."""
    pi = np.asarray(pi, float).reshape(triplet.dim)
    pi0 = np.asarray(pi0, float).reshape(triplet.dim)
    if not in_domain(triplet.nu, pi0):
        raise PreconditionError("reference portfolio outside the domain")
    if not in_domain(triplet.nu, pi):
        return -math.inf
    d = pi - pi0
    c = triplet.c
    # d'(b - c pi0) - d'c d / 2 avoids cancelling two large quadratic forms
    base = float(d @ (triplet.b - c @ pi0) - 0.5 * d @ c @ d)
    if triplet.nu.is_zero or not np.any(d):
        return base

    def f(x):
        dx, p0x = x @ d, x @ pi0
        with np.errstate(divide="ignore", invalid="ignore"):
            r = dx / (1.0 + p0x)
            # far out the ratio rounds to -1; the log difference stays accurate there
            lg = np.where(r > -0.5, np.log1p(r), np.log1p(x @ pi) - np.log1p(p0x))
        return lg - np.where(_inner(x), dx, 0.0)

    def tail(u):
        a, a0 = float(pi @ u), float(pi0 @ u)
        if a > 0 and a0 > 0:
            return BOUNDED
        if a > 0:
            return Growth(m=1.0)
        if a0 > 0:
            return Growth(sign=-1.0, m=1.0)
        return ZERO

    return base + integrate(triplet.nu, f, tail=tail, origin=Growth(k=2.0))


# --------------------------------------------------------------------------
# projected gradient ascent


@dataclass
class AscentResult:
    x: np.ndarray
    iterations: int
    step: float
    residual: float
    converged: bool


def projected_gradient_ascent(
    delta: Callable[[np.ndarray, np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    project: Callable[[np.ndarray], np.ndarray],
    x0,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    sigma: float = 1e-4,
) -> AscentResult:
    """Maximize a concave function given its increments ``delta(y, x) = f(y) - f(x)``.

    Armijo backtracking along the projection arc with Barzilai–Borwein initial
    steps; stops when the unit-step projected gradient ``|P(x + g) - x|`` is
    below ``tol``, or when the line search stalls.
    """
    x = project(np.asarray(x0, float))
    g = grad(x)
    t = 1.0
    res = math.inf
    for it in range(1, max_iter + 1):
        finite = bool(np.all(np.isfinite(g)))
        # an infinite slope at a boundary: steer with a large surrogate, accept any ascent
        gs = g if finite else np.nan_to_num(g, posinf=1e6, neginf=-1e6)
        res = float(np.linalg.norm(project(x + gs) - x))
        if res <= tol:
            return AscentResult(x, it, t, res, True)
        if not finite:
            t = 1.0
        while True:
            y = project(x + t * gs)
            d = y - x
            if np.linalg.norm(d) <= 1e-15 * (1.0 + np.linalg.norm(x)):
                return AscentResult(x, it, t, res, res <= 1e3 * tol)
            val = delta(y, x)
            if math.isfinite(val) and val >= (sigma * float(gs @ d) if finite else 0.0) and val >= 0.0:
                break
            t *= 0.5
        g_new = grad(y)
        s, yv = y - x, g_new - g
        sy = float(s @ yv) if finite and np.all(np.isfinite(g_new)) else 0.0
        t = float(np.clip(s @ s / -sy, 1e-12, 1e12)) if sy < 0 else min(2.0 * t, 1e12)
        x, g = y, g_new
    raise ConvergenceFailure(f"projected gradient ascent hit the iteration cap ({max_iter})")


# --------------------------------------------------------------------------
# the numéraire


@dataclass(frozen=True, eq=False)
class NumeraireResult:
    rho: np.ndarray
    growth_rate: float
    kkt_residual: float
    approx_trace: list = field(default_factory=list)  # (n, rho_n, g_n(rho_n))
    iterations: int = 0
    final_step: float = 0.0

    def to_json(self) -> dict:
        return {
            "rho": self.rho.tolist(),
            "growthRate": _ext(self.growth_rate),
            "kktResidual": self.kkt_residual,
            "approxTrace": [{"n": n, "rho": r.tolist(), "growthRate": _ext(g)} for n, r, g in self.approx_trace],
            "iterations": self.iterations,
            "finalStep": self.final_step,
        }


def _ext(v: float):
    return v if math.isfinite(v) else ("+inf" if v > 0 else "-inf")


def feasible_projector(triplet: LevyTriplet, C: ConstraintSet, nb: NullSpaceBasis | None = None):
    """Euclidean projection onto ``C ∩ C_0 ∩ N^⊥``."""
    nb = nb if nb is not None else null_space(triplet)
    C0 = natural_constraints(triplet.nu, triplet.dim)
    H = C.halfspaces()
    if H is not None:
        P = Polyhedron(np.vstack([H[0], C0.A]), np.concatenate([H[1], C0.a]))
        inner = P.project
    elif C0.A.shape[0] == 0:
        inner = C.project
    else:
        inner = lambda p: dykstra([C.project, C0.project], p)  # noqa: E731

    def project(p):
        return nb.project_out(inner(np.asarray(p, float)))

    return project


def _solve_on(triplet, project, x0, tol, max_iter) -> AscentResult:
    return projected_gradient_ascent(
        lambda y, x: relative_growth(triplet, y, x),
        lambda x: growth_gradient(triplet, x),
        project,
        x0,
        tol=tol,
        max_iter=max_iter,
    )


def solve_numeraire(
    triplet: LevyTriplet,
    C: ConstraintSet,
    *,
    tol: float = 1e-10,
    x0=None,
    max_iter: int = 100_000,
    approx_stop: float = 1e-7,
    approx_cap: int = 10,
) -> NumeraireResult:
    """Growth-optimal portfolio over ``C``; raises IaoPresent when none exists."""
    from .arbitrage import find_immediate_arbitrage

    nb = null_space(triplet)
    check_null_in_constraints(C, nb)
    cert = find_immediate_arbitrage(triplet, C.recession_cone(), nb)
    if cert.found:
        raise IaoPresent(cert)
    project = feasible_projector(triplet, C, nb)
    start = np.zeros(triplet.dim) if x0 is None else np.asarray(x0, float)
    trace = []
    if integrates_log(triplet.nu):
        out = _solve_on(triplet, project, start, tol, max_iter)
    else:
        prev = None
        x = start
        for j in range(approx_cap + 1):
            n = 2**j
            tn = LevyTriplet(triplet.b, triplet.c, approximate(triplet.nu, n))
            r = _solve_on(tn, project, x, tol, max_iter)
            trace.append((n, r.x.copy(), growth_rate(tn, r.x)))
            x = r.x
            if prev is not None and np.linalg.norm(r.x - prev) < approx_stop:
                break
            prev = r.x
        # finish on the original measure through relative growth
        out = _solve_on(triplet, project, x, tol, max_iter)
    rho = out.x
    return NumeraireResult(
        rho,
        growth_rate(triplet, rho),
        verify_numeraire(triplet, C, rho),
        trace,
        out.iterations,
        out.step,
    )


def verification_sample(triplet: LevyTriplet, C: ConstraintSet, rho, n: int = 1000) -> np.ndarray:
    """Deterministic points of ``C ∩ C_0``: set generators, low-discrepancy fill, boundary probes."""
    rho = np.asarray(rho, float)
    d = triplet.dim
    C0 = natural_constraints(triplet.nu, d)
    H = C.halfspaces()
    if H is not None:
        proj = Polyhedron(np.vstack([H[0], C0.A]), np.concatenate([H[1], C0.a])).project
    else:
        proj = lambda p: dykstra([C.project, C0.project], p, tol=1e-10)  # noqa: E731
    verts, rays = C.generators()
    cands = [v for v in verts]
    for r in rays:
        cands.extend([rho + r, rho + 10.0 * r])
    radius = max(1.0, 2.0 * float(np.max(np.abs(rho), initial=0.0)))
    from scipy.stats import qmc

    raw = (np.arange(n)[:, None] + 0.5) / n if d == 1 else qmc.Halton(d, scramble=True, seed=0).random(n)
    cands.extend(rho + radius * (2.0 * raw - 1.0))
    pts, _ = triplet.nu.support_vrep(d)
    for v in pts:
        nv = float(v @ v)
        if nv > 0:
            cands.append(-v / nv)
    return np.array([proj(p) for p in cands])


def verify_numeraire(triplet: LevyTriplet, C: ConstraintSet, rho, n: int = 1000) -> float:
    """``max rel(pi | rho)`` over the verification sample (0 at ``pi = rho``)."""
    rho = np.asarray(rho, float)
    if not in_domain(triplet.nu, rho):
        return math.inf
    G = growth_gradient(triplet, rho)
    sample = verification_sample(triplet, C, rho, n)
    if np.all(np.isfinite(G)):
        vals = (sample - rho) @ G
    else:
        vals = np.array([rel_rate(triplet, p, rho) for p in sample[:200]])
    return float(max(0.0, np.max(vals)))


def log_optimality_gap(
    triplet: LevyTriplet,
    C: ConstraintSet,
    rho,
    T: float = 1.0,
    portfolios=None,
    *,
    n_paths: int = 20_000,
    n_steps: int = 50,
    seed: int = 0,
    tol: float = 1e-6,
) -> list[dict]:
    """Compare ``T rel(pi|rho)`` with a Monte Carlo estimate of ``E log(W^pi_T / W^rho_T)``."""
    from .simulator import log_wealth, sample_paths

    rho = np.asarray(rho, float)
    if portfolios is None:
        portfolios = [rho, np.zeros_like(rho)]
    paths = sample_paths(triplet, T, n_steps, n_paths, seed)
    lr = log_wealth(paths, rho)[:, -1]
    out = []
    for pi in portfolios:
        pi = np.asarray(pi, float)
        analytic = T * rel_rate(triplet, pi, rho)
        diff = log_wealth(paths, pi)[:, -1] - lr
        mean = float(diff.mean())
        se = float(diff.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
        out.append(
            {
                "pi": pi.tolist(),
                "analytic": analytic,
                "logMean": mean,
                "standardError": se,
                "jensenOk": analytic >= mean - 3 * se,
                "nonPositive": analytic <= tol and mean <= 3 * se + tol,
            }
        )
    return out
