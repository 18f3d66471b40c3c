"""Esscher-type measure changes, supermartingale measures and completeness.

Under ``Q^(eta, g)`` with density ``exp(-eta'X_t - sum g(dX) - t psi)`` the
log-price stays Lévy: the Gaussian part is unchanged, jumps are reweighted by
``exp(-eta'x - g(x))`` and the drift shifts accordingly.  ``g`` is either zero
or the quadratic tail ``(|x|^2 - 1) 1{|x| > 1}`` used to lighten heavy tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .constraints import (
    Box,
    ConstraintSet,
    FullSpace,
    _polyhedron_vertices,
    check_null_in_constraints,
    dykstra,
    kernel_basis,
    natural_constraints,
    null_space,
    sample_points,
)
from .errors import (
    ConstrainedMarket,
    ConvergenceFailure,
    IntegrabilityFailure,
    NoEsmm,
    QuadratureDivergence,
    TiltNotIntegrable,
    UndecidableTail,
)
from .levy_core import (
    BOUNDED,
    ZERO,
    Atom,
    Growth,
    JumpMeasure,
    LevyTriplet,
    integrate,
    mean_rate,
    quadratic_tail,
    small_jump_mean,
)

G_TAGS = {"zero": 0.0, "quadraticTail": 1.0}


def _g_weight(g_tag: str) -> float:
    try:
        return G_TAGS[g_tag]
    except KeyError:
        raise ValueError(f"unknown g tag {g_tag!r}; expected one of {sorted(G_TAGS)}") from None


def _inner(x):
    return np.einsum("ij,ij->i", x, x) <= 1.0


def check_tilt_integrable(nu: JumpMeasure, eta, g_tag: str = "zero") -> None:
    """Raise TiltNotIntegrable unless ``int exp(-eta'x - g(x)) 1{|x|>1} nu(dx)`` is finite."""
    eta = np.asarray(eta, float)
    w = _g_weight(g_tag)
    bad = []
    for i, seg in enumerate(nu.densities):
        for u in seg.tail_directions():
            if not seg.tilted(eta, w).tail_growth(u).integrable_at_infinity():
                bad.append({"segment": i, "direction": u.tolist()})
    if bad:
        raise TiltNotIntegrable(f"exp(-eta'x - g(x)) is not nu-integrable at infinity: {bad}")


def psi(triplet: LevyTriplet, eta, g_tag: str = "zero") -> complex | float:
    """Normalizing rate ``psi(eta, g)`` making the Esscher density a martingale.

    Complex ``eta`` is accepted for purely atomic jump measures (used for the
    cumulant-shift identity).
    """
    eta = np.asarray(eta).reshape(triplet.dim)
    w = _g_weight(g_tag)
    nu = triplet.nu
    gauss = -eta @ triplet.b + 0.5 * eta @ triplet.c @ eta
    if np.iscomplexobj(eta):
        if nu.densities:
            raise ValueError("complex eta is supported only for atomic jump measures")
        x, r = nu.atom_array(triplet.dim)
        if not len(x):
            return complex(gauss)
        ex = x @ eta
        vals = np.expm1(-ex - w * quadratic_tail(x)) + np.where(_inner(x), ex, 0.0)
        return complex(gauss + np.sum(r * vals))
    eta = eta.astype(float)
    if nu.is_zero:
        return float(gauss)
    check_tilt_integrable(nu, eta, g_tag)

    def f(x):
        ex = x @ eta
        with np.errstate(over="ignore"):
            return np.expm1(-ex - w * quadratic_tail(x)) + np.where(_inner(x), ex, 0.0)

    def tail(u):
        a = -float(eta @ u)
        return Growth(a=a) if (w == 0.0 and a > 0) else BOUNDED

    return float(gauss + integrate(nu, f, tail=tail, origin=Growth(k=2.0)))


@dataclass(frozen=True)
class EsscherParams:
    eta: tuple[float, ...]
    g_tag: str
    psi: float

    def to_json(self) -> dict:
        return {"eta": list(self.eta), "gTag": self.g_tag, "psi": self.psi}


def esscher_params(triplet: LevyTriplet, eta, g_tag: str = "zero") -> EsscherParams:
    eta = np.asarray(eta, float).reshape(triplet.dim)
    return EsscherParams(tuple(float(v) for v in eta), g_tag, psi(triplet, eta, g_tag))


@dataclass(frozen=True, eq=False)
class TransformedTriplet:
    triplet: LevyTriplet
    source: LevyTriplet
    params: EsscherParams

    def to_json(self) -> dict:
        out = self.triplet.to_json()
        out["provenance"] = {"source": self.source.to_json(), "esscher": self.params.to_json()}
        return out


def transform_triplet(triplet: LevyTriplet, params: EsscherParams) -> TransformedTriplet:
    """Lévy triplet of ``X`` under ``Q^(eta, g)``."""
    eta = np.asarray(params.eta, float).reshape(triplet.dim)
    w = _g_weight(params.g_tag)
    nu = triplet.nu
    check_tilt_integrable(nu, eta, params.g_tag)
    atoms = []
    for a in nu.atoms:
        x = np.asarray(a.x)
        rate = a.rate * math.exp(-float(eta @ x) - w * float(quadratic_tail(x[None, :])[0]))
        if rate > 0.0:
            atoms.append(Atom(a.x, rate))
    dens = tuple(seg.tilted(eta, w) for seg in nu.densities)
    b = triplet.b - triplet.c @ eta
    if np.any(eta) and not nu.is_zero:
        shift = np.zeros(triplet.dim)
        for j in range(triplet.dim):
            # g vanishes on the unit ball, so only the linear tilt enters here
            shift[j] = integrate(
                nu,
                lambda x, j=j: np.where(_inner(x), np.expm1(-(x @ eta)) * x[:, j], 0.0),
                tail=ZERO,
                origin=Growth(k=2.0),
            )
        b = b + shift
    out = LevyTriplet(b, triplet.c.copy(), JumpMeasure(tuple(atoms), dens))
    return TransformedTriplet(out, triplet, params)


def lighten(triplet: LevyTriplet) -> LevyTriplet:
    """Quadratic-tail lightening: a triplet with every exponential moment finite."""
    return transform_triplet(triplet, esscher_params(triplet, np.zeros(triplet.dim), "quadraticTail")).triplet


# --------------------------------------------------------------------------
# supermartingale drift condition


class SupermartingaleCheck(NamedTuple):
    holds: bool
    direction: np.ndarray | None
    value: float


def _tail_drift(triplet: LevyTriplet, p: np.ndarray) -> float:
    """``p'b + int p'x 1{|x|>1} nu(dx)``, possibly infinite."""
    val = float(p @ triplet.b)
    if triplet.nu.is_zero or not np.any(p):
        return val

    def tail(u):
        s = float(np.sign(p @ u))
        return Growth(sign=s, k=1.0) if s else ZERO

    return val + integrate(triplet.nu, lambda x: np.where(_inner(x), 0.0, x @ p), tail=tail, origin=ZERO)


def _check_points(triplet: LevyTriplet, C: ConstraintSet, n_sample: int) -> np.ndarray:
    d = triplet.dim
    C0 = natural_constraints(triplet.nu, d)
    box_A = np.vstack([np.eye(d), -np.eye(d)])
    box_a = np.ones(2 * d)
    H = C.halfspaces()
    if H is not None:
        A = np.vstack([H[0], C0.A, box_A])
        a = np.concatenate([H[1], C0.a, box_a])
        return _polyhedron_vertices(A, a)
    cube = Box(-np.ones(d), np.ones(d))
    raw = sample_points(FullSpace(d), n_sample, 1.0)
    pts = [dykstra([C.project, C0.project, cube.project], p, tol=1e-12) for p in raw]
    return np.vstack([np.zeros(d)] + pts)


def is_supermartingale_measure(
    triplet: LevyTriplet, C: ConstraintSet, tol: float = 1e-10, n_sample: int = 512
) -> SupermartingaleCheck:
    """Drift condition ``p'b + int p'x 1{|x|>1} nu <= 0`` on ``C ∩ C_0 ∩ [-1, 1]^d``.

    The functional is linear, so the vertices of the (polyhedral) check set
    suffice; curved sets are covered by a deterministic sample.
    """
    best, arg = -math.inf, None
    for p in _check_points(triplet, C, n_sample):
        try:
            v = _tail_drift(triplet, p)
        except QuadratureDivergence as exc:
            raise UndecidableTail(f"drift functional undecidable at p={p.tolist()}: {exc}") from exc
        if v > best:
            best, arg = v, p
    if best > tol:
        return SupermartingaleCheck(False, arg, best)
    return SupermartingaleCheck(True, None, max(best, 0.0))


def classify_measure(triplet: LevyTriplet, C: ConstraintSet, tol: float = 1e-8) -> str:
    """"EMM" when the mean rate vanishes, "ESMM" when only the drift condition holds, else "none"."""
    try:
        m = mean_rate(triplet)
    except IntegrabilityFailure:
        m = None
    if m is not None and np.all(np.abs(m) <= tol):
        return "EMM"
    return "ESMM" if is_supermartingale_measure(triplet, C, tol=tol).holds else "none"


# --------------------------------------------------------------------------
# ESMM construction


@dataclass(frozen=True, eq=False)
class EsmmResult:
    params: EsscherParams
    transformed: TransformedTriplet
    classification: str
    iterations: int

    def to_json(self) -> dict:
        return {
            "esscher": self.params.to_json(),
            "classification": self.classification,
            "isEMM": self.classification == "EMM",
            "isESMM": self.classification in ("EMM", "ESMM"),
            "iterations": self.iterations,
            "transformed": self.transformed.to_json(),
        }


def find_esmm(
    triplet: LevyTriplet,
    cone: ConstraintSet,
    horizon: float = 1.0,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    check_tol: float = 1e-8,
) -> EsmmResult:
    """Equivalent supermartingale measure of Esscher type for a cone-constrained market.

    Maximizes the exponential utility ``1 - E exp(-p'X_T)`` of the lightened
    market; the optimal ``p`` is the tilt.  The maximizer does not depend on the
    horizon, which only scales the utility.
    """
    from .arbitrage import find_immediate_arbitrage
    from .numeraire import projected_gradient_ascent

    if not cone.is_cone:
        raise ValueError("find_esmm needs a cone constraint")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    d = triplet.dim
    nb = null_space(triplet)
    check_null_in_constraints(cone, nb)
    cert = find_immediate_arbitrage(triplet, cone, nb)
    if cert.found:
        raise NoEsmm(cert)
    if is_supermartingale_measure(triplet, cone).holds:
        params = EsscherParams(tuple([0.0] * d), "zero", 0.0)
        tt = transform_triplet(triplet, params)
        return EsmmResult(params, tt, classify_measure(tt.triplet, cone, check_tol), 0)

    work = lighten(triplet)

    def grad(p):
        return mean_rate(transform_triplet(work, EsscherParams(tuple(p), "zero", 0.0)).triplet)

    def delta(y, x):
        return psi(work, x) - psi(work, y)

    def project(p):
        return nb.project_out(cone.project(p))

    out = projected_gradient_ascent(delta, grad, project, np.zeros(d), tol=tol, max_iter=max_iter)
    if not out.converged:
        raise ConvergenceFailure(f"exponential-utility ascent stalled (residual {out.residual:.3g})")
    params = esscher_params(triplet, out.x, "quadraticTail")
    tt = transform_triplet(triplet, params)
    check = is_supermartingale_measure(tt.triplet, cone, tol=check_tol)
    if not check.holds:
        raise ConvergenceFailure(f"transformed market violates the drift condition by {check.value:.3g}")
    return EsmmResult(params, tt, classify_measure(tt.triplet, cone, check_tol), out.iterations)


# --------------------------------------------------------------------------
# completeness


@dataclass(frozen=True)
class CompletenessVerdict:
    complete: bool
    reason: str | None
    kernel_dim: int

    def to_json(self) -> dict:
        return {"complete": self.complete, "reason": self.reason, "kernelDim": self.kernel_dim}


def check_completeness(triplet: LevyTriplet, C: ConstraintSet | None = None, tol: float = 1e-9) -> CompletenessVerdict:
    """Completeness of the unconstrained exponential Lévy model.

    Conditions checked in order: atomic support, support inside ``K = ker c``,
    at most ``dim K`` jump points, and no one-sided direction in ``K``.
    """
    if C is not None and not isinstance(C, FullSpace):
        raise ConstrainedMarket("completeness is decided for unconstrained markets only")
    d = triplet.dim
    K = kernel_basis(triplet.c)
    k = K.shape[0]
    nu = triplet.nu
    if nu.densities:
        return CompletenessVerdict(False, "infiniteSupport", k)
    x, _ = nu.atom_array(d)
    if len(x):
        resid = x - (x @ K.T) @ K if k else x
        if np.any(np.linalg.norm(resid, axis=1) > tol * max(1.0, float(np.abs(x).max()))):
            return CompletenessVerdict(False, "supportNotInKernel", k)
    if len(x) > k:
        return CompletenessVerdict(False, "tooManyJumpPoints", k)
    if k == 0:
        return CompletenessVerdict(True, None, 0)
    # drift of the projection on K, then look for xi in K one-sided on {a} ∪ supp(nu)
    a = K @ (triplet.b - small_jump_mean(nu, d))
    V = np.vstack([a[None, :], x @ K.T]) if len(x) else a[None, :]
    V = V[np.linalg.norm(V, axis=1) > 0]
    if len(V):
        res = linprog(-V.sum(axis=0), A_ub=-V, b_ub=np.zeros(len(V)), bounds=[(-1, 1)] * k, method="highs")
        if res.status == 0 and -res.fun > tol:
            return CompletenessVerdict(False, "oneSidedDirectionInKernel", k)
    return CompletenessVerdict(True, None, k)
