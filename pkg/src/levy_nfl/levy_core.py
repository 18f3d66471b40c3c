"""Lévy triplets, jump measures and the quadrature kernel behind every ν-integral.

A jump measure is a finite list of atoms plus density segments drawn from a
small catalog.  Each segment lives on a 1-d parameter (an interval of the real
line, or the distance along a ray) or on a bounded box, so that every integral
splits into panels with breakpoints at the origin and at ``|x| = 1``.  Tail
panels are integrated after the substitution ``s = exp(t)``, and whether a tail
(or a singular origin panel) converges is decided *before* any numerics from
the asymptotic profile of integrand times density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate as spi

from .errors import IntegrabilityFailure, InvalidTriplet, QuadratureDivergence

# --------------------------------------------------------------------------
# asymptotic profiles


@dataclass(frozen=True)
class Growth:
    """Profile ``sign * r**k * log(r)**m * exp(a*r + q*r**2)``.

    Used for ``r -> inf`` (all fields) and for ``r -> 0`` (only ``sign`` and
    ``k``).  ``sign = 0`` marks an integrand that vanishes identically there.
    """

    sign: float = 1.0
    k: float = 0.0
    m: float = 0.0
    a: float = 0.0
    q: float = 0.0

    def __mul__(self, other: "Growth") -> "Growth":
        return Growth(
            self.sign * other.sign,
            self.k + other.k,
            self.m + other.m,
            self.a + other.a,
            self.q + other.q,
        )

    def integrable_at_infinity(self) -> bool:
        if self.sign == 0:
            return True
        if self.q != 0:
            return self.q < 0
        if self.a != 0:
            return self.a < 0
        if self.k != -1:
            return self.k < -1
        return self.m < -1

    def integrable_at_zero(self) -> bool:
        return self.sign == 0 or self.k > -1


BOUNDED = Growth()
ZERO = Growth(sign=0.0)

GrowthSpec = Union[Growth, Callable[[np.ndarray], Growth]]


def _as_growth_fn(spec: GrowthSpec) -> Callable[[np.ndarray], Growth]:
    if isinstance(spec, Growth):
        return lambda u, _g=spec: _g
    return spec


_WEIGHT_CLASSES = {
    # weightClass -> (tail profile, origin profile)
    "bounded": (BOUNDED, BOUNDED),
    "quadraticNearZero": (BOUNDED, Growth(k=2.0)),
    "logTail": (Growth(m=1.0), BOUNDED),
}


@dataclass(frozen=True)
class QuadConfig:
    epsabs: float = 1e-10
    epsrel: float = 1e-8
    limit: int = 200
    # an estimate is rejected when its error bound exceeds both of these
    accept_abs: float = 1e-7
    accept_rel: float = 1e-6


DEFAULT_QUAD = QuadConfig()

# --------------------------------------------------------------------------
# support regions


@dataclass(frozen=True)
class Interval:
    """1-d interval; the parameter is ``x`` itself."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    dim = 1

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidTriplet(f"empty interval ({self.lo}, {self.hi})")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def point(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(s, dtype=float)[:, None]

    def touches_origin(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def vrep(self) -> tuple[np.ndarray, np.ndarray]:
        pts = [[v] for v in (self.lo, self.hi) if math.isfinite(v)]
        rays = []
        if self.hi == math.inf:
            rays.append([1.0])
        if self.lo == -math.inf:
            rays.append([-1.0])
        return np.array(pts, dtype=float).reshape(-1, 1), np.array(rays, dtype=float).reshape(-1, 1)

    def panels(self) -> list[tuple[float, float]]:
        cuts = [self.lo] + [v for v in (-1.0, 0.0, 1.0) if self.lo < v < self.hi] + [self.hi]
        return list(zip(cuts[:-1], cuts[1:]))

    def to_json(self) -> dict:
        return {
            "type": "interval",
            "lo": _num_out(self.lo),
            "hi": _num_out(self.hi),
            "loClosed": self.lo_closed,
            "hiClosed": self.hi_closed,
        }


@dataclass(frozen=True)
class HalfLine:
    """Ray ``{t * direction : t >= offset}``; the parameter is ``t``."""

    direction: tuple[float, ...]
    offset: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=float)
        n = float(np.linalg.norm(u))
        if n == 0.0 or self.offset < 0:
            raise InvalidTriplet("halfLine needs a nonzero direction and offset >= 0")
        object.__setattr__(self, "direction", tuple(float(v) for v in u / n))

    @property
    def dim(self) -> int:
        return len(self.direction)

    bounded = False

    def point(self, t: np.ndarray) -> np.ndarray:
        return np.asarray(t, dtype=float)[:, None] * np.asarray(self.direction)[None, :]

    def touches_origin(self) -> bool:
        return self.offset == 0.0

    def vrep(self):
        u = np.asarray(self.direction)
        return (self.offset * u)[None, :], u[None, :]

    def panels(self):
        cuts = [self.offset] + ([1.0] if self.offset < 1.0 else []) + [math.inf]
        return list(zip(cuts[:-1], cuts[1:]))

    def to_json(self) -> dict:
        return {"type": "halfLine", "direction": list(self.direction), "offset": self.offset}


@dataclass(frozen=True)
class BoxRegion:
    """Bounded box ``prod [lo_i, hi_i]`` carrying a product density."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != hi.shape or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise InvalidTriplet("box bounds must be finite and of equal length")
        if np.any(lo >= hi):
            raise InvalidTriplet("box must have positive width in every coordinate")

    @property
    def dim(self) -> int:
        return len(self.lo)

    bounded = True

    def touches_origin(self) -> bool:
        return all(a <= 0.0 <= b for a, b in zip(self.lo, self.hi))

    def vrep(self):
        d = self.dim
        corners = np.array(
            [[self.hi[i] if (mask >> i) & 1 else self.lo[i] for i in range(d)] for mask in range(2**d)]
        )
        return corners, np.zeros((0, d))

    def to_json(self) -> dict:
        return {"type": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class AtomCloud:
    """Finite point set; the support descriptor of the atomic part."""

    vertices: tuple[tuple[float, ...], ...]

    def vrep(self):
        v = np.array(self.vertices, dtype=float)
        return v, np.zeros((0, v.shape[1] if v.ndim == 2 else 0))


SupportRegion = Union[Interval, HalfLine, BoxRegion, AtomCloud]

# --------------------------------------------------------------------------
# density families (functions of the segment parameter)


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[float, ...]
    name = "polynomialOnInterval"
    origin_k = 0.0

    def pdf(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s, float), self.coeffs)

    def tail(self) -> Growth:
        raise InvalidTriplet("polynomial densities need a bounded support")

    def params(self) -> dict:
        return {"coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class PowerLaw:
    """``scale * |s|**(-p)``."""

    p: float
    scale: float = 1.0
    name = "powerLawTail"

    @property
    def origin_k(self) -> float:
        return -self.p

    def pdf(self, s):
        return self.scale * np.abs(np.asarray(s, float)) ** (-self.p)

    def log_spdf(self, t):
        """``log(|s| * pdf(s))`` at ``|s| = exp(t)``."""
        return math.log(self.scale) + (1.0 - self.p) * t

    def tail(self) -> Growth:
        return Growth(k=-self.p)

    def params(self) -> dict:
        return {"p": self.p, "scale": self.scale}


@dataclass(frozen=True)
class PowerLog:
    """``scale * |s|**(-1) * log(1 + |s|)**(-q)``."""

    q: float
    scale: float = 1.0
    name = "powerLogTail"

    @property
    def origin_k(self) -> float:
        return -1.0 - self.q

    def pdf(self, s):
        a = np.abs(np.asarray(s, float))
        return self.scale / a * np.log1p(a) ** (-self.q)

    def log_spdf(self, t):
        return math.log(self.scale) - self.q * np.log(np.logaddexp(0.0, t))

    def tail(self) -> Growth:
        return Growth(k=-1.0, m=-self.q)

    def params(self) -> dict:
        return {"q": self.q, "scale": self.scale}


@dataclass(frozen=True)
class Product:
    """Product of polynomial factors, one per coordinate, on a box."""

    factors: tuple[Polynomial, ...]
    name = "product"
    origin_k = 0.0

    def pdf_points(self, x: np.ndarray) -> np.ndarray:
        out = np.ones(x.shape[0])
        for i, f in enumerate(self.factors):
            out = out * f.pdf(x[:, i])
        return out

    def params(self) -> dict:
        return {"factors": [{"family": f.name, "params": f.params()} for f in self.factors]}


Family = Union[Polynomial, PowerLaw, PowerLog, Product]


def quadratic_tail(x: np.ndarray) -> np.ndarray:
    """``g(x) = |x|^2 - 1`` outside the unit ball, 0 inside."""
    r2 = np.einsum("ij,ij->i", x, x)
    return np.where(r2 > 1.0, r2 - 1.0, 0.0)


@dataclass(frozen=True)
class DensitySegment:
    """One catalog density with optional tilt ``exp(-eta.x - w g(x))`` and damping.

    ``damp = a`` multiplies the density by ``|x|**(-a)`` outside the unit ball.
    """

    family: Family
    support: Union[Interval, HalfLine, BoxRegion]
    tilt: tuple[float, ...] | None = None
    g_weight: float = 0.0
    damp: float = 0.0
    quadrature_hint: int = 200

    @property
    def dim(self) -> int:
        return self.support.dim

    # -- pointwise ---------------------------------------------------------

    def point(self, s: np.ndarray) -> np.ndarray:
        return self.support.point(s)

    def modifier(self, x: np.ndarray) -> np.ndarray:
        out = np.ones(x.shape[0])
        if self.tilt is None and self.g_weight == 0.0 and self.damp == 0.0:
            return out
        r2 = np.einsum("ij,ij->i", x, x)
        expo = np.zeros(x.shape[0])
        if self.tilt is not None:
            expo -= x @ np.asarray(self.tilt)
        if self.g_weight != 0.0:
            expo -= self.g_weight * np.where(r2 > 1.0, r2 - 1.0, 0.0)
        if self.damp != 0.0:
            with np.errstate(divide="ignore"):
                expo -= np.where(r2 > 1.0, 0.5 * self.damp * np.log(r2), 0.0)
        with np.errstate(over="ignore"):
            return np.exp(expo)

    def density_at(self, x: np.ndarray) -> np.ndarray:
        """Density value at points ``x`` assumed to lie in the support."""
        x = np.atleast_2d(np.asarray(x, float))
        if isinstance(self.support, BoxRegion):
            base = self.family.pdf_points(x)
        elif isinstance(self.support, Interval):
            base = self.family.pdf(x[:, 0])
        else:
            base = self.family.pdf(x @ np.asarray(self.support.direction))
        return base * self.modifier(x)

    def weight(self, s: np.ndarray) -> np.ndarray:
        """Density in the parameter ``s`` (unit Jacobian for our parametrizations)."""
        return self.family.pdf(s) * self.modifier(self.point(s))

    def tail_log_weight(self, t: np.ndarray, u: np.ndarray) -> np.ndarray:
        """``log(|s| * weight(s))`` at ``|s| = exp(t)`` along the unit direction ``u``."""
        t = np.asarray(t, float)
        out = self.family.log_spdf(t) - self.damp * t
        if self.tilt is not None or self.g_weight != 0.0:
            e = np.exp(np.minimum(t, 690.0))
            with np.errstate(over="ignore"):
                if self.tilt is not None:
                    out = out - float(np.dot(self.tilt, u)) * e
                if self.g_weight != 0.0:
                    out = out - self.g_weight * (e * e - 1.0)
        return out

    # -- asymptotics -------------------------------------------------------

    def tail_growth(self, u: np.ndarray) -> Growth:
        g = self.family.tail() * Growth(k=-self.damp, q=-self.g_weight)
        if self.tilt is not None:
            g = g * Growth(a=-float(np.dot(self.tilt, u)))
        return g

    def origin_exponent(self) -> float | None:
        """Power ``k`` with density ~ ``r**k`` at the origin, or None if the origin is not adjacent."""
        if not self.support.touches_origin():
            return None
        return float(self.family.origin_k)

    def infinite_activity(self) -> bool:
        k = self.origin_exponent()
        return k is not None and k <= -1.0

    def infinite_variation(self) -> bool:
        k = self.origin_exponent()
        return k is not None and k <= -2.0

    def tail_directions(self) -> list[np.ndarray]:
        sup = self.support
        if isinstance(sup, HalfLine):
            return [np.asarray(sup.direction)]
        if isinstance(sup, Interval):
            out = []
            if sup.hi == math.inf:
                out.append(np.array([1.0]))
            if sup.lo == -math.inf:
                out.append(np.array([-1.0]))
            return out
        return []

    def vrep(self):
        return self.support.vrep()

    # -- transformations ---------------------------------------------------

    def tilted(self, eta: np.ndarray, g_weight: float) -> "DensitySegment":
        eta = np.asarray(eta, float)
        new = eta if self.tilt is None else np.asarray(self.tilt) + eta
        tilt = None if not np.any(new) else tuple(float(v) for v in new)
        return replace(self, tilt=tilt, g_weight=self.g_weight + g_weight)

    def restricted(self, support) -> "DensitySegment":
        return replace(self, support=support)


@dataclass(frozen=True)
class Atom:
    x: tuple[float, ...]
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise InvalidTriplet(f"atom rate must be positive and finite, got {self.rate}")
        if not all(math.isfinite(v) for v in self.x):
            raise InvalidTriplet("atom location must be finite")
        if all(v == 0.0 for v in self.x):
            raise InvalidTriplet("atom at the origin")


@dataclass(frozen=True)
class JumpMeasure:
    atoms: tuple[Atom, ...] = ()
    densities: tuple[DensitySegment, ...] = ()

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.densities

    @property
    def is_atomic(self) -> bool:
        return not self.densities

    def atom_array(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        if not self.atoms:
            return np.zeros((0, dim)), np.zeros(0)
        return np.array([a.x for a in self.atoms], float), np.array([a.rate for a in self.atoms], float)

    def support_vrep(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Points and rays whose conic/convex combinations cover the support closure."""
        pts, _ = self.atom_array(dim)
        points = [pts]
        rays = [np.zeros((0, dim))]
        for seg in self.densities:
            p, r = seg.vrep()
            points.append(p)
            rays.append(r)
        return np.vstack(points), np.vstack(rays)

    def support_region(self, dim: int) -> list:
        out: list = []
        if self.atoms:
            out.append(AtomCloud(tuple(a.x for a in self.atoms)))
        out.extend(seg.support for seg in self.densities)
        return out

    def scaled(self, factor: float) -> "JumpMeasure":
        atoms = tuple(Atom(a.x, a.rate * factor) for a in self.atoms)
        dens = tuple(replace(s, family=_scale_family(s.family, factor)) for s in self.densities)
        return JumpMeasure(atoms, dens)


def _scale_family(f: Family, factor: float) -> Family:
    if isinstance(f, Polynomial):
        return Polynomial(tuple(c * factor for c in f.coeffs))
    if isinstance(f, Product):
        return Product((_scale_family(f.factors[0], factor),) + f.factors[1:])
    return replace(f, scale=f.scale * factor)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """Drift ``b`` (truncation ``|x| <= 1``), covariance ``c`` and jump measure ``nu``."""

    b: np.ndarray
    c: np.ndarray
    nu: JumpMeasure = field(default_factory=JumpMeasure)

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, float))
        d = b.size
        c = np.asarray(self.c, float).reshape(d, d) if np.size(self.c) == d * d else None
        if b.ndim != 1 or c is None:
            raise InvalidTriplet("b must be a vector and c a dim x dim matrix")
        scale = max(1.0, float(np.abs(c).max(initial=0.0)))
        if np.abs(c - c.T).max(initial=0.0) > 1e-12 * scale:
            raise InvalidTriplet("c must be symmetric")
        if d and np.linalg.eigvalsh(c).min() < -1e-12 * scale:
            raise InvalidTriplet("c must be positive semidefinite")
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "c", _readonly(0.5 * (c + c.T)))
        for a in self.nu.atoms:
            if len(a.x) != d:
                raise InvalidTriplet("atom dimension mismatch")
        for seg in self.nu.densities:
            _validate_segment(seg, d)

    @property
    def dim(self) -> int:
        return self.b.size

    def combine(self, other: "LevyTriplet") -> "LevyTriplet":
        """Triplet of the sum of independent processes (components add)."""
        return LevyTriplet(
            self.b + other.b,
            self.c + other.c,
            JumpMeasure(self.nu.atoms + other.nu.atoms, self.nu.densities + other.nu.densities),
        )

    def scaled(self, factor: float) -> "LevyTriplet":
        """Time change ``t -> factor * t``."""
        return LevyTriplet(self.b * factor, self.c * factor, self.nu.scaled(factor))

    def to_json(self) -> dict:
        return {
            "dimension": self.dim,
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "nu": {
                "atoms": [{"x": list(a.x), "rate": a.rate} for a in self.nu.atoms],
                "densities": [segment_to_json(s) for s in self.nu.densities],
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LevyTriplet":
        d = int(obj["dimension"])
        nu = obj.get("nu", {})
        atoms = tuple(Atom(tuple(float(v) for v in a["x"]), float(a["rate"])) for a in nu.get("atoms", []))
        dens = tuple(segment_from_json(s, d) for s in nu.get("densities", []))
        b = np.asarray(obj["b"], float)
        c = np.asarray(obj["c"], float)
        if b.shape != (d,) or c.shape != (d, d):
            raise InvalidTriplet("b/c shape does not match dimension")
        return cls(b, c, JumpMeasure(atoms, dens))


def _validate_segment(seg: DensitySegment, d: int) -> None:
    if seg.dim != d:
        raise InvalidTriplet("density segment dimension mismatch")
    sup, fam = seg.support, seg.family
    if isinstance(sup, BoxRegion) != isinstance(fam, Product):
        raise InvalidTriplet("product densities live exactly on boxes")
    if isinstance(sup, Interval) and d != 1:
        raise InvalidTriplet("interval supports are one-dimensional")
    if isinstance(fam, Polynomial) and not sup.bounded:
        raise InvalidTriplet("polynomial density on an unbounded support")
    if isinstance(fam, Product):
        if len(fam.factors) != d:
            raise InvalidTriplet("one factor per coordinate")
        for f, a, b in zip(fam.factors, sup.lo, sup.hi):
            _check_nonneg_poly(f, a, b)
    elif isinstance(fam, Polynomial):
        _check_nonneg_poly(fam, sup.lo, sup.hi)
    else:
        if fam.scale <= 0:
            raise InvalidTriplet("density scale must be positive")
    if seg.g_weight < 0 or seg.damp < 0:
        raise InvalidTriplet("tilt weight and damping must be nonnegative")
    k0 = seg.origin_exponent()
    if k0 is not None and not (Growth(k=2.0) * Growth(k=k0)).integrable_at_zero():
        raise InvalidTriplet("density is not a Lévy measure near the origin")
    for u in seg.tail_directions():
        if not seg.tail_growth(u).integrable_at_infinity():
            raise InvalidTriplet("density has infinite mass at infinity")


def _check_nonneg_poly(f: Polynomial, lo: float, hi: float) -> None:
    grid = np.linspace(lo, hi, 401)
    crit = [r.real for r in np.roots(np.polynomial.polynomial.polyder(f.coeffs)[::-1]) if abs(r.imag) < 1e-12]
    pts = np.concatenate([grid, [r for r in crit if lo <= r <= hi]])
    if np.min(f.pdf(pts)) < -1e-12:
        raise InvalidTriplet("polynomial density is negative on its support")


# --------------------------------------------------------------------------
# JSON for density segments


def _num_in(v):
    if v is None:
        raise InvalidTriplet("missing number")
    if isinstance(v, str):
        return {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}[v]
    return float(v)


def _num_out(v: float):
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return v


def _family_from_json(name: str, params: dict) -> tuple[Family, dict]:
    """Return the base family and accumulated modifiers ``{eta, g, damp}``."""
    if name == "polynomialOnInterval":
        return Polynomial(tuple(float(c) for c in params["coeffs"])), {}
    if name == "powerLawTail":
        return PowerLaw(float(params["p"]), float(params.get("scale", 1.0))), {}
    if name == "powerLogTail":
        return PowerLog(float(params["q"]), float(params.get("scale", 1.0))), {}
    if name == "product":
        facs = []
        for f in params["factors"]:
            fam, mods = _family_from_json(f["family"], f.get("params", {}))
            if not isinstance(fam, Polynomial) or mods:
                raise InvalidTriplet("product factors must be plain polynomials")
            facs.append(fam)
        return Product(tuple(facs)), {}
    if name in ("exponentialTilt", "logDamped"):
        base = params["base"]
        fam, mods = _family_from_json(base["family"], base.get("params", {}))
        mods = dict(mods)
        if name == "exponentialTilt":
            eta = np.asarray(params.get("eta", []), float)
            if eta.size:
                mods["eta"] = mods.get("eta", 0.0) + eta
            g = params.get("g", 0.0)
            gw = {"zero": 0.0, "quadraticTail": 1.0}.get(g, g) if isinstance(g, str) else float(g)
            mods["g"] = mods.get("g", 0.0) + gw
        else:
            mods["damp"] = mods.get("damp", 0.0) + float(params["alpha"])
        return fam, mods
    raise InvalidTriplet(f"unknown density family {name!r}")


def segment_from_json(obj: dict, dim: int) -> DensitySegment:
    fam, mods = _family_from_json(obj["family"], obj.get("params", {}))
    s = obj["support"]
    kind = s["type"]
    if kind == "interval":
        sup = Interval(_num_in(s["lo"]), _num_in(s["hi"]), bool(s.get("loClosed", True)), bool(s.get("hiClosed", True)))
    elif kind == "halfLine":
        sup = HalfLine(tuple(float(v) for v in s["direction"]), float(s.get("offset", 0.0)))
    elif kind == "box":
        sup = BoxRegion(tuple(float(v) for v in s["lo"]), tuple(float(v) for v in s["hi"]))
    else:
        raise InvalidTriplet(f"unsupported density support {kind!r}")
    eta = mods.get("eta")
    tilt = None if eta is None or not np.any(eta) else tuple(float(v) for v in np.atleast_1d(eta))
    if tilt is not None and len(tilt) != dim:
        raise InvalidTriplet("tilt dimension mismatch")
    return DensitySegment(
        fam,
        sup,
        tilt=tilt,
        g_weight=float(mods.get("g", 0.0)),
        damp=float(mods.get("damp", 0.0)),
        quadrature_hint=int(obj.get("quadratureHint", 200)),
    )


def segment_to_json(seg: DensitySegment) -> dict:
    fam = {"family": seg.family.name, "params": seg.family.params()}
    if seg.damp:
        fam = {"family": "logDamped", "params": {"base": fam, "alpha": seg.damp}}
    if seg.tilt is not None or seg.g_weight:
        fam = {
            "family": "exponentialTilt",
            "params": {"base": fam, "eta": list(seg.tilt or [0.0] * seg.dim), "g": seg.g_weight},
        }
    return {**fam, "support": seg.support.to_json(), "quadratureHint": seg.quadrature_hint}


# --------------------------------------------------------------------------
# quadrature kernel


def _quad(h: Callable[[float], float], a: float, b: float, cfg: QuadConfig, limit: int) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spi.IntegrationWarning)
        res = spi.quad(h, a, b, epsabs=cfg.epsabs, epsrel=cfg.epsrel, limit=limit, full_output=1)
    val, err = float(res[0]), float(res[1])
    if not math.isfinite(val) or err > max(cfg.accept_abs, cfg.accept_rel * abs(val)):
        raise QuadratureDivergence(f"quadrature on [{a}, {b}] did not settle: value {val}, error {err}")
    return val


def _scalarize(fun: Callable[[np.ndarray], np.ndarray]) -> Callable[[float], float]:
    def h(s: float) -> float:
        v = float(fun(np.array([s]))[0])
        return 0.0 if math.isnan(v) else v

    return h


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _integrate_box(seg: DensitySegment, F, cfg: QuadConfig) -> float:
    sup: BoxRegion = seg.support
    n = min(max(seg.quadrature_hint // 8, 8), 40)
    xg, wg = _gauss_legendre(n)
    cuts = []
    for lo, hi in zip(sup.lo, sup.hi):
        cuts.append([lo] + [v for v in (-1.0, 0.0, 1.0) if lo < v < hi] + [hi])
    total = 0.0
    import itertools

    for cell in itertools.product(*[list(zip(c[:-1], c[1:])) for c in cuts]):
        axes, weights = [], []
        for a, b in cell:
            axes.append(0.5 * (b - a) * xg + 0.5 * (a + b))
            weights.append(0.5 * (b - a) * wg)
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, sup.dim)
        w = np.ones(1)
        for wi in weights:
            w = np.multiply.outer(w, wi)
        w = w.reshape(-1)
        vals = np.asarray(F(mesh), dtype=float) * seg.density_at(mesh)
        total += float(np.sum(w * np.nan_to_num(vals)))
    return total


def _integrate_segment(
    seg: DensitySegment, F, tail_fn, origin_fn, cfg: QuadConfig, include_tails: bool = True
) -> list[float]:
    if isinstance(seg.support, BoxRegion):
        return [_integrate_box(seg, F, cfg)]
    sup = seg.support
    limit = max(cfg.limit, seg.quadrature_hint)
    k0 = seg.origin_exponent()
    out = []
    for a, b in sup.panels():
        if isinstance(sup, HalfLine):
            u = np.asarray(sup.direction)
        elif math.isinf(b) or math.isinf(a):
            u = np.array([1.0 if math.isinf(b) else -1.0])
        else:
            u = np.array([1.0 if a + b > 0 else -1.0])
        if k0 is not None and (a == 0.0 or b == 0.0):
            prof = origin_fn(u) * Growth(k=k0)
            if not prof.integrable_at_zero():
                out.append(math.copysign(math.inf, prof.sign))
                continue
        if math.isinf(a) or math.isinf(b):
            if not include_tails:
                continue
            prof = tail_fn(u) * seg.tail_growth(u)
            if not prof.integrable_at_infinity():
                out.append(math.copysign(math.inf, prof.sign))
                continue
            start = b if math.isinf(a) else a
            sgn = -1.0 if math.isinf(a) else 1.0
            t0 = math.log(abs(start))

            def h_tail(t, sgn=sgn, u=u):
                t = np.asarray(t, float)
                s = sgn * np.exp(np.minimum(t, 690.0))
                x = sup.point(s)
                with np.errstate(over="ignore", invalid="ignore"):
                    return np.asarray(F(x), float) * np.exp(seg.tail_log_weight(t, u))

            out.append(_quad(_scalarize(h_tail), t0, math.inf, cfg, limit))
        else:

            def h(s):
                s = np.asarray(s, float)
                with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                    return np.asarray(F(sup.point(s)), float) * seg.weight(s)

            out.append(_quad(_scalarize(h), a, b, cfg, limit))
    return out


def _sum_extended(vals: Sequence[float]) -> float:
    pos = any(v == math.inf for v in vals)
    neg = any(v == -math.inf for v in vals)
    if pos and neg:
        raise QuadratureDivergence("integral has the indeterminate form inf - inf")
    if pos:
        return math.inf
    if neg:
        return -math.inf
    return float(math.fsum(vals))


def integrate(
    nu: JumpMeasure,
    integrand: Callable[[np.ndarray], np.ndarray],
    weight_class: str = "bounded",
    *,
    dim: int | None = None,
    tail: GrowthSpec | None = None,
    origin: GrowthSpec | None = None,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> float:
    """Integrate a real vectorized ``integrand(x: (n, d)) -> (n,)`` against ``nu``.

    ``weight_class`` supplies default asymptotic profiles of the integrand
    (bounded; O(|x|^2) at the origin; logarithmic growth at infinity); pass
    ``tail``/``origin`` to override them.  Divergent panels are detected from
    the profiles and reported as ``+-inf``.
    """
    if weight_class not in _WEIGHT_CLASSES:
        raise ValueError(f"unknown weight class {weight_class!r}")
    dt, do = _WEIGHT_CLASSES[weight_class]
    tail_fn = _as_growth_fn(tail if tail is not None else dt)
    origin_fn = _as_growth_fn(origin if origin is not None else do)
    vals: list[float] = []
    if nu.atoms:
        d = len(nu.atoms[0].x)
        x, r = nu.atom_array(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            fx = np.asarray(integrand(x), float)
        for v, rate in zip(fx, r):
            if math.isnan(v):
                raise QuadratureDivergence("integrand undefined at an atom")
            vals.append(v * rate)
    for seg in nu.densities:
        vals.extend(_integrate_segment(seg, integrand, tail_fn, origin_fn, cfg))
    return _sum_extended(vals)


def integrate_complex(nu: JumpMeasure, integrand, weight_class="bounded", **kw) -> complex:
    re = integrate(nu, lambda x: np.real(integrand(x)), weight_class, **kw)
    im = integrate(nu, lambda x: np.imag(integrand(x)), weight_class, **kw)
    return complex(re, im)


# --------------------------------------------------------------------------
# formulas


def _inner(x: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", x, x) <= 1.0


def char_exponent(triplet: LevyTriplet, u) -> complex:
    """Characteristic exponent, ``E exp(i u.X_t) = exp(t * phi(u))``."""
    u = np.asarray(u, float).reshape(triplet.dim)
    gauss = complex(-0.5 * u @ triplet.c @ u, float(u @ triplet.b))
    if triplet.nu.is_zero or not np.any(u):
        return gauss
    return gauss + _jump_char(triplet.nu, u, DEFAULT_QUAD)


def _jump_char(nu: JumpMeasure, u: np.ndarray, cfg: QuadConfig) -> complex:
    """Jump part of the characteristic exponent.

    Tail panels are oscillatory, so they go to QUADPACK's Fourier rule
    (``weight='cos'/'sin'``) in the original variable instead of the
    log-substituted rule used everywhere else.
    """

    def re(x):
        return np.cos(x @ u) - 1.0

    def im(x):
        ux = x @ u
        return np.sin(ux) - np.where(_inner(x), ux, 0.0)

    atoms_only = JumpMeasure(nu.atoms)
    jr = integrate(atoms_only, re)
    ji = integrate(atoms_only, im)
    re_o, im_o = _as_growth_fn(Growth(sign=-1.0, k=2.0)), _as_growth_fn(Growth(k=3.0))
    vr, vi = [jr], [ji]
    for seg in nu.densities:
        vr.extend(_integrate_segment(seg, re, _as_growth_fn(BOUNDED), re_o, cfg, include_tails=False))
        vi.extend(_integrate_segment(seg, im, _as_growth_fn(BOUNDED), im_o, cfg, include_tails=False))
        for direction in seg.tail_directions():
            start = seg.support.offset if isinstance(seg.support, HalfLine) else 1.0
            start = max(start, 1.0)
            if isinstance(seg.support, Interval):
                start = max(start, seg.support.lo if direction[0] > 0 else -seg.support.hi)
            omega = float(u @ direction)
            c, s_, m = _fourier_tail(seg, direction, start, omega, cfg)
            vr.append(c - m)
            vi.append(s_)
    return complex(_sum_extended(vr), _sum_extended(vi))


def _fourier_tail(seg: DensitySegment, direction: np.ndarray, start: float, omega: float, cfg: QuadConfig):
    """``int w cos(omega s)``, ``int w sin(omega s)`` and ``int w`` over ``s >= start`` along ``direction``."""
    sup = seg.support

    def w(s):
        s = np.atleast_1d(np.asarray(s, float))
        x = s[:, None] * direction[None, :]
        if isinstance(sup, Interval):
            return seg.family.pdf(x[:, 0]) * seg.modifier(x)
        return seg.family.pdf(s) * seg.modifier(x)

    def h_mass(t):
        t = np.asarray(t, float)
        return np.exp(seg.tail_log_weight(t, direction))

    mass = _quad(_scalarize(h_mass), math.log(start), math.inf, cfg, cfg.limit)
    if omega == 0.0:
        return mass, 0.0, mass
    wf = _scalarize(w)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spi.IntegrationWarning)
        rc = spi.quad(wf, start, math.inf, weight="cos", wvar=abs(omega), epsabs=cfg.epsabs, limlst=200, limit=cfg.limit)
        rs = spi.quad(wf, start, math.inf, weight="sin", wvar=abs(omega), epsabs=cfg.epsabs, limlst=200, limit=cfg.limit)
    for val, err in (rc[:2], rs[:2]):
        if not math.isfinite(val) or err > max(cfg.accept_abs, cfg.accept_rel * abs(val)):
            raise QuadratureDivergence(f"oscillatory tail quadrature did not settle (error {err})")
    return float(rc[0]), math.copysign(1.0, omega) * float(rs[0]), mass


def _large_moment_tail(x_component: int):
    def tail(u):
        s = np.sign(u[x_component])
        return Growth(sign=float(s), k=1.0) if s else ZERO

    return tail


def mean_rate(triplet: LevyTriplet) -> np.ndarray:
    """``b + int x 1{|x|>1} nu(dx)``; raises IntegrabilityFailure for heavy tails."""
    bad = []
    for i, seg in enumerate(triplet.nu.densities):
        for u in seg.tail_directions():
            if not (Growth(k=1.0) * seg.tail_growth(u)).integrable_at_infinity():
                bad.append({"segment": i, "direction": u.tolist()})
    if bad:
        raise IntegrabilityFailure("int |x| 1{|x|>1} nu(dx) diverges", bad)
    out = triplet.b.copy()
    for j in range(triplet.dim):
        out[j] += integrate(
            triplet.nu,
            lambda x, j=j: np.where(_inner(x), 0.0, x[:, j]),
            tail=_large_moment_tail(j),
            origin=ZERO,
        )
    return out


def log_exp_moment(triplet: LevyTriplet) -> float:
    """``log E exp(X_1)`` for a one-dimensional triplet (may be ``+inf``)."""
    if triplet.dim != 1:
        raise ValueError("log_exp_moment needs a one-dimensional triplet")
    b, c = float(triplet.b[0]), float(triplet.c[0, 0])

    def f(x):
        y = x[:, 0]
        with np.errstate(over="ignore"):
            return np.expm1(y) - np.where(np.abs(y) <= 1.0, y, 0.0)

    def tail(u):
        return Growth(a=1.0) if u[0] > 0 else Growth(sign=-1.0)

    return b + 0.5 * c + integrate(triplet.nu, f, tail=tail, origin=Growth(k=2.0))


def integrates_log(nu: JumpMeasure) -> bool:
    """Whether ``int log(1+|x|) 1{|x|>1} nu(dx)`` is finite (decided analytically)."""
    for seg in nu.densities:
        for u in seg.tail_directions():
            if not (Growth(m=1.0) * seg.tail_growth(u)).integrable_at_infinity():
                return False
    return True


def approximation_factor(x, n: int) -> np.ndarray:
    """``f_n(x) = |x|**(-1/n)`` outside the unit ball, 1 inside."""
    r = np.linalg.norm(np.atleast_2d(np.asarray(x, float)), axis=1)
    return np.where(r > 1.0, r ** (-1.0 / n), 1.0)


def approximate(nu: JumpMeasure, n: int) -> JumpMeasure:
    """Log-integrating approximation ``nu_n = f_n nu``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    atoms = tuple(Atom(a.x, a.rate * float(approximation_factor([a.x], n)[0])) for a in nu.atoms)
    dens = tuple(replace(s, damp=s.damp + 1.0 / n) for s in nu.densities)
    return JumpMeasure(atoms, dens)


def small_jump_mean(nu: JumpMeasure, dim: int) -> np.ndarray:
    """``int x 1{|x|<=1} nu(dx)`` (needs finite variation near the origin)."""
    out = np.zeros(dim)
    for j in range(dim):
        out[j] = integrate(
            nu,
            lambda x, j=j: np.where(_inner(x), x[:, j], 0.0),
            tail=ZERO,
            origin=lambda u, j=j: Growth(sign=float(np.sign(u[j])), k=1.0),
        )
    return out
