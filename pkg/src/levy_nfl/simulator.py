"""Monte Carlo paths of the log-price and of portfolio wealth.

Paths follow the Lévy–Itô split: deterministic drift, correlated Gaussian
increments on a uniform grid, and compound-Poisson jumps at exact arrival
times.  Infinite-activity densities are cut below ``|x| = eps`` and the cut
part enters the drift only.  Every random draw is keyed by
``(seed, path index, purpose, segment)`` through the counter-based generator
in :mod:`levy_nfl.rng`, so results do not depend on chunking or threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from . import rng
from .errors import (
    CholeskyFailure,
    HorizonCapReached,
    IaoPresent,
    MonotonicityViolation,
    NonPositiveWealth,
    PreconditionError,
)
from .levy_core import (
    DEFAULT_QUAD,
    BoxRegion,
    DensitySegment,
    HalfLine,
    Interval,
    JumpMeasure,
    LevyTriplet,
    _quad,
    _scalarize,
    char_exponent,
    quadratic_tail,
    small_jump_mean,
)

JUMP_CAP = 1e300  # jumps beyond this size are stored at the cap
_T_CAP = math.log(JUMP_CAP)
_CELLS = 4096
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
CHUNK = 8192


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LEVY_NFL_THREADS", "")))
    except ValueError:
        return max(1, os.cpu_count() or 1)


# --------------------------------------------------------------------------
# jump-size samplers


@dataclass
class _Table:
    """Piecewise sampler on a grid in ``v``; ``to_x`` maps ``v`` to jump vectors.

    Cell probabilities come from Gauss–Legendre masses; within a cell the
    density is interpolated log-linearly (linearly when an end value is 0).
    """

    nodes: np.ndarray
    h: np.ndarray
    cum: np.ndarray
    to_x: object
    cap_mass: float = 0.0
    cap_x: np.ndarray | None = None

    @property
    def mass(self) -> float:
        return float(self.cum[-1]) + self.cap_mass

    def sample(self, u: np.ndarray) -> np.ndarray:
        target = u * self.mass
        out = np.empty((u.size, self.cap_x.size if self.cap_x is not None else self.to_x(self.nodes[:1]).shape[1]))
        body = target < self.cum[-1]
        if np.any(~body):
            out[~body] = self.cap_x
        tb = target[body]
        k = np.minimum(np.searchsorted(self.cum, tb, side="right") - 1, len(self.nodes) - 2)
        cell = self.cum[k + 1] - self.cum[k]
        r = np.clip((tb - self.cum[k]) / np.where(cell > 0, cell, 1.0), 0.0, 1.0)
        v0, dv = self.nodes[k], self.nodes[k + 1] - self.nodes[k]
        h0, h1 = self.h[k], self.h[k + 1]
        y = np.empty_like(r)
        pos = (h0 > 0) & (h1 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            kap = np.log(h1 / h0) / dv
            small = np.abs(kap * dv) < 1e-8
            y_exp = np.where(small, r * dv, np.log1p(r * np.expm1(kap * dv)) / kap)
            # linear density h0 + (h1 - h0) y / dv; solve its CDF for the fraction r
            a, b_ = 0.5 * (h1 - h0) / dv, h0
            tot = 0.5 * (h0 + h1) * dv
            disc = np.sqrt(np.maximum(b_ * b_ + 4.0 * a * r * tot, 0.0))
            y_lin = np.where(np.abs(a) < 1e-300, r * dv, 2.0 * r * tot / (b_ + disc))
            y_lin = np.where(tot > 0, y_lin, 0.5 * dv)
        y[pos] = y_exp[pos]
        y[~pos] = y_lin[~pos]
        out[body] = self.to_x(v0 + np.clip(y, 0.0, dv))
        return out


def _gl_cells(nodes: np.ndarray, f) -> np.ndarray:
    a, b = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    return half * (vals @ _GL_W)


def _table(v0: float, v1: float, f, to_x) -> _Table:
    nodes = np.linspace(v0, v1, _CELLS + 1)
    masses = np.maximum(_gl_cells(nodes, f), 0.0)
    return _Table(nodes, np.maximum(f(nodes), 0.0), np.concatenate([[0.0], np.cumsum(masses)]), to_x)


def _ray_pieces(seg: DensitySegment, lo: float, hi: float, direction: np.ndarray, param_sign: float) -> list[_Table]:
    """Tables for the parameter range ``lo <= s <= hi`` (``0 <= lo``) along ``direction``.

    Points are ``x = s * direction``; the density in ``s`` is ``seg.weight(param_sign * s)``.
    """
    tables = []
    if lo == 0.0:
        # finite activity: sample linearly in s next to the origin
        top = min(hi, 1.0)
        tables.append(
            _table(
                0.0,
                top,
                lambda s: np.nan_to_num(seg.weight(param_sign * s)),
                lambda s: s[:, None] * direction[None, :],
            )
        )
        lo = top
        if lo >= hi:
            return tables

    def to_x(t):
        return np.minimum(np.exp(np.minimum(t, _T_CAP)), JUMP_CAP)[:, None] * direction[None, :]

    if math.isfinite(hi):
        tables.append(
            _table(
                math.log(lo),
                math.log(hi),
                lambda t: np.exp(t) * np.nan_to_num(seg.weight(param_sign * np.exp(t))),
                to_x,
            )
        )
        return tables
    t0 = math.log(lo)

    def logh(t):
        return np.asarray(seg.tail_log_weight(np.asarray(t, float), direction), float)

    probe = np.linspace(t0, _T_CAP, 20001)
    lp = logh(probe)
    top = float(np.nanmax(lp))
    below = np.nonzero(lp < top - 46.0)[0]
    t_hi = float(probe[below[below > np.argmax(lp)][0]]) if np.any(below > np.argmax(lp)) else _T_CAP
    if t_hi <= t0:
        t_hi = t0 + 1.0
    tab = _table(t0, t_hi, lambda t: np.exp(logh(t)), to_x)
    rest = _quad(_scalarize(lambda t: np.exp(logh(t))), t_hi, math.inf, DEFAULT_QUAD, DEFAULT_QUAD.limit)
    if rest > 0 and t_hi >= _T_CAP:
        tab.cap_mass = rest
    tab.cap_x = JUMP_CAP * direction
    tables.append(tab)
    return tables


def _truncate(seg: DensitySegment, eps: float) -> list[DensitySegment]:
    """Remove ``|x| < eps`` from an infinite-activity segment."""
    if not seg.infinite_activity():
        return [seg]
    sup = seg.support
    if isinstance(sup, HalfLine):
        return [seg.restricted(HalfLine(sup.direction, max(sup.offset, eps)))]
    if isinstance(sup, Interval):
        out = []
        if sup.lo < -eps:
            out.append(seg.restricted(Interval(sup.lo, -eps, sup.lo_closed, True)))
        if sup.hi > eps:
            out.append(seg.restricted(Interval(eps, sup.hi, True, sup.hi_closed)))
        return out
    raise PreconditionError("infinite activity on a box segment is not supported")


def _segment_tables(seg: DensitySegment) -> list[_Table]:
    sup = seg.support
    if isinstance(sup, HalfLine):
        return _ray_pieces(seg, sup.offset, math.inf, np.asarray(sup.direction), 1.0)
    if isinstance(sup, Interval):
        out = []
        if sup.hi > 0:
            out.extend(_ray_pieces(seg, max(sup.lo, 0.0), sup.hi, np.array([1.0]), 1.0))
        if sup.lo < 0:
            out.extend(_ray_pieces(seg, max(-sup.hi, 0.0), -sup.lo, np.array([-1.0]), -1.0))
        return out
    return []


@dataclass
class _BoxSampler:
    seg: DensitySegment
    lo: np.ndarray
    hi: np.ndarray
    bound: float
    mass: float


def _box_sampler(seg: DensitySegment) -> _BoxSampler:
    from .levy_core import integrate

    sup: BoxRegion = seg.support
    lo, hi = np.asarray(sup.lo), np.asarray(sup.hi)
    bound = 1.0
    for i, f in enumerate(seg.family.factors):
        grid = np.linspace(lo[i], hi[i], 2001)
        bound *= float(np.max(np.abs(f.pdf(grid))))
    corners, _ = sup.vrep()
    bound *= float(np.max(seg.modifier(corners))) if seg.tilt is not None else 1.0
    mass = integrate(JumpMeasure((), (seg,)), lambda x: np.ones(x.shape[0]), origin=None)
    return _BoxSampler(seg, lo, hi, 1.02 * bound, mass)


@dataclass
class JumpSampler:
    """Merged compound-Poisson sampler for the simulated (truncated) jump measure."""

    rates: np.ndarray
    atoms: list  # (component index, point)
    tables: list  # (component index, _Table)
    boxes: list  # (component index, _BoxSampler)
    dim: int

    @property
    def total_rate(self) -> float:
        return float(self.rates.sum())


def build_jump_sampler(nu: JumpMeasure, dim: int) -> JumpSampler:
    rates, atoms, tables, boxes = [], [], [], []
    for a in nu.atoms:
        atoms.append((len(rates), np.asarray(a.x, float)))
        rates.append(a.rate)
    for seg in nu.densities:
        if isinstance(seg.support, BoxRegion):
            bs = _box_sampler(seg)
            boxes.append((len(rates), bs))
            rates.append(bs.mass)
            continue
        for tab in _segment_tables(seg):
            if tab.mass > 0:
                tables.append((len(rates), tab))
                rates.append(tab.mass)
    return JumpSampler(np.asarray(rates, float), atoms, tables, boxes, dim)


# --------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Simulated paths on ``time_grid`` with jumps stored in CSR layout.

    ``continuous[i, k]`` is the drift-plus-Gaussian increment of path ``i`` over
    step ``k``; the jumps of path ``i`` are rows ``jump_ptr[i]:jump_ptr[i+1]``
    of ``jump_times``/``jump_sizes`` (times sorted).
    """

    time_grid: np.ndarray
    continuous: np.ndarray
    jump_ptr: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    seed: int
    first_stream: int
    sim_drift: np.ndarray
    c: np.ndarray
    epsilon: float
    generator: str = rng.GENERATOR_ID

    @property
    def n_paths(self) -> int:
        return self.continuous.shape[0]

    @property
    def dim(self) -> int:
        return self.continuous.shape[2]

    @property
    def jump_path(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_paths), np.diff(self.jump_ptr))

    def jump_log(self, i: int) -> list[tuple[float, np.ndarray]]:
        s = slice(self.jump_ptr[i], self.jump_ptr[i + 1])
        return list(zip(self.jump_times[s].tolist(), self.jump_sizes[s]))

    def _jump_bins(self) -> np.ndarray:
        return np.searchsorted(self.time_grid, self.jump_times, side="left")

    def values(self) -> np.ndarray:
        """``X`` at the grid times, shape ``(n_paths, n_steps + 1, d)``."""
        n, k, d = self.continuous.shape
        acc = np.zeros((n, k + 1, d))
        acc[:, 1:] = self.continuous
        np.add.at(acc, (self.jump_path, self._jump_bins()), self.jump_sizes)
        return np.cumsum(acc, axis=1)

    def terminal(self) -> np.ndarray:
        out = self.continuous.sum(axis=1)
        np.add.at(out, self.jump_path, self.jump_sizes)
        return out


def _gauss_factor(c: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    if not np.any(c):
        return np.zeros_like(c)
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(c)
        if w.min() < -tol * max(1.0, w.max()):
            raise CholeskyFailure(f"covariance is not positive semidefinite (eigenvalue {w.min():.3g})") from None
        return V * np.sqrt(np.maximum(w, 0.0))


@dataclass
class SimulationPlan:
    """Triplet-derived pieces shared by all chunks of a simulation."""

    drift: np.ndarray
    factor: np.ndarray
    sampler: JumpSampler
    c: np.ndarray
    epsilon: float


def simulation_plan(triplet: LevyTriplet, epsilon: float = 1e-3) -> SimulationPlan:
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon truncation must lie in (0, 1]")
    d = triplet.dim
    segs = tuple(s for seg in triplet.nu.densities for s in _truncate(seg, epsilon))
    nu_sim = JumpMeasure(triplet.nu.atoms, segs)
    drift = triplet.b - small_jump_mean(nu_sim, d) if not nu_sim.is_zero else triplet.b.copy()
    return SimulationPlan(drift, _gauss_factor(triplet.c), build_jump_sampler(nu_sim, d), triplet.c, epsilon)


def _sample_jumps(plan: SimulationPlan, T: float, seed: int, streams: np.ndarray, segment: int):
    smp = plan.sampler
    n = streams.size
    lam = smp.total_rate * T
    if lam <= 0:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0), np.zeros((0, smp.dim))
    counts = poisson.ppf(rng.uniforms(seed, streams, rng.TAG_ARRIVAL, 0, 1, segment)[:, 0], lam).astype(np.int64)
    ptr = np.concatenate([[0], np.cumsum(counts)])
    nmax = int(counts.max(initial=0))
    if nmax == 0:
        return ptr, np.zeros(0), np.zeros((0, smp.dim))
    mask = np.arange(nmax)[None, :] < counts[:, None]
    times = np.sort(np.where(mask, T * rng.uniforms(seed, streams, rng.TAG_ARRIVAL, 1, nmax, segment), np.inf), axis=1)
    times = times[mask]
    u_comp = rng.uniforms(seed, streams, rng.TAG_SIZE, 0, nmax, segment)[mask]
    u_size = rng.uniforms(seed, streams, rng.TAG_SIZE, 1, nmax, segment)[mask]
    path_of = np.repeat(np.arange(n), counts)
    cum = np.cumsum(smp.rates) / smp.rates.sum()
    comp = np.minimum(np.searchsorted(cum, u_comp, side="right"), len(cum) - 1)
    sizes = np.zeros((times.size, smp.dim))
    for idx, x in smp.atoms:
        sizes[comp == idx] = x
    for idx, tab in smp.tables:
        sel = comp == idx
        if np.any(sel):
            sizes[sel] = tab.sample(u_size[sel])
    for idx, bs in smp.boxes:
        sel = np.nonzero(comp == idx)[0]
        d = smp.dim
        rnd = 0
        while sel.size:
            u = rng.uniforms(seed, streams, rng.TAG_SIZE, 2 + rnd, (d + 1) * nmax, segment)
            # slot of each pending jump inside its path's draw row
            slot = sel - ptr[path_of[sel]]
            row = u[path_of[sel]]
            cols = (d + 1) * slot[:, None] + np.arange(d + 1)[None, :]
            draws = np.take_along_axis(row, cols, axis=1)
            prop = bs.lo + (bs.hi - bs.lo) * draws[:, :d]
            ok = draws[:, d] * bs.bound <= bs.seg.density_at(prop)
            sizes[sel[ok]] = prop[ok]
            sel = sel[~ok]
            rnd += 1
            if rnd > 10_000:
                raise PreconditionError("rejection sampler for a box density does not accept")
    return ptr, times, sizes


def _sample_chunk(plan: SimulationPlan, T, n_steps, seed, streams, segment):
    d = plan.drift.size
    n = streams.size
    dt = T / n_steps
    cont = np.broadcast_to(plan.drift * dt, (n, n_steps, d)).copy()
    if np.any(plan.factor):
        z = rng.normals(seed, streams, rng.TAG_GAUSS, 0, n_steps * d, segment).reshape(n, n_steps, d)
        cont += math.sqrt(dt) * z @ plan.factor.T
    ptr, times, sizes = _sample_jumps(plan, T, seed, streams, segment)
    return cont, ptr, times, sizes


def sample_paths(
    triplet: LevyTriplet | SimulationPlan,
    T: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    epsilon: float = 1e-3,
    *,
    first_stream: int = 0,
    segment: int = 0,
) -> PathBundle:
    """Simulate ``n_paths`` paths on ``[0, T]`` (streams ``first_stream + i``)."""
    if not T > 0 or n_steps < 1 or n_paths < 1:
        raise ValueError("need T > 0, n_steps >= 1 and n_paths >= 1")
    plan = triplet if isinstance(triplet, SimulationPlan) else simulation_plan(triplet, epsilon)
    starts = list(range(0, n_paths, CHUNK))
    jobs = [np.arange(first_stream + s, first_stream + min(s + CHUNK, n_paths), dtype=np.uint64) for s in starts]

    def run(streams):
        return _sample_chunk(plan, T, n_steps, seed, streams, segment)

    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    cont = np.concatenate([p[0] for p in parts])
    offs = np.cumsum([0] + [p[1][-1] for p in parts])
    ptr = np.concatenate([[0]] + [p[1][1:] + o for p, o in zip(parts, offs[:-1])])
    times = np.concatenate([p[2] for p in parts])
    sizes = np.concatenate([p[3] for p in parts])
    grid = np.linspace(0.0, T, n_steps + 1)
    return PathBundle(grid, cont, ptr, times, sizes, seed, first_stream, plan.drift, plan.c, plan.epsilon)


# --------------------------------------------------------------------------
# wealth


def _jump_log_factors(paths: PathBundle, pi: np.ndarray) -> np.ndarray:
    px = paths.jump_sizes @ pi
    if np.any(px <= -1.0):
        raise NonPositiveWealth("a jump drives wealth to a nonpositive value: nu[pi'x <= -1] > 0")
    return np.log1p(px)


def log_wealth(paths: PathBundle, pi, stop_level: float | None = None) -> np.ndarray:
    """``log W^pi`` at the grid times, shape ``(n_paths, n_steps + 1)``.

    With ``stop_level = m`` the portfolio switches to 0 at the first grid time
    where ``W >= m``; wealth is frozen from then on.
    """
    pi = np.asarray(pi, float).reshape(paths.dim)
    n, k, _ = paths.continuous.shape
    dt = np.diff(paths.time_grid)
    inc = np.zeros((n, k + 1))
    inc[:, 1:] = paths.continuous @ pi - 0.5 * float(pi @ paths.c @ pi) * dt[None, :]
    if paths.jump_times.size and np.any(pi):
        np.add.at(inc, (paths.jump_path, paths._jump_bins()), _jump_log_factors(paths, pi))
    lw = np.cumsum(inc, axis=1)
    if stop_level is not None:
        hit = lw >= math.log(stop_level)
        first = np.where(hit.any(axis=1), hit.argmax(axis=1), k + 1)
        cols = np.arange(k + 1)[None, :]
        frozen = np.take_along_axis(lw, np.minimum(first, k)[:, None], axis=1)
        lw = np.where(cols > first[:, None], frozen, lw)
    return lw


def wealth_path(paths: PathBundle, pi, stop_level: float | None = None) -> np.ndarray:
    return np.exp(log_wealth(paths, pi, stop_level))


def monotone_mask(paths: PathBundle, pi, tol: float = 1e-12) -> np.ndarray:
    """Per path: every continuous step and every jump factor of ``W^pi`` is nondecreasing."""
    pi = np.asarray(pi, float).reshape(paths.dim)
    dt = np.diff(paths.time_grid)
    steps = paths.continuous @ pi - 0.5 * float(pi @ paths.c @ pi) * dt[None, :]
    ok = np.all(steps >= -tol, axis=1)
    if paths.jump_times.size:
        bad = _jump_log_factors(paths, pi) < -tol
        ok &= np.bincount(paths.jump_path[bad], minlength=paths.n_paths) == 0
    return ok


# --------------------------------------------------------------------------
# statistical verdicts


@dataclass
class SimulationReport:
    statistic: str
    estimate: float
    standard_error: float
    verdict: str  # "consistent" | "violated"
    sample_size: int
    seed: int
    generator: str = rng.GENERATOR_ID
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "estimate": self.estimate,
            "standardError": self.standard_error,
            "verdict": self.verdict,
            "sampleSize": self.sample_size,
            "seed": self.seed,
            "generator": self.generator,
            "details": self.details,
        }


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    v = np.asarray(v, float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def supermartingale_test(
    log_num: np.ndarray, log_den: np.ndarray | None, time_grid: np.ndarray, seed: int = 0, bound: float = 1.0
) -> SimulationReport:
    """Test ``E[num/den] <= bound`` at ``T/4``, ``T/2`` and ``T`` (mean - 3 SE rule).

    Inputs are log-values on ``time_grid``; ``log_den = None`` tests ``num`` alone.
    """
    T = float(time_grid[-1])
    ratio_log = log_num if log_den is None else log_num - log_den
    checks = {}
    violated = False
    for frac in (0.25, 0.5, 1.0):
        k = int(np.argmin(np.abs(time_grid - frac * T)))
        m, se = _mean_se(np.exp(ratio_log[:, k]))
        checks[f"{frac:g}T"] = {"time": float(time_grid[k]), "estimate": m, "standardError": se}
        violated |= m > bound + 3.0 * se
    m, se = checks["1T"]["estimate"], checks["1T"]["standardError"]
    return SimulationReport(
        "E[ratio_T]", m, se, "violated" if violated else "consistent", ratio_log.shape[0], seed, details=checks
    )


def relative_wealth_test(
    triplet: LevyTriplet, pi, rho, T: float = 1.0, n_paths: int = 100_000, seed: int = 0, n_steps: int = 4, paths=None
) -> SimulationReport:
    """Supermartingale test of ``W^pi / W^rho``."""
    paths = paths if paths is not None else sample_paths(triplet, T, n_steps, n_paths, seed)
    return supermartingale_test(log_wealth(paths, pi), log_wealth(paths, rho), paths.time_grid, seed)


def increasing_profit_demo(
    triplet: LevyTriplet,
    xi,
    T: float = 1.0,
    n_paths: int = 10_000,
    seed: int = 0,
    n_steps: int = 50,
    require_monotone: bool = True,
) -> SimulationReport:
    """Simulate ``W^xi`` for an immediate arbitrage: monotone paths and ``P[W_T > 1] > 0``."""
    xi = np.asarray(xi, float)
    paths = sample_paths(triplet, T, n_steps, n_paths, seed)
    mono = monotone_mask(paths, xi)
    frac = float(mono.mean())
    if require_monotone and frac < 1.0:
        bad = int(np.argmin(mono))
        raise MonotonicityViolation(f"W^xi decreases on path {bad}; xi is not an increasing profit")
    lw = log_wealth(paths, xi)
    up = lw[:, -1] > 0.0
    m, se = _mean_se(up.astype(float))
    ok = m > 0.0
    return SimulationReport(
        "P[W_T > 1]",
        m,
        se,
        "consistent" if ok else "violated",
        n_paths,
        seed,
        details={"monotoneFraction": frac, "meanTerminalWealth": float(np.exp(lw[:, -1]).mean())},
    )


def infinite_horizon_free_lunch_demo(
    triplet: LevyTriplet,
    C,
    m: float = 2.0,
    seed: int = 0,
    n_paths: int = 2000,
    chunk_T: float = 1.0,
    steps_per_chunk: int = 50,
    target: float = 0.99,
    max_horizon: float = 1000.0,
    rho=None,
) -> SimulationReport:
    """Stop ``W^rho`` at level ``m`` and extend the horizon until ``target`` of paths hit it.

    Each horizon chunk draws from its own generator segment, so extending the
    horizon never changes earlier chunks.
    """
    from .measure_transform import is_supermartingale_measure
    from .numeraire import solve_numeraire

    if is_supermartingale_measure(triplet, C).holds:
        raise PreconditionError("P is a supermartingale measure: no infinite-horizon free lunch to exhibit")
    strategy = "numeraire"
    if rho is None:
        try:
            rho = solve_numeraire(triplet, C).rho
        except IaoPresent as exc:
            # no numéraire exists; the immediate arbitrage grows wealth just as well
            rho, strategy = exc.certificate.xi, "immediateArbitrage"
    rho = np.asarray(rho, float)
    plan = simulation_plan(triplet)
    level = math.log(m)
    lw = np.zeros(n_paths)
    hit = np.zeros(n_paths, dtype=bool)
    horizon, j = 0.0, 0
    while True:
        paths = sample_paths(plan, chunk_T, steps_per_chunk, n_paths, seed, segment=j)
        path_lw = lw[:, None] + log_wealth(paths, rho)
        crossed = path_lw >= level
        first = np.where(crossed.any(axis=1), crossed.argmax(axis=1), -1)
        newly = (~hit) & (first >= 0)
        lw = np.where(hit, lw, np.where(newly, path_lw[np.arange(n_paths), np.maximum(first, 0)], path_lw[:, -1]))
        hit |= newly
        horizon += chunk_T
        j += 1
        frac = float(hit.mean())
        wealth = np.exp(lw)
        mw, se = _mean_se(wealth)
        rep = SimulationReport(
            "hitFraction",
            frac,
            math.sqrt(frac * (1 - frac) / n_paths),
            "violated" if frac >= target else "consistent",
            n_paths,
            seed,
            details={
                "level": m,
                "horizon": horizon,
                "meanTerminalWealth": mw,
                "meanTerminalWealthSE": se,
                "portfolio": rho.tolist(),
                "strategy": strategy,
                "wealthBound": m * frac,
            },
        )
        if frac >= target:
            return rep
        if horizon >= max_horizon:
            raise HorizonCapReached(f"hit fraction {frac:.3f} < {target} at horizon cap {max_horizon}", rep)


def esscher_density_log(paths: PathBundle, params, T: float) -> np.ndarray:
    """``log Z^(eta, g)_T = -eta'X_T - sum g(dX) - T psi`` per path."""
    eta = np.asarray(params.eta, float)
    val = -(paths.terminal() @ eta) - T * params.psi
    if params.g_tag == "quadraticTail" and paths.jump_times.size:
        g = np.minimum(quadratic_tail(paths.jump_sizes), 1e300)
        val = val - np.bincount(paths.jump_path, weights=g, minlength=paths.n_paths)
    return val


def esscher_martingale_test(
    triplet: LevyTriplet, params, T: float = 1.0, n_paths: int = 100_000, seed: int = 0
) -> SimulationReport:
    """Empirical mean of ``Z_T``; consistent when within 3 SE of 1."""
    paths = sample_paths(triplet, T, 1, n_paths, seed)
    z = np.exp(esscher_density_log(paths, params, T))
    m, se = _mean_se(z)
    return SimulationReport(
        "E[Z_T]", m, se, "consistent" if abs(m - 1.0) <= 3.0 * se else "violated", n_paths, seed
    )


def empirical_char_function(paths: PathBundle, u) -> complex:
    u = np.asarray(u, float).reshape(paths.dim)
    return complex(np.mean(np.exp(1j * (paths.terminal() @ u))))


def char_function_check(triplet: LevyTriplet, paths: PathBundle, probes) -> list[dict]:
    """Compare the empirical characteristic function with ``exp(T phi(u))`` (bound ``4/sqrt(N)``)."""
    T = float(paths.time_grid[-1])
    bound = 4.0 / math.sqrt(paths.n_paths)
    out = []
    for u in probes:
        emp = empirical_char_function(paths, u)
        ref = complex(np.exp(T * char_exponent(triplet, u)))
        out.append({"u": np.asarray(u, float).tolist(), "error": abs(emp - ref), "bound": bound, "ok": abs(emp - ref) <= bound})
    return out
