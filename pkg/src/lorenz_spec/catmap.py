"""Hyperbolic positive control: the cat map ``[[2, 1], [1, 1]]`` on the 2-torus.

Segment start points are rational with a power-of-two denominator, so their
orbits are computed exactly in integers.  Candidates are written as
``a + u e_u + s e_s`` in the orthonormal eigenbasis; the map acts on the
offsets by ``(lambda^t u, lambda^-t s)``, so every deviation is exact up to
floating-point rounding of a handful of terms.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .results import Outcome, ShadowingResult

MATRIX = np.array([[2, 1], [1, 1]], dtype=np.int64)


def torus_norm(v: np.ndarray) -> np.ndarray:
    """Length of the shortest representative of ``v`` modulo the integer lattice."""
    v = np.asarray(v, dtype=float)
    return np.linalg.norm(v - np.round(v), axis=-1)


@dataclass(frozen=True)
class TorusCatSystem:
    denominator: int = 2048

    @property
    def lambda_u(self) -> float:
        return (3.0 + math.sqrt(5.0)) / 2.0

    @property
    def lambda_s(self) -> float:
        return 1.0 / self.lambda_u

    @property
    def e_u(self) -> np.ndarray:
        v = np.array([1.0, self.lambda_u - 2.0])
        return v / np.linalg.norm(v)

    @property
    def e_s(self) -> np.ndarray:
        v = np.array([1.0, self.lambda_s - 2.0])
        return v / np.linalg.norm(v)

    @property
    def determinant(self) -> int:
        return int(round(np.linalg.det(MATRIX)))

    def step(self, p: np.ndarray) -> np.ndarray:
        return (MATRIX @ np.asarray(p, dtype=float)) % 1.0

    def orbit(self, p, n: int) -> np.ndarray:
        out = [np.asarray(p, dtype=float) % 1.0]
        for _ in range(n):
            out.append(self.step(out[-1]))
        return np.array(out)

    def exact_orbit(self, ij, n: int) -> np.ndarray:
        """Integer orbit of ``ij / denominator``; rows are numerators."""
        out = [np.asarray(ij, dtype=np.int64) % self.denominator]
        for _ in range(n):
            out.append((MATRIX @ out[-1]) % self.denominator)
        return np.array(out)

    def max_speed(self) -> float:
        # one iterate is one time unit; used only for API symmetry with the flow
        return float(np.linalg.norm(MATRIX, 2))


def in_bowen_ball_cat(system: TorusCatSystem, x, reference, T: int, eps: float) -> tuple[bool, float]:
    """Whether the orbit of ``x`` stays within ``eps`` of that of ``reference`` for ``0 <= t <= T``."""
    if math.isinf(eps):
        return True, 0.0
    a = system.orbit(x, T)
    b = system.orbit(reference, T)
    dev = float(torus_norm(a - b).max())
    return dev <= eps, dev


def bowen_exit_time(system: TorusCatSystem, x, reference, eps: float, n_max: int = 200) -> int | None:
    a, b = np.asarray(x, dtype=float), np.asarray(reference, dtype=float)
    for t in range(n_max + 1):
        if torus_norm(a - b) > eps:
            return t
        a, b = system.step(a), system.step(b)
    return None


@dataclass(frozen=True)
class CatInstance:
    """Two orbit segments: ``a`` on ``[0, n1]`` and ``b`` on ``[n1 + T, n1 + T + n2]``.

    ``a`` and ``b`` are integer numerators over ``system.denominator``.  ``b``
    may be ``None`` for a single-segment instance.
    """

    a: tuple[int, int]
    b: tuple[int, int] | None
    n1: int
    n2: int
    gap: int
    eps: float

    @property
    def t0(self) -> int:
        return self.n1 + self.gap


def default_gap(system: TorusCatSystem, eps: float) -> int:
    return math.ceil(math.log(2.0 / eps) / math.log(system.lambda_u)) + 2


def random_instance(system: TorusCatSystem, rng: np.random.Generator, n: int = 10, eps: float = 0.05) -> CatInstance:
    a = tuple(int(v) for v in rng.integers(0, system.denominator, 2))
    b = tuple(int(v) for v in rng.integers(0, system.denominator, 2))
    return CatInstance(a, b, n, n, default_gap(system, eps), eps)


@dataclass
class _Constraints:
    times: np.ndarray
    offsets: np.ndarray  # (K, 2) exact rational targets c_t
    grow_u: np.ndarray  # lambda^t
    grow_s: np.ndarray  # lambda^-t


def _constraints(system: TorusCatSystem, inst: CatInstance) -> _Constraints:
    N = system.denominator
    ts, cs = list(range(inst.n1 + 1)), [np.zeros(2)] * (inst.n1 + 1)
    if inst.b is not None:
        orb_a = system.exact_orbit(inst.a, inst.t0 + inst.n2)
        orb_b = system.exact_orbit(inst.b, inst.n2)
        for k in range(inst.n2 + 1):
            t = inst.t0 + k
            ts.append(t)
            cs.append(((orb_a[t] - orb_b[k]) % N) / N)
    ts = np.array(ts, dtype=float)
    return _Constraints(ts, np.array(cs), system.lambda_u**ts, system.lambda_u ** (-ts))


def _deviation(system, con: _Constraints, u: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Max deviation over the constraint times for offsets ``(u, s)`` of any common shape."""
    u = np.asarray(u, dtype=float)[..., None]
    s = np.asarray(s, dtype=float)[..., None]
    vx = con.offsets[:, 0] + con.grow_u * u * system.e_u[0] + con.grow_s * s * system.e_s[0]
    vy = con.offsets[:, 1] + con.grow_u * u * system.e_u[1] + con.grow_s * s * system.e_s[1]
    d = np.hypot(vx - np.round(vx), vy - np.round(vy))
    return d.max(axis=-1)


def _lower_bound(system, con: _Constraints, u, s, hu, hs) -> np.ndarray:
    u = np.asarray(u, dtype=float)[..., None]
    s = np.asarray(s, dtype=float)[..., None]
    vx = con.offsets[:, 0] + con.grow_u * u * system.e_u[0] + con.grow_s * s * system.e_s[0]
    vy = con.offsets[:, 1] + con.grow_u * u * system.e_u[1] + con.grow_s * s * system.e_s[1]
    d = np.hypot(vx - np.round(vx), vy - np.round(vy))
    radius = np.hypot(con.grow_u * np.asarray(hu)[..., None], con.grow_s * np.asarray(hs)[..., None])
    return (d - radius).max(axis=-1)


def verify_witness_mp(system: TorusCatSystem, inst: CatInstance, u: float, s: float, digits: int = 60) -> float:
    """Deviation of the candidate recomputed by direct iteration in high precision."""
    N = system.denominator
    with mpmath.workdps(digits):
        lam = (3 + mpmath.sqrt(5)) / 2
        eu = mpmath.matrix([1, lam - 2])
        eu /= mpmath.norm(eu)
        es = mpmath.matrix([1, 1 / lam - 2])
        es /= mpmath.norm(es)
        z = [mpmath.mpf(inst.a[0]) / N + u * eu[0] + s * es[0], mpmath.mpf(inst.a[1]) / N + u * eu[1] + s * es[1]]
        z = [c - mpmath.floor(c) for c in z]
        orb_a = system.exact_orbit(inst.a, inst.t0 + inst.n2)
        orb_b = system.exact_orbit(inst.b, inst.n2) if inst.b is not None else None
        worst = mpmath.mpf(0)
        last = inst.t0 + inst.n2 if inst.b is not None else inst.n1
        for t in range(last + 1):
            ref = None
            if t <= inst.n1:
                ref = orb_a[t]
            elif inst.b is not None and t >= inst.t0:
                ref = orb_b[t - inst.t0]
            if ref is not None:
                dx = z[0] - mpmath.mpf(int(ref[0])) / N
                dy = z[1] - mpmath.mpf(int(ref[1])) / N
                dx -= mpmath.nint(dx)
                dy -= mpmath.nint(dy)
                worst = max(worst, mpmath.sqrt(dx * dx + dy * dy))
            z = [2 * z[0] + z[1], z[0] + z[1]]
            z = [c - mpmath.floor(c) for c in z]
        return float(worst)


def search_gluing_cat(
    system: TorusCatSystem,
    inst: CatInstance,
    base: int = 2048,
    max_depth: int = 48,
    max_cells: int = 200_000,
    s_chunk: int = 64,
) -> ShadowingResult:
    """Exhaustive search on a ``(base + 1)^2`` grid of offsets in ``[-eps, eps]^2``, refined dyadically in u.

    A cell is discarded only when a rigorous lower bound on the deviation of
    every point in it reaches ``eps``.  Cells are processed best-first with
    ties broken by grid index, so the result is deterministic.
    """
    eps = inst.eps
    con = _constraints(system, inst)
    step = 2 * eps / base
    grid = -eps + step * np.arange(base + 1)
    half = step / 2
    heap: list = []
    best_dev, best_pt = math.inf, None
    key_times = np.unique(np.searchsorted(con.times, [0, inst.n1, inst.t0, con.times[-1]]))
    quick = _Constraints(con.times[key_times], con.offsets[key_times], con.grow_u[key_times], con.grow_s[key_times])
    for j0 in range(0, base + 1, s_chunk):
        s = grid[j0 : j0 + s_chunk]
        U, S = np.meshgrid(grid, s, indexing="ij")
        # a bound from a subset of times is still a valid lower bound
        keep = _lower_bound(system, quick, U, S, half, half) < eps
        iu, js = np.nonzero(keep)
        if iu.size == 0:
            continue
        lb = _lower_bound(system, con, U[iu, js], S[iu, js], half, half)
        dev = _deviation(system, con, U[iu, js], S[iu, js])
        k = int(np.argmin(dev))
        if dev[k] < best_dev:
            best_dev, best_pt = float(dev[k]), (float(U[iu[k], js[k]]), float(S[iu[k], js[k]]))
        for m in np.nonzero(lb < eps)[0]:
            heapq.heappush(heap, (0, float(lb[m]), float(grid[iu[m]]), int(j0 + js[m])))
    evaluated = n_base = len(grid) ** 2
    if best_dev < eps:
        return _witness(system, inst, *best_pt, best_dev, half, evaluated)
    finest = half
    # depth-first: deeper cells pop first, then lower bound, then grid position
    while heap:
        neg_depth, lb, uc, js = heapq.heappop(heap)
        depth = -neg_depth
        hu = half / 2**depth
        sc = float(grid[js])
        if depth:
            d = float(_deviation(system, con, uc, sc))
            evaluated += 1
            if d < best_dev:
                best_dev, best_pt = d, (uc, sc)
            if d < eps:
                return _witness(system, inst, uc, sc, d, hu, evaluated)
        if depth >= max_depth or evaluated - n_base > max_cells:
            continue
        kids = np.array([uc - hu / 2, uc + hu / 2])
        clb = _lower_bound(system, con, kids, np.full(2, sc), hu / 2, half)
        for c, v in zip(kids, clb):
            if v < eps:
                heapq.heappush(heap, (-(depth + 1), float(v), float(c), js))
        finest = min(finest, hu / 2)
    if best_dev >= eps:
        # the pruned cells have deviation >= eps; report the true grid minimum
        for j0 in range(0, base + 1, s_chunk):
            U, S = np.meshgrid(grid, grid[j0 : j0 + s_chunk], indexing="ij")
            dev = _deviation(system, con, U, S)
            k = np.unravel_index(np.argmin(dev), dev.shape)
            if dev[k] < best_dev:
                best_dev, best_pt = float(dev[k]), (float(U[k]), float(S[k]))
    return ShadowingResult(
        Outcome.EXHAUSTED,
        point=_to_point(system, inst, *best_pt) if best_pt else None,
        deviation=best_dev,
        grid_resolution=finest,
        n_evaluated=evaluated,
        meta={"base": base, "max_depth": max_depth},
    )


def _to_point(system, inst, u, s) -> tuple[float, float]:
    a = np.array(inst.a, dtype=float) / system.denominator
    z = (a + u * system.e_u + s * system.e_s) % 1.0
    return float(z[0]), float(z[1])


def _witness(system, inst, u, s, d, hu, evaluated) -> ShadowingResult:
    return ShadowingResult(
        Outcome.WITNESS,
        point=_to_point(system, inst, u, s),
        deviation=d,
        grid_resolution=hu,
        n_evaluated=evaluated,
        meta={"u": u, "s": s, "mp_deviation": verify_witness_mp(system, inst, u, s)},
    )
