"""Specification instances, Bowen balls, and exhaustive gluing-orbit searches.

For the flow, a candidate is a cross-section grid point ``z`` standing for the
position of the gluing orbit at the start of its last orbit segment.  A
preceding singularity segment ("stay near the origin for all earlier times")
is replaced by its limit form: ``z`` must be close to the cross-section trace
``S_T`` of the time-``T`` image of the local unstable manifold of the origin,
and the deviation for that segment is the distance from ``z`` to ``S_T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catmap import CatInstance, TorusCatSystem, in_bowen_ball_cat, search_gluing_cat
from .flow import State3, flow, max_speed, sigma_legs, sigma_positions
from .params import GeometricLorenzParams
from .results import Outcome, ShadowingResult


def deviation_dt(params: GeometricLorenzParams, eps: float) -> float:
    """Sampling step so that no excursion of size ``eps`` fits between samples."""
    return eps / (10.0 * max_speed(params))


def sample_times(t_end: float, dt: float) -> np.ndarray:
    n = int(math.ceil(t_end / dt))
    return np.linspace(0.0, t_end, n + 1)


def in_bowen_ball(system, x, reference, T: float, eps: float, dt: float | None = None) -> tuple[bool, float]:
    """Whether the orbit of ``x`` stays within ``eps`` of the reference orbit on ``[0, T]``.

    ``system`` is a ``GeometricLorenzParams`` (points on the cross-section,
    ambient distance) or a ``TorusCatSystem`` (integer time ``T``).
    """
    if isinstance(system, TorusCatSystem):
        return in_bowen_ball_cat(system, x, reference, int(T), eps)
    if math.isinf(eps):
        return True, 0.0
    dt = dt or deviation_dt(system, eps)
    times = sample_times(T, dt)
    pos = sigma_positions(system, [x[0], reference[0]], [x[1], reference[1]], times)
    dev = float(np.linalg.norm(pos[0] - pos[1], axis=1).max())
    return dev <= eps, dev


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Segment:
    """Orbit piece on ``[a, b]``; ``start`` is its cross-section point at time ``a``.

    ``start = None`` means the orbit sits at the singularity.
    """

    a: float
    b: float
    start: tuple[float, float] | None

    @property
    def is_singular(self) -> bool:
        return self.start is None


@dataclass(frozen=True)
class SpecificationInstance:
    segments: tuple[Segment, ...]
    eps: float
    gap: float

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise ValueError("need at least one segment")
        for s in segs:
            if not s.b >= s.a:
                raise ValueError("segment interval is reversed")
        for s0, s1 in zip(segs[:-1], segs[1:]):
            if s1.a - s0.b < self.gap - 1e-12:
                raise ValueError("segments closer than the gap")

    def check_genuine(self, params: GeometricLorenzParams, tol: float = 1e-8) -> float:
        """Worst violation of ``X_{t2}(P(t1)) = X_{t1}(P(t2))`` over a few times per segment."""
        worst = 0.0
        for seg in self.segments:
            if seg.is_singular:
                continue
            base = State3.on_sigma(*seg.start)
            span = seg.b - seg.a
            for f1, f2 in ((0.1, 0.4), (0.25, 0.7), (0.5, 0.9)):
                t1, t2 = f1 * span, f2 * span
                p1, p2 = flow(params, base, t1), flow(params, base, t2)
                lhs = flow(params, p1, t2 - t1)
                worst = max(worst, float(np.linalg.norm(lhs.xyz - p2.xyz)))
        if worst > tol:
            raise ValueError(f"segments are not orbit pieces (error {worst})")
        return worst

    def to_dict(self) -> dict:
        return {
            "segments": [{"a": s.a, "b": s.b, "start": None if s.start is None else list(s.start)} for s in self.segments],
            "eps": self.eps,
            "gap": self.gap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpecificationInstance":
        segs = tuple(Segment(float(s["a"]), float(s["b"]), None if s["start"] is None else tuple(s["start"])) for s in d["segments"])
        return cls(segs, float(d["eps"]), float(d["gap"]))

    @classmethod
    def load(cls, path: str | Path) -> "SpecificationInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def obstruction_instance(w: tuple[float, float], T: float, eps: float, T1: float = 20.0, T2: float = 20.0) -> SpecificationInstance:
    """Singularity on ``[-T1, 0]`` followed by the orbit of ``w`` on ``[T, T + T2]``."""
    return SpecificationInstance((Segment(-T1, 0.0, None), Segment(T, T + T2, tuple(w))), eps, T)


# ---------------------------------------------------------------------------
# exhaustive search on the cross-section


@dataclass(frozen=True)
class LorenzGrid:
    h: float = 1e-4
    lo: float = -1.0
    hi: float = 1.0
    tile: int = 128

    @property
    def n(self) -> int:
        return int(round((self.hi - self.lo) / self.h)) + 1

    def coord(self, idx):
        return self.lo + np.asarray(idx) * self.h


def _dist_to_points(px, py, S: np.ndarray) -> np.ndarray:
    if len(S) == 0:
        return np.zeros(np.shape(px))
    d = np.hypot(np.asarray(px)[..., None] - S[:, 0], np.asarray(py)[..., None] - S[:, 1])
    return d.min(axis=-1)


def _box_dist(xa, xb, ya, yb, px, py):
    dx = np.maximum(np.maximum(xa - px, 0.0), px - xb)
    dy = np.maximum(np.maximum(ya - py, 0.0), py - yb)
    return np.hypot(dx, dy)


@dataclass
class _Reference:
    times: np.ndarray
    pos: np.ndarray
    coarse: np.ndarray  # indices into times


def _dense_deviation(params, xs, ys, ref: _Reference, cutoff: float, block: int = 20000) -> np.ndarray:
    """Max deviation from the reference over all sample times.

    Candidates whose running maximum reaches ``cutoff`` stop early; their
    returned value is then only a lower bound that is at least ``cutoff``.
    """
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    legs = sigma_legs(params, xs, ys, float(ref.times[-1]))
    out = np.zeros(len(xs))
    alive = np.arange(len(xs))
    for k0 in range(0, len(ref.times), block):
        if alive.size == 0:
            break
        sub = tuple(a[alive] for a in legs)
        pos = sigma_positions(params, None, None, ref.times[k0 : k0 + block], legs=sub)
        d = np.linalg.norm(pos - ref.pos[None, k0 : k0 + block], axis=2).max(axis=1)
        out[alive] = np.maximum(out[alive], d)
        alive = alive[out[alive] < cutoff]
    return out


def search_gluing_lorenz(
    params: GeometricLorenzParams,
    inst: SpecificationInstance,
    grid: LorenzGrid = LorenzGrid(),
    separatrix_points: np.ndarray | None = None,
    batch: int = 8,
    n_coarse: int = 65,
    refine_dense: int = 2000,
    refine_tiles: int = 48,
) -> ShadowingResult:
    """Best-first branch and bound over every grid point of the cross-section.

    Lower bounds: distance to ``S_T`` and to the reference start for whole
    tiles, then the deviation at ``n_coarse`` sample times for single
    points.  Only points whose bound is below the pruning threshold get the
    full deviation.  The threshold is the best value so far until
    ``refine_dense`` dense evaluations or ``refine_tiles`` tiles are spent,
    then ``min(best, eps)``: the verdict is always exhaustive at ``eps``, and
    ``meta`` carries a certified lower bound on the grid minimum together
    with a flag telling whether the returned deviation is that minimum.
    """
    orbit_segs = [s for s in inst.segments if not s.is_singular]
    if len(orbit_segs) != 1 or (inst.segments[-1].is_singular):
        raise ValueError("the flow search supports one orbit segment, optionally preceded by the singularity")
    seg = orbit_segs[0]
    has_sing = any(s.is_singular for s in inst.segments)
    S = np.asarray(separatrix_points if has_sing else np.zeros((0, 2)), dtype=float).reshape(-1, 2)
    if has_sing and len(S) == 0:
        raise ValueError("a singularity segment needs the separatrix points S_T")
    eps = inst.eps
    dt = deviation_dt(params, eps)
    times = sample_times(seg.b - seg.a, dt)
    w = seg.start
    ref = _Reference(
        times,
        sigma_positions(params, [w[0]], [w[1]], times)[0],
        np.unique(np.linspace(0, len(times) - 1, n_coarse).astype(int)),
    )
    n, t = grid.n, grid.tile
    starts = np.arange(0, n, t)
    ti, tj = np.meshgrid(starts, starts, indexing="ij")
    ti, tj = ti.ravel(), tj.ravel()
    xa, xb = grid.coord(ti), grid.coord(np.minimum(ti + t - 1, n - 1))
    ya, yb = grid.coord(tj), grid.coord(np.minimum(tj + t - 1, n - 1))
    lb_w = _box_dist(xa, xb, ya, yb, w[0], w[1])
    if len(S):
        lb_s = np.min(_box_dist(xa[:, None], xb[:, None], ya[:, None], yb[:, None], S[:, 0], S[:, 1]), axis=1)
    else:
        lb_s = np.zeros_like(lb_w)
    lb_tile = np.maximum(lb_w, lb_s)
    order = np.lexsort((np.arange(len(lb_tile)), lb_tile))

    best, best_pt = math.inf, None
    floor = math.inf  # smallest lower bound among points never fully evaluated
    n_dense = n_coarse_eval = 0
    tiles_done = 0

    # seeds: the grid points nearest w and nearest each point of S_T
    seeds = np.vstack([np.asarray(w, float)[None], S])
    snap = np.clip(np.rint((seeds - grid.lo) / grid.h), 0, n - 1)
    snap = np.unique(snap, axis=0)
    sx, sy = grid.coord(snap[:, 0]), grid.coord(snap[:, 1])
    sdev = np.maximum(_dist_to_points(sx, sy, S), _dense_deviation(params, sx, sy, ref, math.inf))
    n_dense += len(sx)
    m = int(np.argmin(sdev))
    best, best_pt = float(sdev[m]), (float(sx[m]), float(sy[m]))
    if best < eps:
        meta = _meta(grid, 0, 0, n_dense, dt, best, floor)
        meta["recheck_deviation"] = recheck(params, inst, best_pt, S)
        return ShadowingResult(Outcome.WITNESS, best_pt, best, grid.h, n_dense, meta)

    def threshold() -> float:
        # refine the minimum while the budget lasts, afterwards only certify eps
        if n_dense >= refine_dense or tiles_done >= refine_tiles:
            return min(best, eps)
        return best

    for k in order:
        thr = threshold()
        if lb_tile[k] >= thr:
            floor = min(floor, float(lb_tile[k]))
            break
        tiles_done += 1
        ii = np.arange(ti[k], min(ti[k] + t, n))
        jj = np.arange(tj[k], min(tj[k] + t, n))
        I, J = np.meshgrid(ii, jj, indexing="ij")
        I, J = I.ravel(), J.ravel()
        px, py = grid.coord(I), grid.coord(J)
        dS = _dist_to_points(px, py, S)
        lb = np.maximum(dS, np.hypot(px - w[0], py - w[1]))
        keep = lb < thr
        if not keep.all():
            floor = min(floor, float(lb[~keep].min()))
        if not keep.any():
            continue
        I, J, px, py, dS = I[keep], J[keep], px[keep], py[keep], dS[keep]
        pos = sigma_positions(params, px, py, times[ref.coarse])
        dev_c = np.linalg.norm(pos - ref.pos[None, ref.coarse], axis=2).max(axis=1)
        n_coarse_eval += len(px)
        lb = np.maximum(dS, dev_c)
        idx = np.lexsort((J, I, lb))
        for b0 in range(0, len(idx), batch):
            thr = threshold()
            sel = idx[b0 : b0 + batch]
            if lb[sel[0]] >= thr:
                floor = min(floor, float(lb[sel[0]]))
                break
            skip = lb[sel] >= thr
            if skip.any():
                floor = min(floor, float(lb[sel][skip].min()))
            sel = sel[~skip]
            dev = np.maximum(dS[sel], _dense_deviation(params, px[sel], py[sel], ref, thr))
            n_dense += len(sel)
            m = int(np.argmin(dev))
            if dev[m] < best:
                best, best_pt = float(dev[m]), (float(px[sel][m]), float(py[sel][m]))
            rest = np.delete(dev, m)
            if rest.size:
                floor = min(floor, float(rest.min()))
            if best < eps:
                meta = _meta(grid, tiles_done, n_coarse_eval, n_dense, dt, best, floor)
                meta["recheck_deviation"] = recheck(params, inst, best_pt, S)
                return ShadowingResult(Outcome.WITNESS, best_pt, best, grid.h, n_dense, meta)
    meta = _meta(grid, tiles_done, n_coarse_eval, n_dense, dt, best, floor)
    return ShadowingResult(Outcome.EXHAUSTED, best_pt, best, grid.h, n_dense, meta)


def _meta(grid, tiles, n_coarse, n_dense, dt, best, floor) -> dict:
    lower = min(best, floor)
    return {
        "grid_points": grid.n**2,
        "tiles_opened": int(tiles),
        "coarse_evaluations": int(n_coarse),
        "dense_evaluations": int(n_dense),
        "dt": dt,
        "min_lower_bound": lower,
        "exact_minimum": bool(floor >= best),
    }


def recheck(params, inst: SpecificationInstance, point, S: np.ndarray, refine: float = 0.5) -> float:
    """Deviation of ``point`` recomputed with a finer time step."""
    seg = [s for s in inst.segments if not s.is_singular][0]
    dt = deviation_dt(params, inst.eps) * refine
    times = sample_times(seg.b - seg.a, dt)
    pos = sigma_positions(params, [point[0], seg.start[0]], [point[1], seg.start[1]], times)
    dev = float(np.linalg.norm(pos[0] - pos[1], axis=1).max())
    if len(S):
        dev = max(dev, float(_dist_to_points(point[0], point[1], S)))
    return dev


def search_gluing(system, inst, grid=None, **kw) -> ShadowingResult:
    """Dispatch to the flow search or to the cat-map search."""
    if isinstance(system, TorusCatSystem):
        return search_gluing_cat(system, inst, **({"base": grid} if grid else {}), **kw)
    return search_gluing_lorenz(system, inst, grid or LorenzGrid(), **kw)


__all__ = [
    "CatInstance",
    "LorenzGrid",
    "Outcome",
    "Segment",
    "ShadowingResult",
    "SpecificationInstance",
    "TorusCatSystem",
    "deviation_dt",
    "in_bowen_ball",
    "obstruction_instance",
    "recheck",
    "search_gluing",
    "search_gluing_lorenz",
]


# ---------------------------------------------------------------------------
# obstruction experiment


@dataclass
class ObstructionConfig:
    T_sweep: tuple[float, ...] = (30.0, 50.0, 80.0)
    T_short: float = 5.0
    eps_factor: float = 0.5
    sanity_factor: float = 10.0
    mu: float = 0.1
    h: float = 1e-4
    T1: float = 20.0
    T2: float = 20.0
    bowen_samples: int = 1000
    sanity: bool = True
    seed: int = 0


@dataclass
class ObstructionRow:
    T: float
    eps: float
    d_star: float
    gap: tuple[float, float] | None
    w: tuple[float, float] | None
    result: ShadowingResult | None
    note: str = ""
    sanity: ShadowingResult | None = None
    n_projected: int = 0
    clearance: float = math.nan

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "eps": self.eps,
            "d_star": self.d_star,
            "gap": None if self.gap is None else list(self.gap),
            "w": None if self.w is None else list(self.w),
            "result": None if self.result is None else self.result.to_dict(),
            "sanity": None if self.sanity is None else self.sanity.to_dict(),
            "note": self.note,
            "n_projected": self.n_projected,
            "clearance": self.clearance,
        }


@dataclass
class ObstructionReport:
    L_const: float
    L_measured: float
    L_bound: float
    periodic: dict
    rows: list[ObstructionRow] = field(default_factory=list)

    @property
    def all_exhausted(self) -> bool:
        sweep = [r for r in self.rows if r.note != "short"]
        return bool(sweep) and all(r.result is not None and r.result.outcome is Outcome.EXHAUSTED for r in sweep)

    def to_dict(self) -> dict:
        return {
            "L_const": self.L_const,
            "L_measured": self.L_measured,
            "L_bound": self.L_bound,
            "periodic": self.periodic,
            "all_exhausted": self.all_exhausted,
            "rows": [r.to_dict() for r in self.rows],
        }


def run_obstruction_experiment(params: GeometricLorenzParams, cfg: ObstructionConfig = ObstructionConfig(), log=print) -> ObstructionReport:
    """Certify a gap for each ``T`` and search the grid at ``eps = eps_factor * eps_crit``.

    ``eps_crit = d_star / (2 L)`` with ``L`` the measured Bowen-ball constant
    (at least 1).  With ``sanity`` on, the search is repeated at
    ``sanity_factor * d_star``, where a witness is expected.
    """
    from .errors import NoGap
    from .manifolds import bowen_ball_in_stable, build_holonomy_chart, find_gap_interval, project_separatrix
    from .return_map import lowest_period_orbit

    q = lowest_period_orbit(params)
    bowen = bowen_ball_in_stable(params, q, n_samples=cfg.bowen_samples, seed=cfg.seed)
    L = max(bowen.L_measured, 1.0) if math.isfinite(bowen.L_measured) else bowen.L_bound
    chart = build_holonomy_chart(params, q, mu=cfg.mu, L_const=L)
    report = ObstructionReport(
        L, bowen.L_measured, bowen.L_bound,
        {"x_star": q.x_star, "y_star": q.y_star, "period_n": q.period_n, "flow_period": q.flow_period, "itinerary": str(q.itinerary)},
    )
    Ts = [(T, "") for T in cfg.T_sweep] + ([(cfg.T_short, "short")] if cfg.T_short else [])
    grid = LorenzGrid(h=cfg.h)
    for T, note in Ts:
        try:
            cert = find_gap_interval(project_separatrix(chart, T), chart, cfg.h)
        except NoGap as exc:
            report.rows.append(ObstructionRow(T, math.nan, math.nan, None, None, None, f"{note} no gap: {exc}".strip()))
            log(f"T={T}: no gap ({exc})")
            continue
        eps = cfg.eps_factor * cert.d_star / (2.0 * L)
        inst = obstruction_instance(cert.w_point, T, eps, cfg.T1, cfg.T2)
        res = search_gluing_lorenz(params, inst, grid, cert.separatrix_points)
        row = ObstructionRow(
            T, eps, cert.d_star, cert.gap_interval, cert.w_point, res, note,
            n_projected=len(cert.projected_points), clearance=cert.clearance,
        )
        log(f"T={T}: d*={cert.d_star:.4g} eps={eps:.4g} -> {res.outcome.value} (best {res.deviation:.4g})")
        if cfg.sanity and note != "short":
            big = obstruction_instance(cert.w_point, T, cfg.sanity_factor * cert.d_star, cfg.T1, cfg.T2)
            row.sanity = search_gluing_lorenz(params, big, grid, cert.separatrix_points)
            log(f"  sanity eps={big.eps:.4g} -> {row.sanity.outcome.value}")
        report.rows.append(row)
    return report
