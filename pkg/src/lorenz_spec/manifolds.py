"""Invariant manifolds, the holonomy chart around a periodic orbit, and the gap certificate.

Coordinates on the cross-section are ``(x, y)``.  Stable leaves are exactly
the vertical segments ``{x = const}`` because the x-dynamics ignores y.
The chart coordinate of the local unstable disk of ``p`` is ``u = x - x*``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.spatial import cKDTree

from .errors import BackwardThroughTube, DomainGamma, MuTooLarge, NoGap
from .flow import (
    Region,
    State3,
    Trajectory,
    _retreat,
    flow,
    max_speed,
    sample_orbit,
    sigma_positions,
    vector_field,
)
from .params import GeometricLorenzParams
from .return_map import PeriodicPoint, alpha, beta, jacobian_L, sigma_orbit

DELTA_SEED = 1e-8


class Side(enum.Enum):
    PLUS = 1
    MINUS = -1


# ---------------------------------------------------------------------------
# separatrices of the singularity


@dataclass
class SeparatrixSegment:
    side: Side
    trajectory: Trajectory
    t_max: float
    delta_seed: float = DELTA_SEED

    @property
    def points(self) -> np.ndarray:
        return self.trajectory.xyz

    @property
    def crossings(self) -> np.ndarray:
        return self.trajectory.crossings


def unstable_separatrix(
    params: GeometricLorenzParams, side: Side, t_max: float, dt: float = 0.05, delta_seed: float = DELTA_SEED
) -> SeparatrixSegment:
    """Orbit of ``(+-delta_seed, 0, 0)``; the x-axis is exactly the unstable eigenline."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    s0 = State3(side.value * delta_seed, 0.0, 0.0)
    return SeparatrixSegment(side, sample_orbit(params, s0, t_max, dt), t_max, delta_seed)


def separatrix_crossings(
    params: GeometricLorenzParams, t_max: float, delta_seed: float = DELTA_SEED
) -> np.ndarray:
    """Cross-section visits ``(t, x, y, side)`` of both separatrices up to time ``t_max``.

    Closed form: the seed exits through ``(+-1, 0, 0)`` after ``ln(1/delta)``,
    lands one tube time later, and from then on follows the return map.
    """
    t_first = math.log(1.0 / delta_seed) / params.lambda1 + params.tau_tube
    rows = []
    for side in (1, -1):
        if t_first > t_max:
            continue
        x0, y0 = -side * 1.0, side * params.c
        # rough bound on the number of returns: each takes at least tau_tube
        n = int((t_max - t_first) / params.tau_tube) + 1
        orb = _orbit_until(params, x0, y0, t_max - t_first, n)
        for tt, xx, yy in orb:
            rows.append((t_first + tt, xx, yy, side))
    if not rows:
        return np.zeros((0, 4))
    out = np.array(rows)
    return out[np.lexsort((out[:, 3], out[:, 0]))]


def _orbit_until(params, x0, y0, t_span, n_max):
    out = [(0.0, x0, y0)]
    t, x, y = 0.0, x0, y0
    for _ in range(n_max):
        if x == 0.0:
            break
        t += -math.log(abs(x)) / params.lambda1 + params.tau_tube
        if t > t_span:
            break
        x, y = alpha(params, x), beta(params, x, y)
        out.append((t, x, y))
    return out


# ---------------------------------------------------------------------------
# stable leaves


@dataclass(frozen=True)
class StableLeaf:
    x0: float
    mu: float
    y_center: float = 0.0

    @property
    def y_range(self) -> tuple[float, float]:
        return max(-1.0, self.y_center - self.mu), min(1.0, self.y_center + self.mu)

    def contains(self, p, tol: float = 0.0) -> bool:
        lo, hi = self.y_range
        return abs(p[0] - self.x0) <= tol and lo - tol <= p[1] <= hi + tol

    def points(self, n: int = 11) -> np.ndarray:
        ys = np.linspace(*self.y_range, n)
        return np.column_stack([np.full(n, self.x0), ys])

    def image(self, params) -> "StableLeaf":
        """The return map sends the leaf into the leaf through the image point."""
        factor = params.b * abs(self.x0) ** params.exponent_y
        return StableLeaf(alpha(params, self.x0), self.mu * factor, beta(params, self.x0, self.y_center))


def local_stable_leaf(p, mu: float) -> StableLeaf:
    x, y = p
    if abs(x) > 1:
        raise ValueError("point is outside the cross-section")
    return StableLeaf(float(x), float(mu), float(y))


def graph_transform_leaf(params, z, n: int, slope: float = 1.0, half_length: float = 0.05, n_pts: int = 21) -> float:
    """Pull a slanted segment through ``L^n(z)`` back ``n`` returns.

    Returns the largest horizontal offset of the pulled-back curve from the
    vertical line through ``z``; it tends to 0 as ``n`` grows, which checks
    that the stable foliation is vertical.
    """
    from .return_map import inverse_L, iterate

    orb = iterate(params, z, n)
    signs = np.sign(orb[:-1, 0]).astype(int)
    contraction = float(np.prod(params.b * np.abs(orb[:-1, 0]) ** params.exponent_y))
    ell = half_length * contraction
    xn, yn = orb[-1]
    ts = np.linspace(-ell, ell, n_pts)
    pts = [(xn + slope * t, yn + t) for t in ts]
    for s in signs[::-1]:
        pts = [tuple(inverse_L(params, int(s), q)) for q in pts]
    return max(abs(q[0] - z[0]) for q in pts)


# ---------------------------------------------------------------------------
# unstable manifold of the periodic orbit on the cross-section


def _cycle_jacobian(params, q: PeriodicPoint) -> np.ndarray:
    J = np.eye(2)
    x, y = q.x_star, q.y_star
    for _ in range(q.period_n):
        J = jacobian_L(params, x, y) @ J
        x, y = alpha(params, x), beta(params, x, y)
    return J


def unstable_eigen(params, q: PeriodicPoint) -> tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eig(_cycle_jacobian(params, q))
    i = int(np.argmax(np.abs(vals)))
    v = np.real(vecs[:, i])
    return float(np.real(vals[i])), v / np.linalg.norm(v) * math.copysign(1.0, v[0])


@dataclass
class UnstableCurve:
    """Graph ``y = g(x)`` of the local unstable manifold of ``p`` on the cross-section."""

    xs: np.ndarray
    ys: np.ndarray
    slopes: np.ndarray
    x_star: float
    half_width: float
    _spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        self._spline = CubicHermiteSpline(self.xs, self.ys, self.slopes)

    @property
    def x_min(self) -> float:
        return self.x_star - self.half_width

    @property
    def x_max(self) -> float:
        return self.x_star + self.half_width

    def __call__(self, x):
        return self._spline(x)

    def slope(self, x):
        return self._spline(x, 1)


def unstable_curve(
    params, q: PeriodicPoint, half_width: float = 0.15, n_seeds: int = 96, rho: float = 1e-9
) -> UnstableCurve:
    """Iterate a fundamental domain of the unstable eigenline under ``L^n``.

    Tangent vectors are carried along, so the slopes are exact derivatives
    of the iterated curve rather than finite differences.
    """
    lam, v = unstable_eigen(params, q)
    word = q.itinerary.word
    samples = [(q.x_star, q.y_star, v[1] / v[0])]
    for sgn in (1.0, -1.0):
        for j in range(n_seeds):
            s = sgn * rho * lam ** (j / n_seeds)
            x, y = q.x_star + s * v[0], q.y_star + s * v[1]
            t = v.copy()
            while True:
                ok = True
                for letter in word:
                    if x == 0.0 or np.sign(x) != letter:
                        ok = False
                        break
                    t = jacobian_L(params, x, y) @ t
                    x, y = alpha(params, x), beta(params, x, y)
                if not ok or abs(x - q.x_star) > half_width * 1.05:
                    break
                samples.append((x, y, t[1] / t[0]))
                t = t / np.linalg.norm(t)
    arr = np.array(sorted(samples))
    arr = arr[np.concatenate([[True], np.diff(arr[:, 0]) > 0])]
    if arr[0, 0] > q.x_star - half_width or arr[-1, 0] < q.x_star + half_width:
        raise MuTooLarge("unstable curve does not cover the requested width")
    return UnstableCurve(arr[:, 0], arr[:, 1], arr[:, 2], q.x_star, half_width)


def _pull_push(params, q: PeriodicPoint, x: float, depth: int):
    """``(y, slope)`` of the unstable manifold over ``x``, computed pointwise.

    Pull ``x`` back ``depth`` returns along the cycle's itinerary, place it on
    the cycle's y-value there, then push forward with the exact map while
    carrying a tangent vector.
    """
    word = q.itinerary.word
    n = q.period_n
    xs = [x]
    for j in range(depth):
        sign = word[(n - 1 - j) % n]
        xs.append(_alpha_branch_inverse(params, sign, xs[-1]))
    cyc = [(q.x_star, q.y_star)]
    for _ in range(n - 1):
        cyc.append((alpha(params, cyc[-1][0]), beta(params, *cyc[-1])))
    y = cyc[(-depth) % n][1]
    xs = xs[::-1]
    t = np.array([1.0, 0.0])
    for xi in xs[:-1]:
        t = jacobian_L(params, xi, y) @ t
        t /= np.linalg.norm(t)
        y = beta(params, xi, y)
    return y, t[1] / t[0]


def _alpha_branch_inverse(params, sign: int, x1: float) -> float:
    v = sign * x1
    if not -1.0 <= v <= params.k - 1.0:
        raise DomainGamma(f"{x1} has no preimage on side {sign}")
    return sign * ((v + 1.0) / params.k) ** (1.0 / params.a)


def unstable_point(params, q: PeriodicPoint, x: float, depth: int = 40) -> float:
    return _pull_push(params, q, x, depth)[0]


def center_direction(params, q: PeriodicPoint, point, curve=None, depth: int = 40) -> np.ndarray:
    """Unit center direction inside the cross-section at a point of W^u(p)."""
    _, s = _pull_push(params, q, point[0], depth)
    v = np.array([1.0, s])
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# holonomy chart


def _to_sigma(params: GeometricLorenzParams, s: State3, mu: float) -> tuple[float, float]:
    """Cross-section point on the orbit of ``s`` within flow time ``mu``."""
    if s.region == Region.BLOCK:
        if s.z == 1.0:
            return s.x, s.y
        tb = -math.log(s.z) / params.lambda3
        if tb > mu + 1e-12:
            raise ValueError("state is farther than mu from the cross-section")
        back = _retreat(params, s, tb)
        return back.x, back.y
    left = params.tau_tube - s.clock
    if left > mu + 1e-12:
        raise ValueError("state is farther than mu from the cross-section")
    out = flow(params, s, left)
    return out.x, out.y


@dataclass
class HolonomyChart:
    params: GeometricLorenzParams
    periodic: PeriodicPoint
    mu: float
    curve: UnstableCurve
    L_const: float = 1.0
    injectivity_min_sep: float = math.nan

    @property
    def x_star(self) -> float:
        return self.periodic.x_star

    @property
    def y_star(self) -> float:
        return self.periodic.y_star

    def coordinate(self, x):
        return np.asarray(x) - self.x_star

    def in_chart(self, p) -> bool:
        x, y = p
        return abs(x - self.x_star) <= self.mu and abs(y - float(self.curve(x))) <= self.mu

    def pi_s(self, p) -> tuple[float, float]:
        """Slide along the stable leaf onto the unstable disk."""
        x = float(p[0])
        return x, float(self.curve(x))

    def pi(self, s: State3) -> float:
        """Strong-unstable coordinate of a 3D state after collapsing flow time."""
        x, _ = _to_sigma(self.params, s, self.mu)
        return float(x - self.x_star)

    def pi_pi_s(self, p) -> float:
        return float(self.pi_s(p)[0] - self.x_star)

    def to_dict(self) -> dict:
        return {
            "x_star": self.x_star,
            "y_star": self.y_star,
            "period_n": self.periodic.period_n,
            "flow_period": self.periodic.flow_period,
            "mu": self.mu,
            "L_const": self.L_const,
            "injectivity_min_sep": self.injectivity_min_sep,
        }


def build_holonomy_chart(
    params: GeometricLorenzParams, periodic: PeriodicPoint, mu: float = 0.1, L_const: float = 1.0, n_grid: int = 21
) -> HolonomyChart:
    """Chart ``(u, v, t) -> X_t(x* + u, g(x* + u) + v)`` with ``|u|, |v|, |t| <= mu``.

    Raises ``MuTooLarge`` if ``4 mu`` reaches the period or the product map is
    not injective on a grid.
    """
    if 4 * mu >= periodic.flow_period:
        raise MuTooLarge(f"4*mu = {4 * mu} is not below the period {periodic.flow_period}")
    if mu >= params.tau_tube:
        raise MuTooLarge("mu must be shorter than the tube flight time")
    x_lo = periodic.x_star - mu
    if x_lo <= 0 or -math.log(periodic.x_star + mu) / params.lambda1 <= mu:
        raise MuTooLarge("the chart leaves the linear block within flow time mu")
    curve = unstable_curve(params, periodic, half_width=max(1.5 * mu, 0.05))
    grid = np.linspace(-mu, mu, n_grid)
    pts = []
    try:
        for u in grid:
            x = periodic.x_star + u
            g = float(curve(x))
            for v in grid:
                base = State3.on_sigma(x, g + v)
                for t in grid:
                    pts.append(flow(params, base, float(t)).xyz)
    except (BackwardThroughTube, ValueError) as exc:
        raise MuTooLarge(f"chart leaves the model: {exc}") from exc
    pts = np.array(pts)
    d, _ = cKDTree(pts).query(pts, k=2)
    min_sep = float(d[:, 1].min())
    if min_sep <= 1e-12:
        raise MuTooLarge("product map is not injective on the grid")
    return HolonomyChart(params, periodic, mu, curve, L_const, min_sep)


def chart_injectivity(chart: HolonomyChart, n: int = 200, n_t: int = 9) -> float:
    """Smallest distance between images of distinct ``(u, v, t)`` grid nodes.

    Flow times are shifted to ``[0, 2 mu]``; composing with the flow by
    ``-mu`` is a bijection, so injectivity is unaffected.
    """
    grid = np.linspace(-chart.mu, chart.mu, n)
    U, V = np.meshgrid(grid, grid, indexing="ij")
    xs = chart.x_star + U.ravel()
    ys = chart.curve(xs) + V.ravel()
    pos = sigma_positions(chart.params, xs, ys, np.linspace(0.0, 2 * chart.mu, n_t)).reshape(-1, 3)
    d, _ = cKDTree(pos).query(pos, k=2)
    return float(d[:, 1].min())


# ---------------------------------------------------------------------------
# Bowen balls near p


def speed_bounds_on_orbit(params: GeometricLorenzParams, q: PeriodicPoint, dt: float = 1e-3) -> tuple[float, float]:
    """``(min, max)`` speed along the flow orbit of ``p``."""
    traj = sample_orbit(params, State3.on_sigma(q.x_star, q.y_star), q.flow_period, dt)
    speeds = [np.linalg.norm(vector_field(params, traj.state(i))) for i in range(len(traj))]
    return float(min(speeds)), float(max(speeds))


def closed_form_L_bound(params: GeometricLorenzParams, q: PeriodicPoint) -> float:
    """``3 (1 + 2 K / kappa)`` with ``K`` the global and ``kappa`` the minimal orbit speed."""
    kappa, _ = speed_bounds_on_orbit(params, q)
    return 3.0 * (1.0 + 2.0 * max_speed(params) / kappa)


@dataclass
class BowenBallReport:
    ok: bool
    L_measured: float
    L_bound: float
    n_tracked: int
    n_tried: int
    max_off_leaf: float


def _orbit_deviation(params, pts: np.ndarray, ref: np.ndarray, times: np.ndarray) -> np.ndarray:
    pos = sigma_positions(params, pts[:, 0], pts[:, 1], times)
    return np.linalg.norm(pos - ref[None], axis=2).max(axis=1)


def bowen_ball_in_stable(
    params: GeometricLorenzParams,
    periodic: PeriodicPoint,
    eps0: float = 1e-2,
    T_grid: int = 10,
    n_samples: int = 1000,
    seed: int = 0,
    chunk: int = 200,
) -> BowenBallReport:
    """Points whose orbit stays ``eps0``-close to p for ``T_grid`` returns lie near W^s(p).

    Candidates are drawn around ``p``; those that track (ambient distance
    sampled at ``eps0 / (10 V_max)``) are kept until ``n_samples`` are found.
    The measured constant is ``max (|x - x*| + |y - y*|) / eps0``.
    """
    rng = np.random.default_rng(seed)
    t_end = periodic.flow_period * T_grid / periodic.period_n
    dt = eps0 / (10 * max_speed(params))
    times = np.arange(0.0, t_end + dt, dt)
    ref = sigma_positions(params, [periodic.x_star], [periodic.y_star], times)[0]
    lam, _ = unstable_eigen(params, periodic)
    width_x = 4.0 * eps0 / lam ** (T_grid / periodic.period_n)
    kept, tried = [], 0
    while len(kept) < n_samples and tried < 200 * n_samples:
        cand = np.column_stack(
            [
                periodic.x_star + rng.uniform(-width_x, width_x, chunk),
                periodic.y_star + rng.uniform(-eps0, eps0, chunk),
            ]
        )
        tried += chunk
        # coarse samples are a subset of the dense ones, so this only rejects true failures
        coarse = _orbit_deviation(params, cand, ref[::64], times[::64])
        cand = cand[coarse <= eps0]
        if len(cand):
            dev = _orbit_deviation(params, cand, ref, times)
            kept.extend(cand[dev <= eps0])
    kept = np.array(kept[:n_samples]).reshape(-1, 2)
    off = np.abs(kept[:, 0] - periodic.x_star)
    L_meas = float(((off + np.abs(kept[:, 1] - periodic.y_star)) / eps0).max()) if len(kept) else math.nan
    bound = closed_form_L_bound(params, periodic)
    return BowenBallReport(
        ok=bool(len(kept) == n_samples and L_meas <= bound),
        L_measured=L_meas,
        L_bound=bound,
        n_tracked=len(kept),
        n_tried=tried,
        max_off_leaf=float(off.max()) if len(kept) else math.nan,
    )


def tracking_failure_return(params, periodic: PeriodicPoint, point, eps0: float, max_returns: int = 200) -> int | None:
    """First return index at which the cross-section orbit is farther than ``eps0`` from p's."""
    pts = sigma_orbit(params, point[0], point[1], max_returns)
    ref = sigma_orbit(params, periodic.x_star, periodic.y_star, max_returns)
    d = np.hypot(pts[:, 1] - ref[:, 1], pts[:, 2] - ref[:, 2])
    bad = np.nonzero(d > eps0)[0]
    return int(bad[0]) if bad.size else None


# ---------------------------------------------------------------------------
# density of W^ss(p) on the cross-section


def iter_alpha_preimages(params, targets, depth: int, resolution: float = 1e-4):
    """Yield the preimages of ``targets`` under ``alpha^n`` for ``n = 0..depth``.

    Each level is thinned to one point per ``resolution`` bin; the kept points
    are genuine preimages, so density of the thinned set implies density of
    the full set.
    """
    cur = np.unique(np.asarray(targets, dtype=float))
    yield cur
    for _ in range(depth):
        nxt = []
        for sign in (1, -1):
            v = sign * cur
            ok = (v > -1.0) & (v <= params.k - 1.0)
            nxt.append(sign * ((v[ok] + 1.0) / params.k) ** (1.0 / params.a))
        arr = np.concatenate(nxt)
        arr = arr[arr != 0.0]
        _, idx = np.unique(np.round(arr / resolution).astype(np.int64), return_index=True)
        cur = np.sort(arr[idx])
        yield cur


def alpha_preimages(params, targets, depth: int, resolution: float = 1e-4) -> list[np.ndarray]:
    return list(iter_alpha_preimages(params, targets, depth, resolution))


def density_depth(params, targets, delta: float = 1e-2, n_max: int = 30) -> tuple[int | None, float]:
    """Smallest ``N`` with the union of levels ``<= N`` delta-dense in [-1, 1], and its covering radius."""
    levels = alpha_preimages(params, targets, n_max)
    acc = np.array([])
    radius = math.inf
    for n, lev in enumerate(levels):
        acc = np.union1d(acc, lev)
        pts = np.concatenate([[-1.0], acc, [1.0]])
        gaps = np.diff(pts)
        radius = max(gaps[1:-1].max(initial=0.0) / 2, gaps[0], gaps[-1])
        if radius <= delta:
            return n, float(radius)
    return None, float(radius)


# ---------------------------------------------------------------------------
# projection of the separatrix and the gap certificate


@dataclass
class GapCertificate:
    projected_points: list[float]
    gap_interval: tuple[float, float] | None = None
    clearance: float = math.nan
    T_used: float = math.nan
    d_star: float = math.nan
    h: float = math.nan
    mu: float = math.nan
    x_star: float = math.nan
    separatrix_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)), repr=False)
    arc_diameters: list[float] = field(default_factory=list)
    w_point: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "projected_points": [float(v) for v in self.projected_points],
            "gap_interval": None if self.gap_interval is None else [float(v) for v in self.gap_interval],
            "clearance": self.clearance,
            "T_used": self.T_used,
            "d_star": self.d_star,
            "h": self.h,
            "mu": self.mu,
            "x_star": self.x_star,
            "n_separatrix_points": int(len(self.separatrix_points)),
            "max_arc_diameter": max(self.arc_diameters, default=0.0),
            "w_point": None if self.w_point is None else [float(v) for v in self.w_point],
        }


def separatrix_set(params, T: float, mu: float, delta_seed: float = DELTA_SEED) -> np.ndarray:
    """Cross-section points of ``X_T`` applied to the local unstable manifold ``|x| <= mu`` of the origin."""
    t_cut = T + math.log(mu / delta_seed) / params.lambda1
    return separatrix_crossings(params, t_cut, delta_seed)


def project_separatrix(
    chart: HolonomyChart, T: float, segments: list[SeparatrixSegment] | None = None, delta_seed: float = DELTA_SEED
) -> GapCertificate:
    """Collapse every separatrix arc inside the chart to its strong-unstable coordinate.

    With ``segments`` given, each projected crossing is also checked against
    the sampled arc within flow time ``mu`` of it.
    """
    params = chart.params
    S = separatrix_set(params, T, chart.mu, delta_seed)
    proj, diam = [], []
    for t_c, x, y, side in S:
        if not chart.in_chart((x, y)):
            continue
        u = chart.pi_pi_s((x, y))
        proj.append(u)
        us = [u]
        if segments:
            for seg in segments:
                if seg.side.value != int(side):
                    continue
                tr = seg.trajectory
                sel = np.nonzero(np.abs(tr.times - t_c) <= chart.mu)[0]
                for i in sel:
                    us.append(chart.pi(tr.state(int(i))))
        diam.append(float(max(us) - min(us)))
    return GapCertificate(
        projected_points=sorted(proj),
        T_used=float(T),
        mu=chart.mu,
        x_star=chart.x_star,
        separatrix_points=S[:, 1:3].copy() if len(S) else np.zeros((0, 2)),
        arc_diameters=diam,
    )


def strip_distance(points: np.ndarray, chart: HolonomyChart, gap: tuple[float, float], h: float) -> float:
    """Minimum distance from ``points`` to the stable strip over ``gap`` sampled in columns ``h`` apart."""
    if len(points) == 0:
        return math.inf
    us = np.arange(gap[0], gap[1], h)
    us = np.append(us, gap[1])
    xs = chart.x_star + us
    g = chart.curve(xs)
    px, py = points[:, 0:1], points[:, 1:2]
    dx = px - xs[None]
    dy = np.maximum(0.0, np.abs(py - g[None]) - chart.mu)
    return float(np.sqrt(dx**2 + dy**2).min())


def find_gap_interval(cert: GapCertificate, chart: HolonomyChart, h: float = 1e-4) -> GapCertificate:
    """Largest gap in the projected points, shrunk to its central half, plus ``d_star``.

    Ties go to the gap whose center is nearest 0.  An empty projected set
    gives the full interval with clearance ``mu``.
    """
    mu = chart.mu
    pts = [p for p in cert.projected_points if -mu <= p <= mu]
    if not pts:
        gap, clearance = (-mu, mu), mu
    else:
        edges = [-mu] + pts + [mu]
        best = None
        for lo, hi in zip(edges[:-1], edges[1:]):
            key = (-(hi - lo), abs(0.5 * (lo + hi)))
            if best is None or key < best[0]:
                best = (key, lo, hi)
        _, lo, hi = best
        width = hi - lo
        if width <= 2 * h:
            raise NoGap(f"projected points are {h}-dense in the chart")
        c = 0.5 * (lo + hi)
        gap = (c - width / 4, c + width / 4)
        clearance = min(min(abs(p - gap[0]), abs(p - gap[1])) for p in pts)
    d_star = strip_distance(cert.separatrix_points, chart, gap, h)
    if not d_star > 0:
        raise NoGap("separatrix meets the stable strip over the gap")
    cert.gap_interval = gap
    cert.clearance = float(clearance)
    cert.d_star = float(d_star)
    cert.h = h
    cert.w_point = gap_stable_point(chart, gap)
    return cert


def gap_stable_point(chart: HolonomyChart, gap: tuple[float, float], n_max: int = 30) -> tuple[float, float]:
    """Point of W^ss of the cycle on the unstable disk over the gap, nearest the gap center.

    Its x-coordinate is an alpha-preimage of a cycle point; y lies on the curve.
    """
    params, q = chart.params, chart.periodic
    targets = [q.x_star, -q.x_star] if q.period_n % 2 == 0 else [q.x_star]
    center = chart.x_star + 0.5 * (gap[0] + gap[1])
    lo, hi = chart.x_star + gap[0], chart.x_star + gap[1]
    best = None
    for lev in iter_alpha_preimages(params, targets, n_max, resolution=(hi - lo) * 1e-4):
        inside = lev[(lev >= lo) & (lev <= hi)]
        if inside.size:
            cand = float(inside[np.argmin(np.abs(inside - center))])
            if best is None or abs(cand - center) < abs(best - center):
                best = cand
            if abs(best - center) < 0.1 * (hi - lo):
                break
    if best is None:
        raise NoGap("no stable-manifold point of the cycle over the gap")
    return best, float(chart.curve(best))


def lipschitz_holonomy(chart: HolonomyChart, n: int = 51) -> float:
    """Largest ratio ``|pi_s(a) - pi_s(b)| / |a - b|`` over nearby chart points."""
    xs = chart.x_star + np.linspace(-chart.mu, chart.mu, n)
    worst = 0.0
    for i in range(n - 1):
        for v in (-chart.mu, 0.0, chart.mu):
            a = (xs[i], float(chart.curve(xs[i])) + v)
            b = (xs[i + 1], float(chart.curve(xs[i + 1])) - v)
            pa, pb = np.array(chart.pi_s(a)), np.array(chart.pi_s(b))
            worst = max(worst, float(np.linalg.norm(pa - pb) / np.hypot(a[0] - b[0], a[1] - b[1])))
    return worst
