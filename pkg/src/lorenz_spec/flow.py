"""Hybrid geometric Lorenz flow: exact saddle block plus two affine return tubes.

Inside the block ``|x|, |y| <= 1, 0 <= z <= 1`` the flow is the linear saddle
``(lambda1 x, -lambda2 y, -lambda3 z)``.  An orbit leaving through the face
``x = s`` (``s = +-1``) at ``(s, y', z')`` enters tube ``s`` and, after exactly
``tau_tube`` time units, lands on the cross-section at

    R(y', z') = (s (k z' - 1), s c + b y', 1).

Inside a tube the position is the linear interpolation between the exit point
and ``R``.  With ``z' = |x|^(lambda3/lambda1)`` and ``y' = y |x|^(lambda2/lambda1)``
the induced first return is ``(alpha(x), beta(x, y))``.

Tube states are kept in tube coordinates ``(y', z', clock)``; ambient
coordinates are derived from them.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BackwardThroughTube, ModelError, OnStableManifold
from .params import GeometricLorenzParams

_TOL = 1e-12


class Region(enum.IntEnum):
    BLOCK = 0
    TUBE_PLUS = 1
    TUBE_MINUS = 2

    @property
    def sign(self) -> int:
        return {Region.TUBE_PLUS: 1, Region.TUBE_MINUS: -1}.get(self, 0)


def _tube_region(sign: int) -> Region:
    return Region.TUBE_PLUS if sign > 0 else Region.TUBE_MINUS


@dataclass(frozen=True)
class State3:
    x: float
    y: float
    z: float
    region: Region = Region.BLOCK
    clock: float = 0.0
    entry: tuple[float, float] | None = None

    @classmethod
    def on_sigma(cls, x: float, y: float) -> "State3":
        return cls(float(x), float(y), 1.0)

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def in_block(self) -> bool:
        return self.region == Region.BLOCK

    @property
    def on_sigma_face(self) -> bool:
        return self.region == Region.BLOCK and self.z == 1.0


@dataclass(frozen=True)
class CrossSectionPoint:
    x: float
    y: float

    @property
    def on_gamma(self) -> bool:
        return self.x == 0.0

    def __iter__(self):
        yield self.x
        yield self.y

    def __getitem__(self, i: int) -> float:
        return (self.x, self.y)[i]


ORIGIN = State3(0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# tube geometry


def tube_landing(params: GeometricLorenzParams, sign: int, ye: float, ze: float) -> tuple[float, float]:
    return sign * (params.k * ze - 1.0), sign * params.c + params.b * ye


def tube_position(params: GeometricLorenzParams, sign: int, ye: float, ze: float, clock: float) -> np.ndarray:
    rx, ry = tube_landing(params, sign, ye, ze)
    frac = clock / params.tau_tube
    return np.array([sign + frac * (rx - sign), ye + frac * (ry - ye), ze + frac * (1.0 - ze)])


def tube_state(params: GeometricLorenzParams, sign: int, ye: float, ze: float, clock: float = 0.0) -> State3:
    p = tube_position(params, sign, ye, ze, clock)
    return State3(float(p[0]), float(p[1]), float(p[2]), _tube_region(sign), float(clock), (float(ye), float(ze)))


def _tube_coord_matrix(params: GeometricLorenzParams, sign: int, ye: float, ze: float, clock: float) -> np.ndarray:
    """Columns: d(position)/d(y'), d/d(z'), d/d(clock)."""
    frac = clock / params.tau_tube
    rx, ry = tube_landing(params, sign, ye, ze)
    return np.array(
        [
            [0.0, sign * frac * params.k, (rx - sign) / params.tau_tube],
            [1.0 - frac + frac * params.b, 0.0, (ry - ye) / params.tau_tube],
            [0.0, 1.0 - frac, (1.0 - ze) / params.tau_tube],
        ]
    )


def invert_tube(params: GeometricLorenzParams, x: float, y: float) -> tuple[int, float, float]:
    """Tube sign and exit-face coordinates of the orbit that lands at ``(x, y)``."""
    found = []
    for sign in (1, -1):
        ze = (sign * x + 1.0) / params.k
        ye = (y - sign * params.c) / params.b
        if -_TOL <= ze <= 1.0 + _TOL and abs(ye) <= 1.0 + _TOL:
            found.append((sign, ye, min(max(ze, 0.0), 1.0)))
    if len(found) != 1:
        raise BackwardThroughTube(
            f"({x}, {y}) is {'not in' if not found else 'ambiguous for'} the image of the tubes"
        )
    return found[0]


# ---------------------------------------------------------------------------
# vector field, exit times


def vector_field(params: GeometricLorenzParams, s: State3) -> np.ndarray:
    if s.region == Region.BLOCK:
        return np.array([params.lambda1 * s.x, -params.lambda2 * s.y, -params.lambda3 * s.z])
    sign = s.region.sign
    ye, ze = s.entry
    rx, ry = tube_landing(params, sign, ye, ze)
    return np.array([rx - sign, ry - ye, 1.0 - ze]) / params.tau_tube


def time_to_exit(params: GeometricLorenzParams, s: State3) -> float:
    if s.region != Region.BLOCK:
        raise ModelError("time_to_exit needs a state in the linear block")
    if s.x == 0.0:
        raise OnStableManifold("x = 0: the orbit converges to the singularity")
    return -math.log(abs(s.x)) / params.lambda1


def _block_at(params: GeometricLorenzParams, x: float, y: float, z: float, t: float) -> State3:
    return State3(
        x * math.exp(params.lambda1 * t), y * math.exp(-params.lambda2 * t), z * math.exp(-params.lambda3 * t)
    )


def _check_valid(params: GeometricLorenzParams, s: State3) -> None:
    if s.region == Region.BLOCK:
        if abs(s.x) > 1 + 1e-9 or abs(s.y) > 1 + 1e-9 or not (-1e-12 <= s.z <= 1 + 1e-9):
            raise ModelError(f"{s} is outside the linear block")
    elif not (-1e-12 <= s.clock <= params.tau_tube + 1e-12) or s.entry is None:
        raise ModelError(f"{s} has an invalid tube clock")


# ---------------------------------------------------------------------------
# flow and its derivative


def _advance(params: GeometricLorenzParams, s: State3, t: float, jac: bool):
    """Forward flow for ``t >= 0``; optionally the Jacobian in leg coordinates.

    Leg coordinates are ambient ``(x, y, z)`` in the block and ``(y', z', clock)``
    in a tube.  The returned matrix maps leg coordinates of ``s`` to leg
    coordinates of the result.
    """
    l1, l2, l3 = params.lambda1, params.lambda2, params.lambda3
    r2, r3 = params.exponent_y, params.a
    J = np.eye(3) if jac else None
    remaining = float(t)
    while True:
        if s.region == Region.BLOCK:
            te = math.inf if s.x == 0.0 else max(-math.log(abs(s.x)) / l1, 0.0)
            if te > remaining:
                if jac:
                    J = np.diag([math.exp(l1 * remaining), math.exp(-l2 * remaining), math.exp(-l3 * remaining)]) @ J
                return _block_at(params, s.x, s.y, s.z, remaining), J
            sign = 1 if s.x > 0 else -1
            ax = abs(s.x)
            ye, ze = s.y * ax**r2, s.z * ax**r3
            if jac:
                leg = np.array(
                    [
                        [s.y * r2 * ax ** (r2 - 1.0) * sign, ax**r2, 0.0],
                        [s.z * r3 * ax ** (r3 - 1.0) * sign, 0.0, ax**r3],
                        [1.0 / (l1 * s.x), 0.0, 0.0],
                    ]
                )
                J = leg @ J
            remaining -= te
            s = tube_state(params, sign, ye, ze, 0.0)
        else:
            left = params.tau_tube - s.clock
            if left > remaining:
                return tube_state(params, s.region.sign, *s.entry, s.clock + remaining), J
            sign = s.region.sign
            ye, ze = s.entry
            rx, ry = tube_landing(params, sign, ye, ze)
            if jac:
                leg = np.array(
                    [
                        [0.0, sign * params.k, l1 * rx],
                        [params.b, 0.0, -l2 * ry],
                        [0.0, 0.0, -l3],
                    ]
                )
                J = leg @ J
            remaining -= left
            s = State3(rx, ry, 1.0)


def _retreat(params: GeometricLorenzParams, s: State3, t: float) -> State3:
    """Backward flow by ``t >= 0`` time units."""
    l3 = params.lambda3
    remaining = float(t)
    while remaining > 0:
        if s.region == Region.BLOCK:
            tb = math.inf if s.z == 0.0 else -math.log(s.z) / l3
            if tb > remaining:
                out = _block_at(params, s.x, s.y, s.z, -remaining)
                if abs(out.y) > 1 + 1e-9:
                    raise BackwardThroughTube("backward orbit leaves the block through |y| = 1")
                return out
            entry = _block_at(params, s.x, s.y, s.z, -tb)
            if abs(entry.y) > 1 + 1e-9:
                raise BackwardThroughTube("backward orbit leaves the block through |y| = 1")
            remaining -= tb
            if remaining <= 1e-12 * max(1.0, t):
                # roundoff residue: the backward orbit ends on the cross-section
                return State3(entry.x, entry.y, 1.0)
            sign, ye, ze = invert_tube(params, entry.x, entry.y)
            s = tube_state(params, sign, ye, ze, params.tau_tube)
        else:
            if s.clock >= remaining:
                return tube_state(params, s.region.sign, *s.entry, s.clock - remaining)
            remaining -= s.clock
            ye, ze = s.entry
            s = State3(float(s.region.sign), ye, ze)
    return s


def flow(params: GeometricLorenzParams, s: State3, t: float) -> State3:
    """Flow ``s`` for time ``t`` (either sign).

    Backward flow crosses the cross-section only where the landing point
    determines a unique tube; otherwise ``BackwardThroughTube`` is raised.
    """
    _check_valid(params, s)
    if t == 0:
        return s
    if t > 0:
        return _advance(params, s, t, False)[0]
    return _retreat(params, s, -t)


def _leg_to_ambient(params: GeometricLorenzParams, s: State3) -> np.ndarray:
    if s.region == Region.BLOCK:
        return np.eye(3)
    return _tube_coord_matrix(params, s.region.sign, *s.entry, s.clock)


def flow_with_jacobian(params: GeometricLorenzParams, s: State3, t: float) -> tuple[State3, np.ndarray]:
    """Flow for ``t >= 0`` together with the ambient 3x3 derivative ``D X_t``."""
    _check_valid(params, s)
    if t < 0:
        back = flow(params, s, t)
        _, J = flow_with_jacobian(params, back, -t)
        return back, np.linalg.inv(J)
    out, J = _advance(params, s, t, True)
    return out, _leg_to_ambient(params, out) @ J @ np.linalg.inv(_leg_to_ambient(params, s))


def tangent_flow(params: GeometricLorenzParams, s: State3, v, t: float) -> np.ndarray:
    return flow_with_jacobian(params, s, t)[1] @ np.asarray(v, dtype=float)


def first_return(params: GeometricLorenzParams, x: float, y: float):
    """First return of ``(x, y)`` on the cross-section.

    Returns ``(x', y', return_time, J)`` with ``J`` the ambient derivative of
    the flow over the return time, taken after landing.
    """
    if x == 0.0:
        raise OnStableManifold("points of Gamma never return")
    s = State3.on_sigma(x, y)
    t_ret = -math.log(abs(x)) / params.lambda1 + params.tau_tube
    out, J = _advance_to_landing(params, s)
    return out.x, out.y, t_ret, J


def _advance_to_landing(params: GeometricLorenzParams, s: State3):
    # flowing for exactly the exit time puts the state at tube clock 0
    te = -math.log(abs(s.x)) / params.lambda1
    mid, J1 = _advance(params, s, te, True)
    sign = mid.region.sign
    ye, ze = mid.entry
    rx, ry = tube_landing(params, sign, ye, ze)
    leg = np.array(
        [
            [0.0, sign * params.k, params.lambda1 * rx],
            [params.b, 0.0, -params.lambda2 * ry],
            [0.0, 0.0, -params.lambda3],
        ]
    )
    return State3(rx, ry, 1.0), leg @ J1


def poincare_jacobian(params: GeometricLorenzParams, J: np.ndarray, landing: State3) -> np.ndarray:
    """Reduce an ambient return Jacobian to the 2x2 derivative of the return map."""
    F = vector_field(params, landing)
    P = np.eye(3) - np.outer(F, [0.0, 0.0, 1.0]) / F[2]
    return (P @ J)[:2, :2]


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    times: np.ndarray
    xyz: np.ndarray
    region: np.ndarray
    clock: np.ndarray
    entry: np.ndarray
    crossings: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> State3:
        reg = Region(int(self.region[i]))
        if reg == Region.BLOCK:
            return State3(*map(float, self.xyz[i]))
        return State3(*map(float, self.xyz[i]), reg, float(self.clock[i]), (float(self.entry[i, 0]), float(self.entry[i, 1])))

    @property
    def n_crossings(self) -> int:
        return len(self.crossings)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z", "region"])
            for t, p, r in zip(self.times, self.xyz, self.region):
                w.writerow([repr(float(t)), repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), Region(int(r)).name])

    def crossings_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y"])
            for row in self.crossings:
                w.writerow([repr(float(v)) for v in row])


def sample_orbit(params: GeometricLorenzParams, s0: State3, t_max: float, dt: float) -> Trajectory:
    """Samples at multiples of ``dt`` plus every exit and landing event.

    Landings on the cross-section are recorded in ``crossings`` as rows
    ``(t, x, y)``; the initial point is never counted as a crossing.
    """
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be positive")
    _check_valid(params, s0)
    l1, l2, l3 = params.lambda1, params.lambda2, params.lambda3
    grid = np.arange(0.0, t_max + 0.5 * dt, dt)
    grid = grid[grid <= t_max]
    chunks_t, chunks_p, chunks_r, chunks_c, chunks_e = [], [], [], [], []
    crossings = []
    t0 = 0.0
    s = s0

    def emit(ts, ps, reg, clocks, entry):
        chunks_t.append(ts)
        chunks_p.append(ps)
        chunks_r.append(np.full(len(ts), int(reg)))
        chunks_c.append(clocks)
        chunks_e.append(np.tile(entry, (len(ts), 1)))

    while t0 <= t_max:
        if s.region == Region.BLOCK:
            te = math.inf if s.x == 0.0 else max(-math.log(abs(s.x)) / l1, 0.0)
            t1 = t0 + te
            lo = np.searchsorted(grid, t0, side="left")
            hi = np.searchsorted(grid, min(t1, t_max), side="right" if t1 > t_max else "left")
            ts = np.concatenate([[t0], grid[lo:hi]])
            ts = np.unique(ts)
            ts = ts[ts < t1] if math.isfinite(t1) else ts
            u = ts - t0
            ps = np.column_stack([s.x * np.exp(l1 * u), s.y * np.exp(-l2 * u), s.z * np.exp(-l3 * u)])
            emit(ts, ps, Region.BLOCK, np.zeros(len(ts)), (0.0, 0.0))
            if t1 > t_max:
                break
            sign = 1 if s.x > 0 else -1
            ax = abs(s.x)
            s = tube_state(params, sign, s.y * ax**params.exponent_y, s.z * ax**params.a, 0.0)
            t0 = t1
        else:
            sign = s.region.sign
            ye, ze = s.entry
            t1 = t0 + params.tau_tube - s.clock
            lo = np.searchsorted(grid, t0, side="left")
            hi = np.searchsorted(grid, min(t1, t_max), side="right" if t1 > t_max else "left")
            ts = np.unique(np.concatenate([[t0], grid[lo:hi]]))
            ts = ts[ts < t1]
            clocks = s.clock + (ts - t0)
            rx, ry = tube_landing(params, sign, ye, ze)
            frac = clocks / params.tau_tube
            ps = np.column_stack([sign + frac * (rx - sign), ye + frac * (ry - ye), ze + frac * (1.0 - ze)])
            emit(ts, ps, s.region, clocks, (ye, ze))
            if t1 > t_max:
                break
            s = State3(rx, ry, 1.0)
            t0 = t1
            crossings.append((t1, rx, ry))
    times = np.concatenate(chunks_t)
    keep = np.concatenate([[True], np.diff(times) > 0])
    return Trajectory(
        times=times[keep],
        xyz=np.concatenate(chunks_p)[keep],
        region=np.concatenate(chunks_r)[keep],
        clock=np.concatenate(chunks_c)[keep],
        entry=np.concatenate(chunks_e)[keep],
        crossings=np.array(crossings, dtype=float).reshape(-1, 3),
    )


def in_trapping_region(params: GeometricLorenzParams, traj: Trajectory, tol: float = 1e-9) -> bool:
    block = traj.region == Region.BLOCK
    p = traj.xyz[block]
    ok_block = np.all(np.abs(p[:, 0]) <= 1 + tol) and np.all(np.abs(p[:, 1]) <= 1 + tol)
    ok_block = ok_block and np.all((p[:, 2] >= -tol) & (p[:, 2] <= 1 + tol))
    c = traj.clock[~block]
    ok_tube = np.all((c >= -tol) & (c <= params.tau_tube + tol))
    return bool(ok_block and ok_tube)


def max_speed(params: GeometricLorenzParams) -> float:
    """Largest speed of the vector field over the block and both tubes."""
    block = math.sqrt(params.lambda1**2 + params.lambda2**2 + params.lambda3**2)
    tube = 0.0
    for sign in (1, -1):
        for ye in (-1.0, 1.0):
            for ze in (0.0, 1.0):
                rx, ry = tube_landing(params, sign, ye, ze)
                tube = max(tube, math.hypot(rx - sign, ry - ye, 1.0 - ze) / params.tau_tube)
    return max(block, tube)


# ---------------------------------------------------------------------------
# vectorised orbits of many cross-section points


def sigma_legs(params: GeometricLorenzParams, x0, y0, t_end: float):
    """Cross-section itinerary of many points up to time ``t_end``.

    Returns ``(t_cross, cx, cy)`` of shape ``(N, K)``: leg ``j`` starts on the
    cross-section at ``(cx[:, j], cy[:, j])`` at time ``t_cross[:, j]``.
    Legs that start after ``t_end`` carry ``inf`` times.
    """
    x = np.asarray(x0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    t = np.zeros_like(x)
    ts, xs, ys = [t.copy()], [x.copy()], [y.copy()]
    k, b, c, r2, r3 = params.k, params.b, params.c, params.exponent_y, params.a
    while True:
        with np.errstate(divide="ignore"):
            te = np.where(x == 0.0, np.inf, -np.log(np.abs(x)) / params.lambda1)
        t = t + te + params.tau_tube
        active = t <= t_end
        if not np.any(active):
            break
        sg = np.sign(x)
        ax = np.abs(x)
        nx = sg * (k * ax**r3 - 1.0)
        ny = sg * c + b * y * ax**r2
        x = np.where(active, nx, 0.0)
        y = np.where(active, ny, 0.0)
        t = np.where(active, t, np.inf)
        ts.append(t.copy())
        xs.append(x.copy())
        ys.append(y.copy())
    return np.stack(ts, 1), np.stack(xs, 1), np.stack(ys, 1)


def sigma_positions(params: GeometricLorenzParams, x0, y0, times, legs=None) -> np.ndarray:
    """Ambient positions ``(N, M, 3)`` of orbits started on the cross-section at time 0."""
    times = np.asarray(times, dtype=float)
    if legs is None:
        legs = sigma_legs(params, x0, y0, float(times.max()) if times.size else 0.0)
    tc, cx, cy = legs
    # leg index per (point, time)
    idx = (times[None, :, None] >= tc[:, None, 1:]).sum(axis=2)
    rows = np.arange(tc.shape[0])[:, None]
    t0 = tc[rows, idx]
    x = cx[rows, idx]
    y = cy[rows, idx]
    phase = times[None, :] - t0
    with np.errstate(divide="ignore"):
        te = np.where(x == 0.0, np.inf, -np.log(np.abs(x)) / params.lambda1)
    in_block = phase < te
    out = np.empty(phase.shape + (3,))
    with np.errstate(over="ignore", invalid="ignore"):
        bx = x * np.exp(params.lambda1 * np.minimum(phase, np.where(np.isfinite(te), te, phase)))
    out[..., 0] = np.where(in_block, bx, 0.0)
    out[..., 1] = y * np.exp(-params.lambda2 * phase)
    out[..., 2] = np.exp(-params.lambda3 * phase)
    tube = ~in_block
    if np.any(tube):
        sg = np.sign(x[tube])
        ax = np.abs(x[tube])
        ye = y[tube] * ax**params.exponent_y
        ze = ax**params.a
        frac = (phase[tube] - te[tube]) / params.tau_tube
        rx = sg * (params.k * ze - 1.0)
        ry = sg * params.c + params.b * ye
        out[tube] = np.column_stack([sg + frac * (rx - sg), ye + frac * (ry - ye), ze + frac * (1.0 - ze)])
    return out
