"""Tangent dynamics: the E^s + E^c splitting, domination, cones and sectional expansion.

On the cross-section the stable direction of the model is exactly ``e_y``; the
numerical estimates below are checked against that.  ``T`` arguments of the
cone checks count returns to the cross-section, not time units.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateOrbit
from .flow import State3, Trajectory, first_return, flow_with_jacobian, poincare_jacobian, tangent_flow, vector_field
from .params import GeometricLorenzParams
from .return_map import PeriodicPoint

__all__ = [
    "ConeFlavor",
    "ConeParams",
    "ConeReport",
    "SectionalExpansionReport",
    "SplittingEstimate",
    "TangentFrame",
    "check_tangency_unstable_in_center",
    "estimate_splitting",
    "lyapunov_spectrum",
    "sectional_expansion_check",
    "tangent_flow",
    "verify_cone_invariance",
]

BURN_IN = 20
E_Y = np.array([0.0, 1.0, 0.0])


@dataclass
class TangentFrame:
    base: State3
    vectors: np.ndarray

    def reorthonormalize(self) -> np.ndarray:
        """Replace ``vectors`` by its Q factor and return the diagonal of R."""
        q, r = np.linalg.qr(self.vectors)
        sgn = np.sign(np.diag(r))
        sgn[sgn == 0] = 1.0
        self.vectors = q * sgn
        return np.abs(np.diag(r))


class ConeFlavor(enum.Enum):
    UNSTABLE = "unstable"
    STABLE = "stable"
    CENTER = "center"


@dataclass(frozen=True)
class ConeParams:
    kappa: float
    flavor: ConeFlavor = ConeFlavor.UNSTABLE

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("cone opening must be positive")


@dataclass
class SplittingEstimate:
    base_points: np.ndarray  # (K, 2) cross-section points
    e_s_direction: np.ndarray  # (K, 3)
    e_c_plane: np.ndarray  # (K, 3, 2), orthonormal columns
    sigma_center: np.ndarray  # (K, 2) center direction inside the cross-section
    contraction: np.ndarray  # (K,) |DL e_s| per return
    lambda_prime: float
    worst_contraction: float
    worst_domination: float
    C_est: float
    min_angle: float
    euclidean_contraction: float = math.nan
    euclidean_domination: float = math.nan
    metric_horizon: int = 1

    def to_dict(self) -> dict:
        return {
            "lambda_prime": self.lambda_prime,
            "worst_contraction": self.worst_contraction,
            "worst_domination_margin": self.worst_domination,
            "C_est": self.C_est,
            "min_angle_rad": self.min_angle,
            "euclidean_contraction": self.euclidean_contraction,
            "euclidean_domination": self.euclidean_domination,
            "metric_horizon": self.metric_horizon,
            "n_samples": int(len(self.base_points)),
        }


@dataclass
class SectionalExpansionReport:
    times: np.ndarray
    log_det: np.ndarray
    rate: float
    intercept: float
    residual: float

    @property
    def det(self) -> np.ndarray:
        return np.exp(self.log_det)

    def to_dict(self) -> dict:
        return {"sectional_rate": self.rate, "intercept": self.intercept, "residual": self.residual}


@dataclass
class ConeReport:
    invariant: bool
    margin: float
    ratios: np.ndarray = field(repr=False)

    def __bool__(self) -> bool:
        return self.invariant


# ---------------------------------------------------------------------------


def _crossings(orbit) -> np.ndarray:
    if isinstance(orbit, Trajectory):
        return orbit.crossings
    arr = np.asarray(orbit, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("orbit must be a Trajectory or rows (t, x, y)")
    return arr


def _return_jacobians(params: GeometricLorenzParams, cr: np.ndarray):
    """Ambient and cross-section derivatives of each return along the crossings."""
    if np.any(cr[:-1, 1] == 0.0):
        raise DegenerateOrbit("orbit hits Gamma")
    amb, sec = [], []
    for _, x, y in cr[:-1]:
        x1, y1, _, J = first_return(params, x, y)
        amb.append(J)
        sec.append(poincare_jacobian(params, J, State3.on_sigma(x1, y1)))
    return np.array(amb), np.array(sec)


def _center_basis(params: GeometricLorenzParams, x: float, y: float, u: np.ndarray) -> np.ndarray:
    F = vector_field(params, State3.on_sigma(x, y))
    q, _ = np.linalg.qr(np.column_stack([F, [u[0], u[1], 0.0]]))
    return q


def _split_norms(e_s: np.ndarray, Qc: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Norms of the E^s and E^c components of ``v`` in the direct sum."""
    coef = np.linalg.lstsq(np.column_stack([e_s, Qc]), v, rcond=None)[0]
    return abs(coef[0]), float(np.hypot(coef[1], coef[2]))


def estimate_splitting(
    params: GeometricLorenzParams,
    orbit,
    samples_per_return: int = 2,
    min_returns: int = 100,
    metric_horizon: int = 4,
) -> SplittingEstimate:
    """Estimate E^s and E^c along the orbit by power iteration on return derivatives.

    ``e_s`` comes from pulling a generic vector backward and ``E^c`` from the
    flow direction plus a forward-pushed vector.  ``lambda_prime`` is the worst
    of the time-one contraction on E^s and the domination ratio
    ``|DX_1 e_s| / m(DX_1 | E^c)``, taken at several points of every return.

    Rates are measured in the adapted norm ``|v|' = sum_{j < N} |DX_j v|`` with
    ``N = metric_horizon`` (``N = 1`` is the Euclidean norm).  The Euclidean
    time-one ratios are kept as ``euclidean_contraction`` and
    ``euclidean_domination``; inside the tubes the latter can reach 1.
    """
    cr = _crossings(orbit)
    n = len(cr) - 1
    if n < min_returns:
        raise DegenerateOrbit(f"need at least {min_returns} returns, got {n}")
    _, DL = _return_jacobians(params, cr)
    generic = np.array([0.6, 0.8])

    back = np.empty((n + 1, 2))
    v = generic.copy()
    back[n] = v
    for i in range(n - 1, -1, -1):
        v = np.linalg.solve(DL[i], v)
        v /= np.linalg.norm(v)
        back[i] = v
    fwd = np.empty((n + 1, 2))
    u = generic.copy()
    fwd[0] = u
    for i in range(n):
        u = DL[i] @ u
        u /= np.linalg.norm(u)
        fwd[i + 1] = u

    idx = np.arange(BURN_IN, n - BURN_IN)
    if idx.size == 0:
        raise DegenerateOrbit("orbit too short for the burn-in")
    e_s = np.column_stack([back[idx], np.zeros(len(idx))])
    e_s *= np.sign(e_s[:, 1:2])
    Qc = np.array([_center_basis(params, cr[i, 1], cr[i, 2], fwd[i]) for i in idx])
    contraction = np.abs(DL[idx, 1, 1])

    th = 2 * math.pi * np.arange(128) / 128
    circle = np.vstack([np.cos(th), np.sin(th)])
    worst_c = worst_d = eu_c = eu_d = 0.0
    min_angle = math.pi / 2
    for j, i in enumerate(idx):
        x, y = cr[i, 1], cr[i, 2]
        t_ret = cr[i + 1, 0] - cr[i, 0]
        base = State3.on_sigma(x, y)
        es, qc = e_s[j], Qc[j]
        resid = es - qc @ (qc.T @ es)
        min_angle = min(min_angle, math.asin(min(1.0, np.linalg.norm(resid))))
        for m in range(samples_per_return):
            s, J0 = flow_with_jacobian(params, base, t_ret * m / samples_per_return)
            vs = J0 @ es
            wc = J0 @ qc @ circle
            Js = [flow_with_jacobian(params, s, float(q))[1] for q in range(metric_horizon + 1)]
            ns = np.array([np.linalg.norm(J @ vs) for J in Js])
            nc = np.array([np.linalg.norm(J @ wc, axis=0) for J in Js])
            rs = ns[1:].sum() / ns[:-1].sum()
            rc = (nc[1:].sum(axis=0) / nc[:-1].sum(axis=0)).min()
            worst_c, worst_d = max(worst_c, rs), max(worst_d, rs / rc)
            eu_c = max(eu_c, ns[1] / ns[0])
            eu_d = max(eu_d, ns[1] / ns[0] / (nc[1] / nc[0]).min())
    lam = max(worst_c, worst_d)

    # C_est: smallest C with |DX_t e_s| <= C lam^t between any two crossings
    log_s = np.concatenate([[0.0], np.cumsum(np.log(np.abs(DL[:, 1, 1])))])
    g = log_s - cr[:, 0] * math.log(lam)
    C_est = float(math.exp(np.max(g - np.minimum.accumulate(g))))
    return SplittingEstimate(
        base_points=cr[idx, 1:3].copy(),
        e_s_direction=e_s,
        e_c_plane=Qc,
        sigma_center=fwd[idx],
        contraction=contraction,
        lambda_prime=float(lam),
        worst_contraction=float(worst_c),
        worst_domination=float(worst_d),
        C_est=C_est,
        min_angle=float(min_angle),
        euclidean_contraction=float(eu_c),
        euclidean_domination=float(eu_d),
        metric_horizon=metric_horizon,
    )


def _boundary_vectors(kappa: float, e_main: np.ndarray, basis: np.ndarray, n: int) -> np.ndarray:
    """Boundary of the cone ``|v_main| = kappa |v_basis|`` (one sign suffices by linearity)."""
    th = 2 * math.pi * np.arange(n) / n
    circ = basis @ np.vstack([np.cos(th), np.sin(th)])
    return (kappa * e_main[:, None] + circ).T


def verify_cone_invariance(
    params: GeometricLorenzParams,
    cone: ConeParams,
    orbit,
    T: int = 1,
    n_boundary: int = 100,
    splitting: SplittingEstimate | None = None,
) -> ConeReport:
    """Check that ``T`` returns map the cone strictly inside the cone at the image.

    Unstable and center cones are ``|v_s| <= kappa |v_c|`` and are pushed
    forward; stable cones ``|v_c| <= kappa |v_s|`` are pulled back.
    """
    if not math.isfinite(cone.kappa):
        return ConeReport(False, math.inf, np.array([math.inf]))
    cr = _crossings(orbit)
    sp = splitting or estimate_splitting(params, cr)
    amb, _ = _return_jacobians(params, cr)
    # splitting samples are crossings BURN_IN, BURN_IN + 1, ...
    K = len(sp.base_points)
    ratios = []
    for j in range(K - T):
        i = j + BURN_IN
        J = np.eye(3)
        for m in range(T):
            J = amb[i + m] @ J
        es0, qc0 = sp.e_s_direction[j], sp.e_c_plane[j]
        es1, qc1 = sp.e_s_direction[j + T], sp.e_c_plane[j + T]
        if cone.flavor == ConeFlavor.STABLE:
            # boundary |v_c| = kappa |v_s|, i.e. |v_s| = |v_c| / kappa
            V = cone.kappa * _boundary_vectors(1.0 / cone.kappa, es1, qc1, n_boundary)
            imgs = np.linalg.solve(J, V.T).T
            worst = 0.0
            for w in imgs:
                ns, nc = _split_norms(es0, qc0, w)
                worst = max(worst, nc / ns if ns > 0 else math.inf)
        else:
            V = _boundary_vectors(cone.kappa, es0, qc0, n_boundary)
            worst = 0.0
            for w in (J @ V.T).T:
                ns, nc = _split_norms(es1, qc1, w)
                worst = max(worst, ns / nc if nc > 0 else math.inf)
        ratios.append(worst / cone.kappa)
    ratios = np.array(ratios)
    margin = float(ratios.max()) if ratios.size else math.nan
    return ConeReport(bool(ratios.size and margin < 1.0), margin, ratios)


def sectional_expansion_check(
    params: GeometricLorenzParams,
    orbit,
    t_max: float,
    plane: np.ndarray | None = None,
    dt: float = 1.0,
) -> SectionalExpansionReport:
    """Area growth of a 2-plane carried by the tangent flow, with a log-linear fit.

    ``orbit`` is a start ``State3`` or anything with crossings, whose first
    crossing is used.  The default plane is spanned by the flow direction and
    ``e_x``; forward iteration pulls any plane transverse to ``e_y`` into E^c.
    ``residual`` is ``sqrt(SS_res / SS_tot)`` of the fit.
    """
    if isinstance(orbit, State3):
        s = orbit
    else:
        cr = _crossings(orbit)
        s = State3.on_sigma(cr[0, 1], cr[0, 2])
    if plane is None:
        plane = np.column_stack([vector_field(params, s), [1.0, 0.0, 0.0]])
    frame = TangentFrame(s, np.asarray(plane, dtype=float))
    log_det = [math.log(float(np.prod(frame.reorthonormalize())))]
    times = [0.0]
    t = 0.0
    while t + dt <= t_max + 1e-12:
        s, J = flow_with_jacobian(params, frame.base, dt)
        frame = TangentFrame(s, J @ frame.vectors)
        t += dt
        log_det.append(log_det[-1] + math.log(float(np.prod(frame.reorthonormalize()))))
        times.append(t)
    # the first entry measures the starting area only
    log_det = np.array(log_det) - log_det[0]
    times = np.array(times)
    if len(times) < 2:
        return SectionalExpansionReport(times, log_det, math.nan, 0.0, math.nan)
    rate, icpt = np.polyfit(times, log_det, 1)
    ss_res = float(np.sum((log_det - (rate * times + icpt)) ** 2))
    ss_tot = float(np.sum((log_det - log_det.mean()) ** 2))
    resid = math.sqrt(ss_res / ss_tot) if ss_tot > 0 else 0.0
    return SectionalExpansionReport(times, log_det, float(rate), float(icpt), resid)


def lyapunov_spectrum(params: GeometricLorenzParams, x0: float, y0: float, n_returns: int) -> np.ndarray:
    """QR estimate of the three exponents along a cross-section orbit (descending)."""
    q = np.eye(3)
    logs = np.zeros(3)
    x, y, total = x0, y0, 0.0
    for _ in range(n_returns):
        x, y, t, J = first_return(params, x, y)
        q, r = np.linalg.qr(J @ q)
        logs += np.log(np.abs(np.diag(r)))
        total += t
    return np.sort(logs / total)[::-1]


def check_tangency_unstable_in_center(
    params: GeometricLorenzParams,
    periodic: PeriodicPoint,
    kappa: float = 1.0,
    n_samples: int = 100,
    stable_perturbation: float = 0.0,
    curve=None,
) -> tuple[bool, float]:
    """Whether the tangent of W^u(p) lies in the center cone at ``n_samples`` points.

    The tangent ``(1, g'(x))`` is split along the cross-section center
    direction and ``e_y``; ``stable_perturbation`` adds that multiple of
    ``e_y`` (normalised to the tangent length) as a negative control.
    Returns ``(inside, worst ratio)``.
    """
    from .manifolds import center_direction, unstable_curve

    wu = curve or unstable_curve(params, periodic)
    xs = np.linspace(wu.x_min, wu.x_max, n_samples)
    worst = 0.0
    for x in xs:
        tan = np.array([1.0, wu.slope(x)])
        tan = tan / np.linalg.norm(tan) + stable_perturbation * np.array([0.0, 1.0])
        u = center_direction(params, periodic, (x, wu(x)))
        coef = np.linalg.solve(np.column_stack([u, [0.0, 1.0]]), tan)
        worst = max(worst, abs(coef[1]) / abs(coef[0]) if coef[0] != 0 else math.inf)
    return bool(worst <= kappa), float(worst)


def splitting_report(params: GeometricLorenzParams, orbit, t_max: float = 1000.0) -> dict:
    sp = estimate_splitting(params, orbit)
    cone_u = verify_cone_invariance(params, ConeParams(1.0), orbit, 1, splitting=sp)
    cone_s = verify_cone_invariance(params, ConeParams(1.0, ConeFlavor.STABLE), orbit, 1, splitting=sp)
    sec = sectional_expansion_check(params, orbit, t_max)
    out = sp.to_dict()
    out["cone_margins"] = {"unstable": cone_u.margin, "stable": cone_s.margin}
    out["sectional_rate"] = sec.rate
    out["residuals"] = {"sectional_fit": sec.residual}
    return out
