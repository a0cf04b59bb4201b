"""First-return map ``L(x, y) = (alpha(x), beta(x, y))`` on the cross-section."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .errors import DomainGamma, NoneFound
from .flow import CrossSectionPoint
from .params import GeometricLorenzParams, ReturnMapParams

BISECTION_TOL = 1e-12


def _rm(params) -> ReturnMapParams:
    if isinstance(params, GeometricLorenzParams):
        return params.return_map_params()
    return params


def _guard(x) -> None:
    if np.any(np.asarray(x) == 0.0):
        raise DomainGamma("x = 0 lies on Gamma, where the return map is undefined")


def alpha(params, x):
    """One-dimensional factor; accepts scalars or arrays."""
    _guard(x)
    p = _rm(params)
    out = np.sign(x) * (p.k * np.abs(x) ** p.a - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def alpha_prime(params, x):
    _guard(x)
    p = _rm(params)
    out = p.k * p.a * np.abs(x) ** (p.a - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def beta(params, x, y):
    _guard(x)
    p = _rm(params)
    out = np.sign(x) * p.c + p.b * np.asarray(y) * np.abs(x) ** p.exponent_y
    return float(out) if np.ndim(out) == 0 else out


def apply_L(params, p: CrossSectionPoint | tuple[float, float]) -> CrossSectionPoint:
    x, y = p
    return CrossSectionPoint(alpha(params, x), beta(params, x, y))


def jacobian_L(params, x: float, y: float) -> np.ndarray:
    """2x2 derivative of the return map at ``(x, y)``."""
    _guard(x)
    p = _rm(params)
    ax = abs(x)
    dbdx = p.b * y * p.exponent_y * ax ** (p.exponent_y - 1.0) * math.copysign(1.0, x)
    return np.array([[alpha_prime(p, x), 0.0], [dbdx, p.b * ax**p.exponent_y]])


def iterate(params, p, n: int) -> np.ndarray:
    """Rows ``(x_i, y_i)`` for ``i = 0..n``."""
    out = np.empty((n + 1, 2))
    x, y = p
    out[0] = x, y
    for i in range(n):
        x, y = alpha(params, x), beta(params, x, y)
        out[i + 1] = x, y
    return out


@dataclass(frozen=True)
class Itinerary:
    word: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.word)

    @classmethod
    def parse(cls, text: str) -> "Itinerary":
        return cls(tuple(1 if ch == "+" else -1 for ch in text))

    def is_primitive(self) -> bool:
        n = len(self.word)
        return all(self.word != self.word[d:] + self.word[:d] for d in range(1, n) if n % d == 0)


def itinerary(params, p, n: int) -> Itinerary:
    pts = iterate(params, p, n - 1) if n > 0 else np.zeros((0, 2))
    return Itinerary(tuple(int(np.sign(x)) for x in pts[:, 0]))


@dataclass(frozen=True)
class PeriodicPoint:
    x_star: float
    y_star: float
    period_n: int
    flow_period: float
    itinerary: Itinerary

    @property
    def point(self) -> CrossSectionPoint:
        return CrossSectionPoint(self.x_star, self.y_star)


# ---------------------------------------------------------------------------
# periodic orbits


def _branch(p: ReturnMapParams, sign: int, x):
    # the sign is fixed, so x = 0 evaluates to the one-sided limit -sign
    return sign * (p.k * np.abs(x) ** p.a - 1.0)


def _branch_inverse(p: ReturnMapParams, sign: int, lo: float, hi: float):
    """Preimage of ``[lo, hi]`` under the branch on the side ``sign``, or None."""
    # on the + side the branch maps [0, 1] increasingly onto [-1, k - 1]
    if sign < 0:
        lo, hi = -hi, -lo
    lo, hi = max(lo, -1.0), min(hi, p.k - 1.0)
    if lo > hi:
        return None
    a, b = ((lo + 1.0) / p.k) ** (1.0 / p.a), ((hi + 1.0) / p.k) ** (1.0 / p.a)
    return (a, b) if sign > 0 else (-b, -a)


def cylinder(params, word: Itinerary) -> tuple[float, float] | None:
    """Closed interval of x whose first ``len(word)`` signs follow ``word``."""
    p = _rm(params)
    lo, hi = -1.0, 1.0
    for s in reversed(word.word):
        got = _branch_inverse(p, s, lo, hi)
        if got is None:
            return None
        lo, hi = got
    return lo, hi


def _compose(p: ReturnMapParams, word: Itinerary, x: float) -> float:
    for s in word.word:
        x = _branch(p, s, x)
    return x


def _cycle_y(p: ReturnMapParams, xs: list[float]) -> float:
    # y -> A y + B along the cycle; A < 1 so the fixed point is unique
    A, B = 1.0, 0.0
    for x in xs:
        m = p.b * abs(x) ** p.exponent_y
        A, B = m * A, m * B + math.copysign(p.c, x)
    return B / (1.0 - A)


def _bisect(f, lo: float, hi: float, tol: float = BISECTION_TOL) -> float | None:
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def has_fixed_point(params) -> bool:
    """Whether alpha has a period-1 point; scanned on a fine grid plus the cylinder test."""
    try:
        return bool(find_periodic(params, 1, require=False))
    except NoneFound:
        return False


def find_periodic(params: GeometricLorenzParams, n: int, require: bool = True) -> list[PeriodicPoint]:
    """All points of prime period ``n``, sorted by ``x_star``.

    Each branch of ``alpha^n`` is monotone on its cylinder with slope above
    ``sqrt(2)^n``, so ``alpha^n(x) - x`` has at most one root there and
    bisection is safe even where the derivative blows up.
    """
    if n < 1:
        raise ValueError("n must be positive")
    p = _rm(params)
    found: list[PeriodicPoint] = []
    for letters in product((1, -1), repeat=n):
        word = Itinerary(letters)
        if not word.is_primitive():
            continue
        cyl = cylinder(p, word)
        if cyl is None:
            continue
        x = _bisect(lambda t: _compose(p, word, t) - t, *cyl)
        if x is None:
            continue
        xs = [x]
        for s in letters[:-1]:
            xs.append(_branch(p, s, xs[-1]))
        if any(abs(v) < 1e-14 for v in xs) or itinerary(p, (x, 0.0), n) != word:
            continue
        found.append(_make_point(params, p, word, xs))
    if not found and require:
        raise NoneFound(f"no orbit of prime period {n}")
    return sorted(found, key=lambda q: q.x_star)


def _make_point(params, p: ReturnMapParams, word: Itinerary, xs: list[float]) -> PeriodicPoint:
    if isinstance(params, GeometricLorenzParams):
        l1, tau = params.lambda1, params.tau_tube
    else:
        l1, tau = 1.0, 1.0
    period = sum(-math.log(abs(v)) / l1 + tau for v in xs)
    return PeriodicPoint(float(xs[0]), float(_cycle_y(p, xs)), len(word), float(period), word)


def lowest_period_orbit(params: GeometricLorenzParams, n_max: int = 12) -> PeriodicPoint:
    """The periodic point used downstream: smallest period, then positive x, then smallest x."""
    for n in range(1, n_max + 1):
        pts = find_periodic(params, n, require=False)
        if pts:
            pos = [q for q in pts if q.x_star > 0]
            return (pos or pts)[0]
    raise NoneFound(f"no periodic orbit up to period {n_max}")


def orbit_points(params, q: PeriodicPoint) -> np.ndarray:
    return iterate(params, (q.x_star, q.y_star), q.period_n - 1)


def periodic_catalog_csv(points: list[PeriodicPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "x_star", "y_star", "flow_period", "itinerary"])
        for q in points:
            w.writerow([q.period_n, repr(q.x_star), repr(q.y_star), repr(q.flow_period), str(q.itinerary)])


def inverse_L(params, sign: int, p) -> CrossSectionPoint:
    """Preimage of ``p`` under the branch of the return map on the side ``sign``."""
    rm = _rm(params)
    x1, y1 = p
    got = _branch_inverse(rm, sign, x1, x1)
    if got is None:
        raise DomainGamma(f"x = {x1} has no preimage on the {'+' if sign > 0 else '-'} side")
    x = got[0]
    if x == 0.0:
        raise DomainGamma("preimage lies on Gamma")
    return CrossSectionPoint(x, (y1 - sign * rm.c) / (rm.b * abs(x) ** rm.exponent_y))


def sigma_orbit(params: GeometricLorenzParams, x0: float, y0: float, n_returns: int) -> np.ndarray:
    """Rows ``(t, x, y)`` of the first ``n_returns + 1`` cross-section visits, starting at time 0."""
    out = np.empty((n_returns + 1, 3))
    t, x, y = 0.0, float(x0), float(y0)
    out[0] = t, x, y
    for i in range(n_returns):
        if x == 0.0:
            raise DomainGamma(f"orbit hits Gamma after {i} returns")
        t += -math.log(abs(x)) / params.lambda1 + params.tau_tube
        x, y = alpha(params, x), beta(params, x, y)
        out[i + 1] = t, x, y
    return out
