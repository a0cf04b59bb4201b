import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorenz_spec.errors import DomainGamma, NoneFound
from lorenz_spec.return_map import (
    Itinerary,
    alpha,
    alpha_prime,
    beta,
    cylinder,
    find_periodic,
    has_fixed_point,
    inverse_L,
    iterate,
    itinerary,
    jacobian_L,
    lowest_period_orbit,
    orbit_points,
    periodic_catalog_csv,
    sigma_orbit,
)

xs = st.floats(1e-6, 1.0).flatmap(lambda m: st.sampled_from([m, -m]))


def test_limits_at_gamma(params):
    assert abs(alpha(params, 1e-12) + 1.0) < 1e-6
    assert abs(alpha(params, -1e-12) - 1.0) < 1e-6
    assert alpha_prime(params, 1e-6) > 20
    assert alpha(params, 1.0) == pytest.approx(0.9)


def test_gamma_raises(params):
    with pytest.raises(DomainGamma):
        alpha(params, 0.0)
    with pytest.raises(DomainGamma):
        beta(params, np.array([0.1, 0.0]), 0.0)


@given(xs)
def test_alpha_odd_and_expanding(params, x):
    assert alpha(params, -x) == pytest.approx(-alpha(params, x))
    assert alpha_prime(params, x) > math.sqrt(2)


@given(xs, st.floats(-1, 1), st.floats(-1, 1))
def test_y_contraction(params, x, y1, y2):
    d = abs(beta(params, x, y1) - beta(params, x, y2))
    assert d <= params.b * abs(x) ** (params.lambda2 / params.lambda1) * abs(y1 - y2) + 1e-15


@given(xs, st.floats(-0.99, 0.99))
def test_jacobian_vs_finite_difference(params, x, y):
    if abs(x) < 1e-3:
        return
    h = 1e-5 * abs(x)  # central differences: O(h^2) truncation, roundoff ~1e-16/h
    J = jacobian_L(params, x, y)
    dx = [(alpha(params, x + h) - alpha(params, x - h)) / (2 * h), (beta(params, x + h, y) - beta(params, x - h, y)) / (2 * h)]
    assert J[0, 0] == pytest.approx(dx[0], rel=1e-5)
    assert J[1, 0] == pytest.approx(dx[1], rel=1e-5, abs=1e-9)


@given(xs, st.floats(-0.99, 0.99))
def test_inverse_branch(params, x, y):
    p1 = (alpha(params, x), beta(params, x, y))
    back = inverse_L(params, int(np.sign(x)), p1)
    assert back[0] == pytest.approx(x, rel=1e-9, abs=1e-12)
    if abs(x) > 1e-3:
        assert back[1] == pytest.approx(y, abs=1e-7)


def test_no_fixed_point(params):
    # alpha(x) = x has no root: on (0, 1] alpha(x) - x < 0 for k = 1.9
    grid = np.linspace(1e-9, 1, 100001)
    assert np.all(alpha(params, grid) < grid)
    assert not has_fixed_point(params)
    with pytest.raises(NoneFound):
        find_periodic(params, 1)


@pytest.mark.parametrize("n,count", [(2, 2), (3, 6), (4, 12)])
def test_periodic_counts(params, n, count):
    # primitive words of the full 2-shift: 2, 6, 12 points; all cylinders are realised
    assert len(find_periodic(params, n)) == count


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_periodic_points_close_up(params, n):
    for q in find_periodic(params, n):
        pts = iterate(params, (q.x_star, q.y_star), n)
        assert np.allclose(pts[-1], pts[0], atol=1e-9)
        assert itinerary(params, (q.x_star, q.y_star), n) == q.itinerary
        t = sigma_orbit(params, q.x_star, q.y_star, n)[-1, 0]
        assert t == pytest.approx(q.flow_period)


def test_lowest_period_orbit(params):
    q = lowest_period_orbit(params)
    assert q.period_n == 2 and q.x_star > 0
    assert str(q.itinerary) == "+-"
    assert np.allclose(orbit_points(params, q)[1], [-q.x_star, -q.y_star])


def test_cylinder_contains_orbit(params):
    for q in find_periodic(params, 4):
        lo, hi = cylinder(params, q.itinerary)
        assert lo <= q.x_star <= hi


def test_itinerary_text():
    w = Itinerary.parse("+-+")
    assert str(w) == "+-+" and w.is_primitive()
    assert not Itinerary.parse("+-+-").is_primitive()


def test_catalog_csv(params, tmp_path):
    pts = find_periodic(params, 3)
    periodic_catalog_csv(pts, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("n,x_star") and len(lines) == len(pts) + 1
