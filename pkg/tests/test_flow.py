import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorenz_spec.errors import OnStableManifold
from lorenz_spec.flow import (
    State3,
    first_return,
    flow,
    flow_with_jacobian,
    in_trapping_region,
    max_speed,
    poincare_jacobian,
    sample_orbit,
    sigma_positions,
    tangent_flow,
    vector_field,
)
from lorenz_spec.return_map import alpha, beta, jacobian_L

coord = st.floats(0.01, 0.99).flatmap(lambda m: st.sampled_from([m, -m]))
ycoord = st.floats(-0.99, 0.99)


def _fd_jacobian(params, s, t, h=1e-7):
    J = np.zeros((3, 3))
    for j in range(3):
        d = np.zeros(3)
        d[j] = h
        plus = flow(params, State3(s.x + d[0], s.y + d[1], s.z + d[2]), t).xyz
        minus = flow(params, State3(s.x - d[0], s.y - d[1], s.z - d[2]), t).xyz
        J[:, j] = (plus - minus) / (2 * h)
    return J


@given(coord, ycoord)
def test_first_return_matches_closed_form(params, x, y):
    x1, y1, t_ret, _ = first_return(params, x, y)
    assert x1 == pytest.approx(alpha(params, x), abs=1e-9)
    assert y1 == pytest.approx(beta(params, x, y), abs=1e-9)
    assert t_ret == pytest.approx(-math.log(abs(x)) + params.tau_tube)


@given(coord, ycoord)
def test_return_time_lands_on_sigma(params, x, y):
    x1, y1, t_ret, _ = first_return(params, x, y)
    s = flow(params, State3.on_sigma(x, y), t_ret)
    assert np.allclose(s.xyz, [x1, y1, 1.0], atol=1e-9)


@given(coord, ycoord, st.floats(0.0, 6.0), st.floats(0.0, 6.0))
def test_semigroup(params, x, y, t1, t2):
    s = State3.on_sigma(x, y)
    a = flow(params, flow(params, s, t1), t2).xyz
    b = flow(params, s, t1 + t2).xyz
    assert np.allclose(a, b, atol=1e-9)


@given(coord, ycoord, st.floats(0.05, 3.0))
def test_backward_inverts_forward(params, x, y, t):
    s = State3.on_sigma(x, y)
    back = flow(params, flow(params, s, t), -t)
    assert np.allclose(back.xyz, s.xyz, atol=1e-8)


@pytest.mark.parametrize("x,y,t", [(0.3, 0.1, 0.5), (0.3, 0.1, 2.0), (-0.55, -0.4, 1.7), (0.8, 0.6, 3.1)])
def test_jacobian_vs_finite_differences(params, x, y, t):
    s = State3(x, y, 0.9)  # interior start, so central differences stay in the block
    _, J = flow_with_jacobian(params, s, t)
    assert np.allclose(J, _fd_jacobian(params, s, t), atol=1e-4, rtol=1e-4)


def test_flow_direction_is_invariant(params):
    s = State3.on_sigma(0.4, 0.2)
    t = 1.3
    out = flow(params, s, t)
    assert np.allclose(tangent_flow(params, s, vector_field(params, s), t), vector_field(params, out), atol=1e-8)


@given(coord, ycoord)
def test_poincare_jacobian_matches_return_map(params, x, y):
    _, _, _, J = first_return(params, x, y)
    landing = State3.on_sigma(alpha(params, x), beta(params, x, y))
    assert np.allclose(poincare_jacobian(params, J, landing), jacobian_L(params, x, y), rtol=1e-8, atol=1e-8)


def test_gamma_never_returns(params):
    with pytest.raises(OnStableManifold):
        first_return(params, 0.0, 0.3)


def test_sample_orbit_crossings_and_trapping(params):
    traj = sample_orbit(params, State3.on_sigma(0.3, 0.1), 60.0, 0.01)
    assert in_trapping_region(params, traj)
    assert len(traj.crossings) > 10
    t, x, y = traj.crossings[0]
    assert x == pytest.approx(alpha(params, 0.3), abs=1e-12)
    assert y == pytest.approx(beta(params, 0.3, 0.1), abs=1e-12)


def test_sigma_positions_agree_with_scalar_flow(params):
    xs, ys = np.array([0.3, -0.6, 0.05]), np.array([0.1, 0.5, -0.9])
    times = np.linspace(0, 12, 25)
    pos = sigma_positions(params, xs, ys, times)
    for i in range(3):
        for j, t in enumerate(times):
            assert np.allclose(pos[i, j], flow(params, State3.on_sigma(xs[i], ys[i]), t).xyz, atol=1e-9)


def test_speed_bound_dominates_samples(params):
    V = max_speed(params)
    traj = sample_orbit(params, State3.on_sigma(0.7, -0.3), 40.0, 0.001)
    steps = np.linalg.norm(np.diff(traj.xyz, axis=0), axis=1) / np.diff(traj.times)
    assert steps.max() <= V * (1 + 1e-6)


def test_backward_outside_tube_image_raises(params):
    from lorenz_spec.errors import BackwardThroughTube

    with pytest.raises(BackwardThroughTube):
        flow(params, State3.on_sigma(0.875, 0.0), -0.5)
