import math

import numpy as np
import pytest

from lorenz_spec.flow import State3
from lorenz_spec.hyperbolicity import (
    ConeFlavor,
    ConeParams,
    TangentFrame,
    check_tangency_unstable_in_center,
    estimate_splitting,
    lyapunov_spectrum,
    sectional_expansion_check,
    verify_cone_invariance,
)
from lorenz_spec.return_map import alpha_prime, sigma_orbit


@pytest.fixture(scope="module")
def orbit(params):
    return sigma_orbit(params, 0.3, 0.1, 1500)


@pytest.fixture(scope="module")
def splitting(params, orbit):
    return estimate_splitting(params, orbit)


def test_splitting_contracts_and_dominates(splitting):
    assert splitting.lambda_prime < 1
    assert splitting.worst_domination < 1
    assert splitting.worst_contraction < 1
    assert splitting.min_angle > 0.1


def test_stable_direction_is_vertical(splitting):
    # the return map preserves vertical leaves, so E^s is e_y on the cross-section
    e = np.asarray(splitting.e_s_direction)
    e = e / np.linalg.norm(e, axis=-1, keepdims=True)
    assert np.all(np.abs(e[..., 0]) < 1e-6)


def test_unstable_cone_invariant(params, orbit, splitting):
    rep = verify_cone_invariance(params, ConeParams(1.0), orbit, 1, splitting=splitting)
    assert rep.invariant and rep.margin < 1


def test_stable_cone_invariant(params, orbit, splitting):
    rep = verify_cone_invariance(params, ConeParams(1.0, ConeFlavor.STABLE), orbit, 1, splitting=splitting)
    assert rep.invariant and rep.margin < 1


def test_degenerate_cone_rejected(params, orbit, splitting):
    assert not verify_cone_invariance(params, ConeParams(math.inf), orbit, 1, splitting=splitting)


def test_sectional_rate_matches_one_dimensional_exponent(params, orbit):
    # independent oracle: log-derivative of the 1D factor averaged along the orbit per unit time
    xs = orbit[100:, 1]
    rate_1d = np.log(alpha_prime(params, xs[:-1])).sum() / (orbit[-1, 0] - orbit[100, 0])
    rep = sectional_expansion_check(params, orbit, 1000.0)
    assert rep.rate > 0 and rep.residual < 0.05
    assert rep.rate == pytest.approx(rate_1d, rel=0.05)


def test_lyapunov_spectrum_signature(params):
    short, ex = lyapunov_spectrum(params, 0.3, 0.1, 500), lyapunov_spectrum(params, 0.3, 0.1, 2000)
    assert ex[0] > 0
    assert ex.sum() < 0
    # the flow-direction exponent is zero; its finite-time estimate decays like 1/T
    assert abs(ex[1]) < 0.02
    assert abs(ex[1]) < 0.5 * abs(short[1])


def test_unstable_manifold_in_center_cone(params, periodic):
    ok, worst = check_tangency_unstable_in_center(params, periodic)
    assert ok and worst < 1e-8


def test_stable_perturbation_leaves_center_cone(params, periodic):
    ok, worst = check_tangency_unstable_in_center(params, periodic, stable_perturbation=2.0)
    assert not ok and worst > 1


def test_tangent_frame_reorthonormalize():
    fr = TangentFrame(State3.on_sigma(0.3, 0.1), np.array([[2.0, 1.0], [0.0, 3.0], [0.0, 0.0]]))
    r = fr.reorthonormalize()
    assert np.allclose(fr.vectors.T @ fr.vectors, np.eye(2))
    assert r[0] == pytest.approx(2.0)
