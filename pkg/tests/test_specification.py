import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorenz_spec.catmap import CatInstance, TorusCatSystem
from lorenz_spec.manifolds import find_gap_interval, project_separatrix
from lorenz_spec.results import Outcome
from lorenz_spec.specification import (
    LorenzGrid,
    Segment,
    SpecificationInstance,
    in_bowen_ball,
    obstruction_instance,
    recheck,
    search_gluing,
)


@pytest.fixture(scope="module")
def cert(chart):
    return find_gap_interval(project_separatrix(chart, 50.0), chart, 1e-4)


def test_instance_validation():
    with pytest.raises(ValueError):
        SpecificationInstance((Segment(2.0, 1.0, (0.1, 0.1)),), 0.1, 0.0)
    with pytest.raises(ValueError):
        SpecificationInstance((Segment(0.0, 1.0, (0.1, 0.1)), Segment(1.5, 2.0, (0.2, 0.2))), 0.1, 1.0)
    with pytest.raises(ValueError):
        SpecificationInstance((), 0.1, 0.0)


def test_instance_json_roundtrip(tmp_path):
    inst = obstruction_instance((0.29, -0.58), 50.0, 0.01)
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(inst.to_dict()))
    assert SpecificationInstance.load(path) == inst


def test_orbit_segments_are_genuine(params):
    inst = SpecificationInstance((Segment(0.0, 8.0, (0.3, 0.1)), Segment(10.0, 15.0, (-0.4, 0.2))), 0.1, 2.0)
    assert inst.check_genuine(params) < 1e-8


def test_bowen_ball_reflexive(params):
    ok, dev = in_bowen_ball(params, (0.3, 0.1), (0.3, 0.1), 10.0, 0.01)
    assert ok and dev == 0.0


@given(st.floats(-0.02, 0.02))
def test_stable_offsets_stay_unstable_offsets_leave(params, dy):
    ok, dev = in_bowen_ball(params, (0.3, 0.1 + dy), (0.3, 0.1), 15.0, 0.05)
    assert ok and dev <= abs(dy) + 1e-12
    ok2, _ = in_bowen_ball(params, (0.3 + 0.01, 0.1), (0.3, 0.1), 15.0, 0.05)
    assert not ok2


def test_single_segment_grid_point_is_witness(params):
    grid = LorenzGrid(h=1e-2)
    z = (float(grid.coord(130)), float(grid.coord(70)))
    inst = SpecificationInstance((Segment(0.0, 10.0, z),), 1e-3, 0.0)
    res = search_gluing(params, inst, grid)
    assert res.outcome is Outcome.WITNESS
    assert res.point == pytest.approx(z) and res.deviation == 0.0


def test_obstruction_exhausts_below_threshold(params, chart, cert):
    eps = 0.5 * cert.d_star / (2 * chart.L_const)
    res = search_gluing(params, obstruction_instance(cert.w_point, 50.0, eps), LorenzGrid(h=1e-4), separatrix_points=cert.separatrix_points)
    assert res.outcome is Outcome.EXHAUSTED
    assert res.deviation >= eps and res.meta["min_lower_bound"] >= eps
    assert res.meta["grid_points"] == 20001**2


def test_coarser_grid_also_exhausts(params, chart, cert):
    # density doubling must not flip the verdict; check the coarse side
    eps = 0.5 * cert.d_star / (2 * chart.L_const)
    res = search_gluing(params, obstruction_instance(cert.w_point, 50.0, eps), LorenzGrid(h=2e-4), separatrix_points=cert.separatrix_points)
    assert res.outcome is Outcome.EXHAUSTED and res.meta["min_lower_bound"] >= eps


def test_loose_eps_finds_sound_witness(params, cert):
    inst = obstruction_instance(cert.w_point, 50.0, 10 * cert.d_star)
    res = search_gluing(params, inst, LorenzGrid(h=1e-4), separatrix_points=cert.separatrix_points)
    assert res.is_witness and res.deviation < inst.eps
    assert res.meta["recheck_deviation"] < inst.eps * 1.01
    assert recheck(params, inst, res.point, cert.separatrix_points, refine=0.25) < inst.eps * 1.01


def test_singularity_needs_separatrix(params):
    with pytest.raises(ValueError):
        search_gluing(params, obstruction_instance((0.3, 0.1), 50.0, 0.01), LorenzGrid(h=1e-2))


def test_dispatch_to_catmap():
    res = search_gluing(TorusCatSystem(), CatInstance((1, 2), None, 5, 0, 0, 0.05))
    assert res.is_witness
