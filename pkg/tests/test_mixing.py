import networkx as nx
import numpy as np
import pytest

from lorenz_spec.errors import InsufficientSampling
from lorenz_spec.mixing import (
    BoxGraph,
    catmap_box_graph,
    lorenz_box_graph,
    primitivity_exponent,
    rotation_box_graph,
    test_mixing as check_mixing,
)


def test_lorenz_factor_mixing(params):
    rep = check_mixing(lorenz_box_graph(params, 1024))
    assert rep.mixing and rep.period == 1 and rep.exponent is not None


def test_catmap_mixing():
    rep = check_mixing(catmap_box_graph())
    assert rep.mixing and rep.n_recurrent == 64 * 64


def test_rotation_not_mixing():
    rep = check_mixing(rotation_box_graph(5 / 64, 64))
    assert rep.strongly_connected and not rep.mixing
    assert rep.period == 64


def test_period_matches_networkx_on_cycle_with_chord():
    # cycles of lengths 4 and 6 give period 2
    g = BoxGraph(6, np.array([[0, 1], [1, 2], [2, 3], [3, 0], [3, 4], [4, 5], [5, 0]]), 100)
    rep = check_mixing(g)
    assert not nx.is_aperiodic(g.to_networkx())
    assert rep.period == 2 and not rep.mixing


def test_primitive_exponent_small_example():
    # Wielandt's extremal graph on n = 3 nodes: exponent (n - 1)^2 + 1 = 5
    g = nx.DiGraph([(0, 1), (1, 0), (1, 2), (2, 0)])
    assert primitivity_exponent(g, 20) == 5
    assert primitivity_exponent(g, 4) is None


def test_sink_box_raises():
    g = BoxGraph(3, np.array([[0, 1], [1, 2]]), 100)
    with pytest.raises(InsufficientSampling):
        check_mixing(g)


def test_too_few_samples_raises(params):
    with pytest.raises(InsufficientSampling):
        check_mixing(lorenz_box_graph(params, 64, samples_per_box=10))
