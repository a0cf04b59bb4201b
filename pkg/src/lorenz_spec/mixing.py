"""Box-graph test for topological mixing.

A finite partition is sampled, each sample is mapped once, and an edge
``i -> j`` records that some sample of box ``i`` lands in box ``j``.  On the
recurrent part of that graph, mixing at the coarse scale means every box
reaches every box in exactly ``n`` steps for all large ``n``: the graph is
strongly connected and aperiodic, and we also report the first such ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .catmap import TorusCatSystem
from .errors import InsufficientSampling
from .params import GeometricLorenzParams
from .return_map import alpha

MIN_SAMPLES = 100


@dataclass
class BoxGraph:
    n_boxes: int
    edges: np.ndarray  # (E, 2) unique pairs
    samples_per_box: int
    label: str = ""

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n_boxes))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g


@dataclass
class MixingReport:
    mixing: bool
    strongly_connected: bool
    aperiodic: bool
    period: int
    n_boxes: int
    n_recurrent: int
    n_edges: int
    exponent: int | None
    N_max: int
    label: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _graph(n: int, src: np.ndarray, dst: np.ndarray, samples: int, label: str) -> BoxGraph:
    pairs = np.unique(np.column_stack([src, dst]).astype(np.int64), axis=0)
    return BoxGraph(n, pairs, samples, label)


def lorenz_box_graph(params: GeometricLorenzParams, n_intervals: int = 1024, samples_per_box: int = MIN_SAMPLES) -> BoxGraph:
    """Graph of the one-dimensional factor on ``n_intervals`` equal pieces of [-1, 1]."""
    edges = np.linspace(-1.0, 1.0, n_intervals + 1)
    frac = (np.arange(samples_per_box) + 0.5) / samples_per_box
    x = (edges[:-1, None] + np.diff(edges)[:, None] * frac[None, :]).ravel()
    x = x[x != 0.0]
    src = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_intervals - 1)
    dst = np.clip(np.searchsorted(edges, alpha(params, x), side="right") - 1, 0, n_intervals - 1)
    return _graph(n_intervals, src, dst, samples_per_box, "lorenz-1d")


def _torus_graph(step, n_side: int, samples_per_box: int, label: str) -> BoxGraph:
    m = math.isqrt(samples_per_box)
    if m * m != samples_per_box:
        raise ValueError("samples_per_box must be a perfect square on the torus")
    frac = (np.arange(m) + 0.5) / m
    fi, fj = np.meshgrid(frac, frac, indexing="ij")
    bi, bj = np.meshgrid(np.arange(n_side), np.arange(n_side), indexing="ij")
    px = ((bi.ravel()[:, None] + fi.ravel()[None, :]) / n_side).ravel()
    py = ((bj.ravel()[:, None] + fj.ravel()[None, :]) / n_side).ravel()
    img = step(np.column_stack([px, py])) % 1.0
    src = np.floor(px * n_side).astype(int) * n_side + np.floor(py * n_side).astype(int)
    cell = np.minimum(np.floor(img * n_side).astype(int), n_side - 1)
    dst = cell[:, 0] * n_side + cell[:, 1]
    return _graph(n_side * n_side, src, dst, samples_per_box, label)


def catmap_box_graph(system: TorusCatSystem | None = None, n_side: int = 64, samples_per_box: int = MIN_SAMPLES) -> BoxGraph:
    system = system or TorusCatSystem()
    return _torus_graph(lambda p: system.step(p.T).T, n_side, samples_per_box, "catmap")


def rotation_box_graph(omega: float = 5 / 64, n_boxes: int = 64, samples_per_box: int = MIN_SAMPLES) -> BoxGraph:
    """Circle rotation by ``omega``; with ``omega * n_boxes`` an integer the graph is a single cycle."""
    edges = np.linspace(0.0, 1.0, n_boxes + 1)
    frac = (np.arange(samples_per_box) + 0.5) / samples_per_box
    x = (edges[:-1, None] + (1.0 / n_boxes) * frac[None, :]).ravel()
    src = np.repeat(np.arange(n_boxes), samples_per_box)
    dst = np.minimum(np.floor(((x + omega) % 1.0) * n_boxes).astype(int), n_boxes - 1)
    return _graph(n_boxes, src, dst, samples_per_box, "rotation")


def _recurrent_core(g: nx.DiGraph) -> nx.DiGraph:
    # drop boxes that are never entered, repeatedly; what stays carries the dynamics
    g = g.copy()
    while True:
        dead = [v for v in g if g.in_degree(v) == 0]
        if not dead:
            return g
        g.remove_nodes_from(dead)


def primitivity_exponent(g: nx.DiGraph, N_max: int) -> int | None:
    """Smallest ``n <= N_max`` with a path of length exactly ``n`` between every pair."""
    nodes = list(g)
    n = len(nodes)
    if n == 0:
        return None
    A = nx.to_scipy_sparse_array(g, nodelist=nodes, format="csr", dtype=np.float32)
    R = np.eye(n, dtype=np.float32)
    for k in range(1, N_max + 1):
        R = (np.asarray(R @ A) > 0).astype(np.float32)  # row i: boxes reachable from i in k steps
        if R.min() > 0:
            return k
    return None


def test_mixing(graph: BoxGraph, N_max: int = 64) -> MixingReport:
    if graph.samples_per_box < MIN_SAMPLES:
        raise InsufficientSampling(f"{graph.samples_per_box} samples per box, need {MIN_SAMPLES}")
    g = graph.to_networkx()
    out_deg = np.zeros(graph.n_boxes, dtype=int)
    np.add.at(out_deg, graph.edges[:, 0], 1)
    if (out_deg == 0).any():
        raise InsufficientSampling(f"{int((out_deg == 0).sum())} boxes have no outgoing sample")
    core = _recurrent_core(g)
    strong = bool(core.number_of_nodes() > 0 and nx.is_strongly_connected(core))
    period = _period(core) if strong else 0
    aperiodic = strong and period == 1
    exponent = primitivity_exponent(core, N_max) if aperiodic else None
    return MixingReport(
        mixing=bool(aperiodic and exponent is not None),
        strongly_connected=strong,
        aperiodic=bool(aperiodic),
        period=int(period),
        n_boxes=graph.n_boxes,
        n_recurrent=core.number_of_nodes(),
        n_edges=int(len(graph.edges)),
        exponent=exponent,
        N_max=N_max,
        label=graph.label,
    )


test_mixing.__test__ = False  # not a pytest test


def _period(g: nx.DiGraph) -> int:
    """gcd of cycle lengths, from BFS levels (edge u->v contributes level(u)+1-level(v))."""
    root = next(iter(g))
    level = nx.single_source_shortest_path_length(g, root)
    d = 0
    for u, v in g.edges():
        d = math.gcd(d, level[u] + 1 - level[v])
    return abs(d)
