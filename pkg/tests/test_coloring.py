import math

import numpy as np
import pytest

from loopperc.coloring import (
    Color,
    color_edges,
    diagnostics,
    is_pivotal,
    pivotal_by_perturbation,
    union_length,
)
from loopperc.graphs import build_graph, from_edges
from loopperc.link_sampler import Configuration, ModelParams, empty_edge, sample_configuration
from loopperc.loops import trace_loops
from loopperc.reference_oracles import three_edge_example, pivotal_example, single_edge_graph


def test_three_edge_example():
    g, c = three_edge_example()
    assert [Color(x) for x in color_edges(g, c).color] == [Color.RED, Color.BLUE, Color.BLUE]


def test_empty_all_uncoloured():
    g = build_graph("torus:2,4")
    col = color_edges(g, Configuration.empty(g.edge_count, ModelParams(1.0, 1.0)))
    assert col.counts() == {"red": 0, "blue": 0, "uncoloured": g.edge_count}


def test_isolated_edge_two_crosses_red():
    c = Configuration.from_links(1, ModelParams(1.0, 1.0), {0: [(0.2, "C"), (0.7, "C")]})
    assert color_edges(single_edge_graph(), c)[0] == Color.RED
    c = Configuration.from_links(1, ModelParams(1.0, 1.0), {0: [(0.2, "C"), (0.7, "D")]})
    assert color_edges(single_edge_graph(), c)[0] == Color.BLUE


def test_neighbour_just_inside_blocks():
    # ties with a shared vertex are rejected, so probe just inside and outside (a, b]
    g = from_edges(3, [(0, 1), (1, 2)])
    p = ModelParams(1.0, 1.0)
    for h, red in ((0.2 + 1e-9, False), (0.6 - 1e-9, False), (0.2 - 1e-9, True), (0.6 + 1e-9, True)):
        c = Configuration.from_links(2, p, {0: [(0.2, "C"), (0.6, "C")], 1: [(h, "D")]})
        assert color_edges(g, c).red[0] is np.bool_(red)


def test_u_zero_never_red_and_b_identity():
    g = build_graph("torus:2,8")
    rng = np.random.default_rng(0)
    for u in (0.0, 0.5, 1.0):
        for _ in range(10):
            c = sample_configuration(g, ModelParams(1.0, u), rng)
            col = color_edges(g, c)
            S = (c.counts > 0).astype(int)
            R = col.red.astype(int)
            assert np.array_equal(col.blue.astype(int), S * (1 - R))
            if u == 0:
                assert not col.red.any()


def test_red_removal_keeps_loops():
    g = build_graph("torus:2,6")
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 200:
        c = sample_configuration(g, ModelParams(1.0, 1.0), rng)
        base = trace_loops(g, c).vertex_time0_loop
        for e in np.flatnonzero(color_edges(g, c).red):
            after = trace_loops(g, empty_edge(c, int(e))).vertex_time0_loop
            # same partition of time-0 points
            assert len(set(zip(base.tolist(), after.tolist()))) == len(set(base.tolist()))
            assert len(set(after.tolist())) == len(set(base.tolist()))
            checked += 1


def test_pivotal_examples():
    for blocked, expected in ((False, True), (True, False)):
        g, c = pivotal_example(blocked)
        assert is_pivotal(g, c, 0, 1) is expected
    g, c = pivotal_example(False)
    with pytest.raises(ValueError):
        is_pivotal(g, c, 0, 2)
    one = Configuration.from_links(3, ModelParams(3.0, 1.0), {1: [(0.8, "C")]})
    assert not is_pivotal(g, one, 0, 1)


def test_pivotal_matches_perturbation():
    # the characterisation holds whenever the probe edge decides the colour
    g = from_edges(4, [(0, 1), (1, 2), (2, 3)])
    p = ModelParams(1.0, 1.0)
    rng = np.random.default_rng(2)
    for _ in range(200):
        c = sample_configuration(g, p, rng)
        c = Configuration.from_links(3, p, {e: c.links(e) for e in (1, 2)})
        if c.n(1) != 2 or not all(m == 1 for _, m in c.links(1)):
            continue
        a, b = (h for h, _ in c.links(1))
        inside = [[((a + b) / 2, 1)]]
        assert is_pivotal(g, c, 0, 1) == pivotal_by_perturbation(g, c, 0, 1, inside)


def test_union_length_and_free_time():
    assert union_length([]) == 0
    assert math.isclose(union_length([(0.2, 0.5)]), 0.3)
    assert math.isclose(union_length([(0.2, 0.5), (0.4, 0.8)]), 0.6)
    g = build_graph("torus:1,6")
    p = ModelParams(1.0, 1.0)
    c = Configuration.from_links(g.edge_count, p, {})
    assert diagnostics(g, c, 0).free_time_measure == 1.0
    e0 = 0
    nb = g.edge_neighbors(e0).tolist()
    c = Configuration.from_links(g.edge_count, p, {nb[0]: [(0.2, "C"), (0.5, "C")]})
    assert math.isclose(diagnostics(g, c, e0).free_time_measure, 0.7)
    c = Configuration.from_links(
        g.edge_count, p, {nb[0]: [(0.2, "C"), (0.5, "C")], nb[1]: [(0.4, "C"), (0.8, "C")]}
    )
    rep = diagnostics(g, c, e0)
    assert rep.red_neighbors == 2
    assert math.isclose(rep.free_time_measure, 0.4)
