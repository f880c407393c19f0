import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopperc.coloring import color_edges
from loopperc.graphs import GraphSpec, build_graph, from_edges
from loopperc.link_sampler import ModelParams, sample_configuration
from loopperc.percolation import (
    bfs_components,
    bisect_crossing,
    build_clusters,
    cluster_stats,
    crossing_with_ci,
    empirical_curve,
    estimate_pc,
    sweep,
)


def _sets(comps):
    return sorted(sorted(c) for c in comps)


def test_singletons_and_full():
    g = build_graph("torus:2,4")
    f = build_clusters(g, np.zeros(g.edge_count, bool))
    st_ = cluster_stats(f, g)
    assert st_.histogram == {1: 16} and st_.largest_fraction == 1 / 16
    assert st_.wrap == (False, False)
    f = build_clusters(g, np.ones(g.edge_count, bool))
    st_ = cluster_stats(f, g)
    assert st_.largest_fraction == 1.0 and st_.wrap == (True, True)


def test_wrap_absent_off_torus():
    g = build_graph("complete:5")
    assert build_clusters(g, np.ones(g.edge_count, bool)).wrap is None
    with pytest.raises(ValueError):
        estimate_pc("complete:50", "wrap", replicas=100, rng=np.random.default_rng(0))


def test_free_boundary_never_wraps():
    g = build_graph("torus:2,5,free")
    assert build_clusters(g, np.ones(g.edge_count, bool)).wrap is None


def test_single_axis_wrap():
    # one full row of a periodic 2d torus wraps axis 0 only
    g = build_graph("torus:2,4")
    mask = np.zeros(g.edge_count, bool)
    for e, (a, b) in enumerate(g.edges.tolist()):
        if a < 4 and b < 4:
            mask[e] = True
    w = build_clusters(g, mask).wrap
    assert sum(w) == 1


def test_predicate_mask():
    g = build_graph("torus:2,4")
    f = build_clusters(g, lambda e: e % 2 == 0)
    h = build_clusters(g, np.arange(g.edge_count) % 2 == 0)
    assert np.array_equal(f.root, h.root)
    with pytest.raises(ValueError):
        build_clusters(g, np.ones(3, bool))


def test_union_find_equals_bfs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 60))
        m = int(rng.integers(0, 3 * n))
        pairs = {tuple(sorted(rng.choice(n, 2, replace=False).tolist())) for _ in range(m)}
        g = from_edges(n, sorted(pairs)) if pairs else build_graph("complete:2")
        mask = rng.random(g.edge_count) < rng.random()
        assert _sets(build_clusters(g, mask).components()) == _sets(bfs_components(g, mask))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_blue_inside_open(seed):
    g = build_graph("torus:2,8")
    c = sample_configuration(g, ModelParams(0.9, 1.0), np.random.default_rng(seed))
    col = color_edges(g, c)
    fs, fb = build_clusters(g, col.open), build_clusters(g, col.blue)
    ref = {}
    for r_b, r_s in zip(fb.root.tolist(), fs.root.tolist()):
        assert ref.setdefault(r_b, r_s) == r_s


def test_sweep_monotone_and_matches_direct():
    g = build_graph("torus:2,16")
    rng = np.random.default_rng(1)
    grid = np.linspace(0, 1, 21)
    for _ in range(10):
        u = rng.random(g.edge_count)
        largest, wrap, fw, ff = sweep(g, u, grid)
        assert np.all(np.diff(largest) >= 0)
        assert np.all(np.diff(wrap[:, 0].astype(int)) >= 0)
        for i in (3, 10, 17):
            f = build_clusters(g, u <= grid[i])
            assert largest[i] == f.size.max() or largest[i] == f.size[f.root].max()
            assert wrap[i, 0] == f.wrap[0]
        assert wrap[grid >= fw, 0].all() and not wrap[grid < fw, 0].any()


def test_wrap_separates_sub_and_supercritical():
    g = build_graph("torus:2,64")
    rng = np.random.default_rng(2)
    w = np.array([sweep(g, rng.random(g.edge_count), [0.3, 0.7])[1][:, 0] for _ in range(40)])
    assert w[:, 0].mean() < 0.1 and w[:, 1].mean() > 0.9


def test_p_one_gives_one():
    for spec in ("torus:2,10", "complete:30", "hypercube:5"):
        g = build_graph(spec)
        largest, _, _, _ = sweep(g, np.random.default_rng(3).random(g.edge_count), [1.0])
        assert largest[0] == g.vertex_count


def test_crossing_helpers():
    t = np.array([0.1, 0.2, 0.3, 0.4])
    assert empirical_curve(t, 0.25) == 0.5
    assert bisect_crossing(lambda x: float(empirical_curve(t, x)), 0.0, 1.0) == pytest.approx(0.2)
    assert bisect_crossing(lambda x: float(empirical_curve(t, x)), 0.0, 0.15) is None
    assert bisect_crossing(lambda x: float(empirical_curve(t, x)), 0.3, 1.0) is None
    est = crossing_with_ci(np.linspace(0, 1, 101), np.random.default_rng(0))
    assert est.value == pytest.approx(0.5, abs=0.011)
    assert est.ci[0] <= est.value <= est.ci[1]


def test_square_lattice_crossing_small():
    est = estimate_pc(GraphSpec.torus(2, 32), "wrap", replicas=300, rng=np.random.default_rng(4))
    assert abs(est.value - 0.5) < 0.03
    assert est.ci[0] < 0.5 < est.ci[1] or abs(est.value - 0.5) < 0.01


def test_complete_graph_giant_component():
    n = 2000
    est = estimate_pc(
        GraphSpec.complete(n), "fraction", replicas=100, rng=np.random.default_rng(5),
        c=0.1, scale=n - 1, p_max=3 / (n - 1),
    )
    assert abs(est.value - 1.0) < 0.1


def test_beta_and_p_agree():
    # p = 1 - exp(-beta): open-edge density of sampled configurations
    g = build_graph("torus:2,64")
    c = sample_configuration(g, ModelParams(math.log(2), 1.0), np.random.default_rng(6))
    p = (c.counts > 0).mean()
    assert abs(p - 0.5) < 3 * math.sqrt(0.25 / g.edge_count)
