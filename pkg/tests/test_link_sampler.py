import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopperc.graphs import build_graph, cycle_graph, path_graph
from loopperc.link_sampler import (
    Configuration,
    ConfigurationError,
    Mark,
    ModelParams,
    VertexEvents,
    count_links_in,
    empty_edge,
    read_configuration,
    sample_conditioned_nonempty,
    sample_configuration,
    truncate,
    write_configuration,
)
from loopperc.loops import loop_count, trace_loops


def _sigma3(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


def test_model_params_validation():
    for beta, u in ((0.0, 0.5), (-1, 0.5), (math.inf, 0.5), (1.0, 1.5), (1.0, -0.1)):
        with pytest.raises(ConfigurationError):
            ModelParams(beta, u)


def test_tiny_beta_mostly_empty():
    g = build_graph("torus:2,16")
    c = sample_configuration(g, ModelParams(1e-9, 1.0), np.random.default_rng(0))
    assert c.n_links == 0


def test_empty_probability_at_beta_one():
    g = build_graph("torus:2,50")  # 5000 edges
    rng = np.random.default_rng(1)
    empty = sum(int((sample_configuration(g, ModelParams(1.0, 1.0), rng).counts == 0).sum())
                for _ in range(20))
    n = 20 * g.edge_count
    assert abs(empty / n - math.exp(-1)) < _sigma3(math.exp(-1), n)


def test_u_one_all_crosses_and_mark_frequency():
    g = build_graph("torus:2,20")
    rng = np.random.default_rng(2)
    assert np.all(sample_configuration(g, ModelParams(2.0, 1.0), rng).marks == Mark.CROSS)
    assert np.all(sample_configuration(g, ModelParams(2.0, 0.0), rng).marks == Mark.DOUBLE_BAR)
    c = sample_configuration(g, ModelParams(5.0, 0.3), rng)
    assert abs(c.marks.mean() - 0.3) < _sigma3(0.3, c.n_links)


def test_sampling_reproducible():
    g = build_graph("hypercube:4")
    a = sample_configuration(g, ModelParams(1.3, 0.5), np.random.default_rng(9))
    b = sample_configuration(g, ModelParams(1.3, 0.5), np.random.default_rng(9))
    assert a == b
    assert a.heights.tobytes() == b.heights.tobytes()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), beta=st.floats(0.01, 4.0), u=st.floats(0, 1))
def test_heights_sorted_and_tie_free(seed, beta, u):
    g = build_graph("torus:2,4")
    c = sample_configuration(g, ModelParams(beta, u), np.random.default_rng(seed))
    for e in range(g.edge_count):
        h = c.heights[c.ptr[e]:c.ptr[e + 1]]
        assert np.all(np.diff(h) > 0)
        assert np.all((h >= 0) & (h < beta))
    VertexEvents(g, c)


def test_count_links_in_half_open():
    p = ModelParams(1.0, 1.0)
    c = Configuration.from_links(2, p, {0: [(0.2, "C"), (0.5, "C")], 1: [(0.1, "C"), (0.4, "D"), (0.9, "C")]})
    empty = Configuration.empty(1, p)
    assert count_links_in(empty, 0, 0.1, 0.9) == 0
    assert count_links_in(c, 0, 0.2, 0.5) == 1
    assert count_links_in(c, 1, 0.0, 0.95) == 3
    with pytest.raises(ConfigurationError):
        count_links_in(c, 0, 0.5, 0.5)
    with pytest.raises(ConfigurationError):
        count_links_in(c, 5, 0.1, 0.2)


def test_conditioned_nonempty_statistics():
    g = build_graph("torus:2,100")  # 20000 edges
    rng = np.random.default_rng(3)
    counts = np.concatenate([
        sample_conditioned_nonempty(g, range(g.edge_count), ModelParams(1.0, 1.0), rng).counts
        for _ in range(5)
    ])
    assert counts.min() >= 1
    n = len(counts)
    mean = 1 / (1 - math.exp(-1))
    var = (1 + 1) * mean - mean**2  # E[N^2] = (lam + lam^2)/(1-e^-lam) with lam = 1
    assert abs(counts.mean() - mean) < 3 * math.sqrt(var / n)
    p2 = (math.exp(-1) / 2) / (1 - math.exp(-1))
    assert abs(np.mean(counts == 2) - p2) < _sigma3(p2, n)


def test_conditioned_nonempty_leaves_others_empty():
    g = build_graph("torus:2,6")
    c = sample_conditioned_nonempty(g, [0, 5, 7], ModelParams(0.5, 1.0), np.random.default_rng(0))
    assert set(np.flatnonzero(c.counts).tolist()) == {0, 5, 7}
    with pytest.raises(ConfigurationError):
        sample_conditioned_nonempty(g, [], ModelParams(0.5, 1.0), np.random.default_rng(0))


def test_conditioned_first_height_uniform_when_beta_small():
    # given one point on a short interval, its height is close to uniform
    g = path_graph(2)
    rng = np.random.default_rng(4)
    h = np.array([sample_conditioned_nonempty(g, [0], ModelParams(0.01, 1.0), rng).heights[0]
                  for _ in range(4000)])
    assert abs(h.mean() / 0.01 - 0.5) < 0.03


def test_empty_edge():
    g = path_graph(2)
    c = Configuration.from_links(1, ModelParams(1.0, 1.0), {0: [(0.3, "C"), (0.6, "D")]})
    once = empty_edge(c, 0)
    assert empty_edge(once, 0) == once
    assert c.n_links - once.n_links == 2
    assert loop_count(trace_loops(g, once)) == 2


def test_truncate_couples_monotonically():
    g = build_graph("torus:2,8")
    c = sample_configuration(g, ModelParams(2.0, 0.7), np.random.default_rng(5))
    lo, hi = truncate(c, 0.5), truncate(c, 1.2)
    assert np.all(lo.counts <= hi.counts)
    assert np.all((lo.counts > 0) <= (hi.counts > 0))
    assert truncate(c, 2.0) == c
    with pytest.raises(ConfigurationError):
        truncate(c, 3.0)


def test_configuration_validation():
    p = ModelParams(1.0, 1.0)
    with pytest.raises(ConfigurationError):
        Configuration(p, [0, 2], [0.5, 0.3], [1, 1])
    with pytest.raises(ConfigurationError):
        Configuration(p, [0, 1], [1.5], [1])
    with pytest.raises(ConfigurationError):
        Configuration(p, [0, 1], [0.5], [3])


def test_vertex_ties_rejected():
    g = path_graph(3)
    c = Configuration.from_links(2, ModelParams(1.0, 1.0), {0: [(0.5, "C")], 1: [(0.5, "C")]})
    with pytest.raises(ConfigurationError):
        VertexEvents(g, c)


def test_serialisation_roundtrip(tmp_path):
    g = cycle_graph(12)
    c = sample_configuration(g, ModelParams(1.7, 0.4), np.random.default_rng(6))
    path = tmp_path / "c.txt"
    write_configuration(c, path, seed=6, graph_hash=g.graph_hash())
    back, header = read_configuration(path)
    assert back == c
    assert header["seed"] == "6" and header["graph_hash"] == g.graph_hash()


def test_read_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("# beta=1.0 u=1.0 edges=2\n0 0.5 X\n")
    with pytest.raises(ConfigurationError):
        read_configuration(bad)
    with pytest.raises(ConfigurationError, match="missing"):
        read_configuration(tmp_path / "missing.txt")
