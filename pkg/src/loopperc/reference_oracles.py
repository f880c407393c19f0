"""Slow, direct computations used to certify the fast paths.

Nothing here reuses the event index or kernels of :mod:`loopperc.loops`:
the naive tracer finds every next event by scanning all links of the
incident edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .graphs import Graph, from_edges
from .link_sampler import Configuration, Mark, ModelParams

NAIVE_LINK_CAP = 10_000


@dataclass(frozen=True)
class OracleReport:
    label: str
    expected: object
    computed: object
    passed: bool
    tolerance: float | None = None

    def __str__(self) -> str:
        tol = "exact" if self.tolerance is None else f"tol={self.tolerance:g}"
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.label}: expected={self.expected} computed={self.computed} ({tol})"


def report(label, expected, computed, tolerance=None) -> OracleReport:
    if tolerance is None:
        ok = expected == computed
    else:
        ok = abs(float(expected) - float(computed)) <= tolerance
    return OracleReport(label, expected, computed, bool(ok), tolerance)


# naive tracer --------------------------------------------------------------


class NaiveLoops:
    """Loops as lists of ``(vertex, top, direction)`` pieces.

    A piece is the vertical arc of ``vertex`` ending (at its upper end) at the
    link of height ``top``; ``top`` is ``None`` for a vertex without links.
    """

    def __init__(self, loops, time0):
        self.loops = loops
        self.time0 = time0  # vertex -> piece key of its time-0 arc

    @property
    def n_loops(self) -> int:
        return len(self.loops)

    def loop_of(self, v: int) -> set[int]:
        key = self.time0[v]
        for loop in self.loops:
            if any((x, t) == key for x, t, _ in loop):
                members = {(x, t) for x, t, _ in loop}
                return {w for w, k in self.time0.items() if k in members}
        raise AssertionError("time-0 arc not on any loop")

    def canonical(self) -> frozenset:
        return canonical_partition(self.loops)


def canonical_partition(loops) -> frozenset:
    """Relabel-free, orientation-free form of a list of oriented loops."""
    out = set()
    for loop in loops:
        fwd = frozenset(loop)
        rev = frozenset((v, t, -d) for v, t, d in loop)
        out.add(frozenset((fwd, rev)))
    return frozenset(out)


def _incident_links(g: Graph, c: Configuration, v: int):
    links = []
    for e in range(g.edge_count):
        a, b = int(g.edges[e, 0]), int(g.edges[e, 1])
        if v not in (a, b):
            continue
        other = b if a == v else a
        for h, m in c.links(e):
            links.append((h, other, int(m)))
    return links


def naive_trace(g: Graph, c: Configuration) -> NaiveLoops:
    """Event-by-event loop tracing by linear scans over incident links."""
    if c.n_links > NAIVE_LINK_CAP:
        raise ValueError(f"naive_trace is capped at {NAIVE_LINK_CAP} links")
    inc = [_incident_links(g, c, v) for v in range(g.vertex_count)]

    def next_above(v, t):
        above = [h for h, _, _ in inc[v] if h > t]
        return min(above) if above else min(h for h, _, _ in inc[v])

    def next_below(v, t):
        below = [h for h, _, _ in inc[v] if h < t]
        return max(below) if below else max(h for h, _, _ in inc[v])

    def link_at(v, h):
        hits = [(w, m) for hh, w, m in inc[v] if hh == h]
        if len(hits) != 1:
            raise ValueError(f"vertex {v}: {len(hits)} links at height {h}")
        return hits[0]

    pieces = []
    for v in range(g.vertex_count):
        if not inc[v]:
            pieces.append((v, None))
        else:
            pieces.extend((v, h) for h, _, _ in inc[v])
    time0 = {
        v: (v, min(h for h, _, _ in inc[v]) if inc[v] else None) for v in range(g.vertex_count)
    }
    starts = [time0[v] for v in range(g.vertex_count)] + sorted(
        pieces, key=lambda p: (p[0], -1.0 if p[1] is None else p[1])
    )
    seen: set = set()
    loops = []
    for start in starts:
        if start in seen:
            continue
        v, top = start
        state = (v, top, 1)
        loop = []
        while True:
            loop.append(state)
            seen.add(state[:2])
            v, top, d = state
            if top is None:
                break
            if d == 1:
                w, m = link_at(v, top)
                h = top
                if m == Mark.CROSS:
                    state = (w, next_above(w, h), 1)
                else:
                    state = (w, h, -1)
            else:
                h = next_below(v, top) if len(inc[v]) > 1 else top
                w, m = link_at(v, h)
                if m == Mark.CROSS:
                    state = (w, h, -1)
                else:
                    state = (w, next_above(w, h), 1)
            if state == (start[0], start[1], 1):
                break
        loops.append(loop)
    return NaiveLoops(loops, time0)


def partition_canonical(g: Graph, c: Configuration, lp) -> frozenset:
    """Canonical form of a fast :class:`~loopperc.loops.LoopPartition`,
    keyed by the same ``(vertex, top)`` pieces as :func:`naive_trace`."""
    keys = []
    for v in range(g.vertex_count):
        hs = sorted(h for e in g.vertex_adjacency(v).tolist() for h, _ in c.links(e))
        keys.extend((v, h) for h in hs) if hs else keys.append((v, None))
    loops: dict[int, list] = {}
    for s, (v, top) in enumerate(keys):
        loops.setdefault(int(lp.seg_loop[s]), []).append((v, top, int(lp.seg_dir[s])))
    return canonical_partition(loops.values())


# exact small systems -------------------------------------------------------


def single_edge_graph() -> Graph:
    return from_edges(2, [(0, 1)])


def exact_single_edge(n_links: int, marks) -> tuple[int, bool]:
    """Loop count and time-0 connectivity of one edge carrying links at
    heights ``i / (n + 1)``, ``i = 1..n``, on a unit time circle."""
    marks = [Mark.from_symbol(m) if isinstance(m, str) else Mark(int(m)) for m in marks]
    if len(marks) != n_links:
        raise ValueError("need one mark per link")
    c = Configuration.from_links(
        1,
        ModelParams(1.0, 1.0),
        {0: [((i + 1) / (n_links + 1), m) for i, m in enumerate(marks)]} if n_links else {},
    )
    loops = naive_trace(single_edge_graph(), c)
    return loops.n_loops, 1 in loops.loop_of(0)


def red_marginal_closed_form(beta: float, u: float, m: int) -> float:
    """P(edge is red) for independent unconditioned neighbours, ``m`` of them.

    Two links (Poisson mass ``e^-beta beta^2 / 2``), both crosses (``u^2``),
    gap ``g`` with density ``2 (beta - g) / beta^2``, and all ``m`` neighbours
    empty on the gap (``e^{-m g}``).
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    if m == 0:
        return u * u * math.exp(-beta) * beta * beta / 2
    return u * u * math.exp(-beta) * (beta / m - (-math.expm1(-m * beta)) / (m * m))


def red_marginal_numeric(beta: float, u: float, m: int) -> float:
    """Same probability by quadrature of ``e^-beta * int_0^beta (beta-g) e^{-m g} dg``."""
    val, _ = integrate.quad(lambda gap: (beta - gap) * math.exp(-m * gap), 0.0, beta,
                            epsabs=1e-13, epsrel=1e-12)
    return u * u * math.exp(-beta) * val


def theta_single_edge_even_probability(theta: float, beta: float) -> float:
    """Stationary P(link count even) on one edge, u = 1, weight theta^loops.

    Even counts give 2 loops, odd counts 1, so the weights are
    ``theta^2 cosh(beta)`` against ``theta sinh(beta)``.
    """
    even = theta * math.cosh(beta)
    return even / (even + math.sinh(beta))


def poisson_pmf(k: int, lam: float) -> float:
    return math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1)) if lam > 0 else float(k == 0)


# canned configurations -----------------------------------------------------


def four_vertex_example() -> tuple[Graph, Configuration]:
    """Four vertices on a path, five links: double bars on every edge and
    crosses on the last two, time circle of length 3."""
    g = from_edges(4, [(0, 1), (1, 2), (2, 3)])
    c = Configuration.from_links(
        3,
        ModelParams(3.0, 1.0),
        {0: [(1.8, "D")], 1: [(0.8, "D"), (2.475, "C")], 2: [(0.475, "C"), (1.5, "D")]},
    )
    return g, c


def three_edge_example() -> tuple[Graph, Configuration]:
    """Three-edge path: two close crosses on e1, a double bar and a cross on
    e2, and two far-apart crosses on e3."""
    g = from_edges(4, [(0, 1), (1, 2), (2, 3)])
    c = Configuration.from_links(
        3,
        ModelParams(3.0, 1.0),
        {0: [(0.275, "C"), (0.675, "C")], 1: [(1.05, "D"), (1.475, "C")],
         2: [(0.475, "C"), (2.475, "C")]},
    )
    return g, c


def pivotal_example(blocked: bool) -> tuple[Graph, Configuration]:
    """Probe e0 = (0,1), neighbour (1,2) with two crosses, and (2,3) with a
    cross below them; ``blocked`` adds a cross on (2,3) between them."""
    g = from_edges(4, [(0, 1), (1, 2), (2, 3)])
    far = [(0.475, "C")] + ([(1.525, "C")] if blocked else [])
    c = Configuration.from_links(
        3, ModelParams(3.0, 1.0), {1: [(0.825, "C"), (2.475, "C")], 2: far}
    )
    return g, c


def random_small_instance(rng: np.random.Generator, max_vertices: int = 8, max_beta: float = 2.0):
    """Random connected-ish small graph and configuration for equivalence tests."""
    from .link_sampler import sample_configuration

    n = int(rng.integers(2, max_vertices + 1))
    pairs = {(i, i + 1) for i in range(n - 1)}
    extra = int(rng.integers(0, n + 1))
    for _ in range(extra):
        a, b = rng.choice(n, size=2, replace=False)
        pairs.add((int(min(a, b)), int(max(a, b))))
    g = from_edges(n, sorted(pairs))
    params = ModelParams(float(rng.uniform(0.05, max_beta)), float(rng.choice([0.0, 0.5, 1.0])))
    return g, sample_configuration(g, params, rng)


def run_battery(seed: int = 0, instances: int = 200) -> list[OracleReport]:
    """All oracle checks, as reports (used by the ``validate`` command)."""
    from .coloring import Color, color_edges, is_pivotal
    from .loops import loop_count, loop_of, trace_loops

    out = []
    for n in range(7):
        loops, _ = exact_single_edge(n, ["C"] * n)
        out.append(report(f"single edge, {n} crosses: loop count", 2 - n % 2, loops))
        fast = loop_count(trace_loops(single_edge_graph(), _single_edge(n, "C")))
        out.append(report(f"single edge, {n} crosses: fast tracer", 2 - n % 2, fast))
    out.append(report("single edge, two crosses", (2, False), exact_single_edge(2, "CC")))
    out.append(report("single edge, two double bars", (2, True), exact_single_edge(2, "DD")))
    out.append(report("single edge, no links", (2, False), exact_single_edge(0, [])))
    out.append(report("single edge, one double bar: loops", 1, exact_single_edge(1, "D")[0]))

    g, c = four_vertex_example()
    out.append(report("four-vertex example: naive loop count", 2, naive_trace(g, c).n_loops))
    lp = trace_loops(g, c)
    out.append(report("four-vertex example: fast loop count", 2, lp.n_loops))
    out.append(
        report("four-vertex example: time-0 pairing", [{0, 2}, {1, 3}],
               [loop_of(lp, 0), loop_of(lp, 1)])
    )
    g, c = three_edge_example()
    colors = [Color(x).name for x in color_edges(g, c).color]
    out.append(report("three-edge colouring", ["RED", "BLUE", "BLUE"], colors))
    for blocked, expect in ((False, True), (True, False)):
        g, c = pivotal_example(blocked)
        out.append(report(f"pivotality (blocked={blocked})", expect, is_pivotal(g, c, 0, 1)))

    for beta in (0.5, 1.0, 2.0):
        for m in range(1, 7):
            out.append(
                report(
                    f"red marginal beta={beta} m={m}: closed form vs quadrature",
                    round(red_marginal_closed_form(beta, 1.0, m), 12),
                    round(red_marginal_numeric(beta, 1.0, m), 12),
                    1e-8,
                )
            )
    out.append(report("red marginal beta=1 m=2", 0.10443, red_marginal_closed_form(1, 1, 2), 5e-5))
    out.append(report("red marginal m=0", math.exp(-1) / 2, red_marginal_closed_form(1, 1, 0), 1e-15))
    out.append(report("red marginal u=0", 0.0, red_marginal_closed_form(1, 0, 3), 0.0))

    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(instances):
        g, c = random_small_instance(rng)
        if naive_trace(g, c).canonical() != partition_canonical(g, c, trace_loops(g, c)):
            mismatches += 1
    out.append(report(f"fast vs naive tracer on {instances} random instances", 0, mismatches))
    return out


def _single_edge(n: int, mark: str) -> Configuration:
    return Configuration.from_links(
        1, ModelParams(1.0, 1.0), {0: [((i + 1) / (n + 1), mark) for i in range(n)]} if n else {}
    )
