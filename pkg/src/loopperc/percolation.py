"""Bond percolation clusters, wrap detection and crossing-point estimates.

Union-find keeps, for every vertex, its lattice displacement to its parent.
On a torus, an edge that closes a cycle inside one cluster with a non-zero
net displacement means the cluster wraps along the axes where that
displacement is non-zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .graphs import Graph, GraphSpec, build_graph

OBSERVABLES = ("wrap", "fraction")


@numba.njit(cache=True)
def _find(parent, offset, x):
    # returns root; offset[x] becomes displacement from root to x
    root = x
    while parent[root] != root:
        root = parent[root]
    # two-pass compression; accumulate offsets along the path
    path = []
    y = x
    while parent[y] != root and y != root:
        path.append(y)
        y = parent[y]
    for i in range(len(path) - 1, -1, -1):
        y = path[i]
        offset[y] += offset[parent[y]]
        parent[y] = root
    return root


@numba.njit(cache=True)
def _union(parent, rank, size, offset, wrap, u, v, shift):
    ru = _find(parent, offset, u)
    rv = _find(parent, offset, v)
    if ru == rv:
        # pos(v) - pos(u) along the tree vs along the new edge
        for a in range(offset.shape[1]):
            if offset[u, a] + shift[a] - offset[v, a] != 0:
                wrap[a] = True
        return ru
    # attach rv under ru: offset[rv] = pos(rv) - pos(ru)
    if rank[ru] < rank[rv]:
        ru, rv = rv, ru
        u, v = v, u
        sgn = -1
    else:
        sgn = 1
    parent[rv] = ru
    for a in range(offset.shape[1]):
        offset[rv, a] = offset[u, a] + sgn * shift[a] - offset[v, a]
    size[ru] += size[rv]
    if rank[ru] == rank[rv]:
        rank[ru] += 1
    return ru


@numba.njit(cache=True)
def _build(n, edges, open_ids, shifts):
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    dim = shifts.shape[1]
    offset = np.zeros((n, dim), dtype=np.int64)
    wrap = np.zeros(dim, dtype=np.bool_)
    for i in range(len(open_ids)):
        e = open_ids[i]
        _union(parent, rank, size, offset, wrap, edges[e, 0], edges[e, 1], shifts[e])
    for x in range(n):
        _find(parent, offset, x)
    return parent, size, wrap


@numba.njit(cache=True)
def _sweep(n, edges, order, values, shifts, grid, frac_size, wrap_axis):
    """Add edges in increasing ``values``; record the largest cluster and wrap
    state at every grid level, plus the first level at which the cluster
    event (wrap along ``wrap_axis`` / largest cluster > ``frac_size``) holds."""
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    dim = shifts.shape[1]
    offset = np.zeros((n, dim), dtype=np.int64)
    wrap = np.zeros(dim, dtype=np.bool_)
    largest = 1
    ng = len(grid)
    largest_at = np.zeros(ng, dtype=np.int64)
    wrap_at = np.zeros((ng, dim), dtype=np.bool_)
    first_wrap = np.inf
    first_frac = np.inf
    if largest > frac_size:
        first_frac = 0.0
    gi = 0
    for i in range(len(order)):
        e = order[i]
        val = values[e]
        while gi < ng and grid[gi] < val:
            largest_at[gi] = largest
            wrap_at[gi, :] = wrap
            gi += 1
        r = _union(parent, rank, size, offset, wrap, edges[e, 0], edges[e, 1], shifts[e])
        if size[r] > largest:
            largest = size[r]
        if first_frac == np.inf and largest > frac_size:
            first_frac = val
        if first_wrap == np.inf and dim > 0:
            hit = False
            if wrap_axis < 0:
                for a in range(dim):
                    hit = hit or wrap[a]
            else:
                hit = wrap[wrap_axis]
            if hit:
                first_wrap = val
    while gi < ng:
        largest_at[gi] = largest
        wrap_at[gi, :] = wrap
        gi += 1
    return largest_at, wrap_at, first_wrap, first_frac


def _shifts(g: Graph) -> np.ndarray:
    if g.shifts is not None:
        return g.shifts
    return np.zeros((g.edge_count, 0), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class ClusterForest:
    """Fully compressed union-find over the vertices of a graph.

    ``root[v]`` is the representative of the cluster of ``v``; ``wrap`` is the
    per-axis wrap flag on tori and ``None`` elsewhere.
    """

    root: np.ndarray
    size: np.ndarray
    wrap: tuple[bool, ...] | None

    def find(self, v: int) -> int:
        return int(self.root[v])

    def connected(self, u: int, v: int) -> bool:
        return self.root[u] == self.root[v]

    def cluster_of(self, v: int) -> set[int]:
        return set(np.flatnonzero(self.root == self.root[v]).tolist())

    def cluster_sizes(self) -> np.ndarray:
        """Size of the cluster containing each vertex."""
        return self.size[self.root]

    def components(self) -> list[set[int]]:
        out: dict[int, set[int]] = {}
        for v, r in enumerate(self.root.tolist()):
            out.setdefault(r, set()).add(v)
        return list(out.values())


def build_clusters(g: Graph, open) -> ClusterForest:
    """Clusters of ``g`` restricted to the open edges.

    ``open`` is a boolean mask over edge ids or a predicate ``edge -> bool``.
    """
    if callable(open):
        mask = np.fromiter((bool(open(e)) for e in range(g.edge_count)), bool, g.edge_count)
    else:
        mask = np.asarray(open, dtype=bool)
        if mask.shape != (g.edge_count,):
            raise ValueError(f"open mask must have shape ({g.edge_count},)")
    ids = np.flatnonzero(mask)
    root, size, wrap = _build(g.vertex_count, g.edges, ids, _shifts(g))
    return ClusterForest(root, size, tuple(bool(w) for w in wrap) if g.is_torus else None)


@dataclass(frozen=True)
class ClusterStats:
    histogram: dict[int, int]  # cluster size -> number of clusters
    largest: int
    largest_fraction: float
    wrap: tuple[bool, ...] | None


def cluster_stats(f: ClusterForest, g: Graph) -> ClusterStats:
    roots = np.unique(f.root)
    sizes = f.size[roots]
    vals, counts = np.unique(sizes, return_counts=True)
    largest = int(sizes.max())
    return ClusterStats(
        histogram=dict(zip(vals.tolist(), counts.tolist())),
        largest=largest,
        largest_fraction=largest / g.vertex_count,
        wrap=f.wrap,
    )


def sweep(g: Graph, values: np.ndarray, grid, c: float = 0.05, wrap_axis: int = 0, cutoff=None):
    """Coupled percolation sweep: edge ``e`` is open at level ``x`` iff
    ``values[e] <= x``.

    Returns ``(largest[grid], wrap[grid, axis], first_wrap, first_fraction)``
    where the last two are the exact levels at which the wrap event / the
    event "largest cluster > c|V|" first occur (``inf`` if never).
    Edges with values above ``cutoff`` are ignored.
    """
    values = np.asarray(values, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    cand = np.flatnonzero(values <= cutoff) if cutoff is not None else np.arange(len(values))
    order = cand[np.argsort(values[cand], kind="stable")]
    return _sweep(
        g.vertex_count, g.edges, order, values, _shifts(g), grid,
        float(c) * g.vertex_count, int(wrap_axis),
    )


def bfs_components(g: Graph, open_mask) -> list[set[int]]:
    """Reference connectivity by breadth-first search."""
    from collections import deque

    mask = np.asarray(open_mask, dtype=bool)
    adj: list[list[int]] = [[] for _ in range(g.vertex_count)]
    for e in np.flatnonzero(mask).tolist():
        u, v = g.edges[e].tolist()
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * g.vertex_count
    comps = []
    for s in range(g.vertex_count):
        if seen[s]:
            continue
        seen[s] = True
        comp = {s}
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    comp.add(y)
                    queue.append(y)
        comps.append(comp)
    return comps


# crossing-point estimation -------------------------------------------------


def empirical_curve(thresholds: np.ndarray, x) -> np.ndarray:
    """Fraction of replicas whose event has occurred by level ``x``."""
    t = np.sort(np.asarray(thresholds, dtype=float))
    return np.searchsorted(t, np.asarray(x, dtype=float), side="right") / len(t)


def bisect_crossing(curve, lo: float, hi: float, level: float = 0.5, tol: float = 1e-9):
    """Smallest ``x`` in ``[lo, hi]`` with ``curve(x) >= level`` for a
    non-decreasing ``curve``, by bisection.  Returns ``None`` if the curve does
    is not bracketed (already at the level at ``lo`` or still below it at
    ``hi``)."""
    if curve(hi) < level or curve(lo) >= level:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if curve(mid) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def threshold_crossing(thresholds, lo=0.0, hi=1.0, level=0.5):
    t = np.asarray(thresholds, dtype=float)
    return bisect_crossing(lambda x: float(empirical_curve(t, x)), lo, hi, level)


def _fast_crossing(sorted_t: np.ndarray, level: float):
    # equals the bisection limit for an empirical step curve
    n = len(sorted_t)
    k = int(np.ceil(level * n - 1e-12))
    k = max(k, 1)
    x = sorted_t[k - 1]
    return x if np.isfinite(x) else None


@dataclass(frozen=True)
class CrossingEstimate:
    value: float | None
    ci: tuple[float, float] | None
    replicas: int
    bracket: tuple[float, float]
    converged: bool

    def __str__(self) -> str:
        if self.value is None:
            return f"no crossing in [{self.bracket[0]}, {self.bracket[1]}]"
        return f"{self.value:.5f} [{self.ci[0]:.5f}, {self.ci[1]:.5f}]"


def crossing_with_ci(
    thresholds,
    rng: np.random.Generator,
    lo: float = 0.0,
    hi: float = 1.0,
    level: float = 0.5,
    n_boot: int = 1000,
    alpha: float = 0.05,
) -> CrossingEstimate:
    """Crossing of the empirical event curve with a bootstrap percentile CI."""
    t = np.asarray(thresholds, dtype=float)
    value = threshold_crossing(t, lo, hi, level)
    if value is None:
        return CrossingEstimate(None, None, len(t), (lo, hi), False)
    boots = []
    for _ in range(n_boot):
        x = _fast_crossing(np.sort(rng.choice(t, size=len(t))), level)
        boots.append(hi if x is None or x > hi else max(x, lo))
    q = np.quantile(boots, [alpha / 2, 1 - alpha / 2])
    return CrossingEstimate(value, (float(q[0]), float(q[1])), len(t), (lo, hi), True)


def estimate_pc(
    spec: GraphSpec | str,
    observable: str = "wrap",
    replicas: int = 1000,
    rng: np.random.Generator | None = None,
    c: float = 0.05,
    scale: float = 1.0,
    p_max: float = 1.0,
    wrap_axis: int = 0,
    n_boot: int = 1000,
) -> CrossingEstimate:
    """Finite-size critical point of bond percolation.

    Every replica draws one uniform per edge; the edge is open at ``p`` iff
    its uniform is below ``p``, so each replica's event is monotone in ``p``
    and occurs from an exact threshold on.  The estimate is the level where
    the fraction of replicas showing the event crosses 1/2, located by
    bisection, with a bootstrap CI.  ``scale`` reports the estimate as
    ``p * scale`` (e.g. ``scale = n`` for ``p = t / n`` on complete graphs);
    uniforms above ``p_max`` are never looked at.
    """
    if replicas < 100:
        raise ValueError("estimate_pc needs at least 100 replicas")
    if observable not in OBSERVABLES:
        raise ValueError(f"observable must be one of {OBSERVABLES}")
    rng = rng if rng is not None else np.random.default_rng()
    g = build_graph(spec)
    if observable == "wrap" and not g.is_torus:
        raise ValueError("wrap observable needs a periodic torus")
    thresholds = np.empty(replicas)
    for r in range(replicas):
        u = rng.random(g.edge_count)
        _, _, first_wrap, first_frac = sweep(g, u, [], c=c, wrap_axis=wrap_axis, cutoff=p_max)
        thresholds[r] = (first_wrap if observable == "wrap" else first_frac) * scale
    return crossing_with_ci(thresholds, rng, 0.0, p_max * scale, n_boot=n_boot)
