"""Finite bounded-degree graphs: tori, complete graphs, hypercubes,
random regular graphs and truncated regular trees.

Edges are stored once as ``(u, v)`` with ``u < v`` and sorted
lexicographically; the edge id is the row index in that order.  Vertex
incidence is kept in CSR form, and edge adjacency (edges sharing an
endpoint) is derived from it on demand, so dense graphs stay cheap.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

FAMILIES = ("torus", "complete", "hypercube", "random_regular", "tree")
_ARITY = {"torus": 2, "complete": 1, "hypercube": 1, "random_regular": 3, "tree": 2}


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for a graph.

    ``params`` per family: torus ``(d, L)``, complete ``(n,)``,
    hypercube ``(k,)``, random_regular ``(n, d, seed)``, tree ``(d, depth)``.
    """

    family: str
    params: tuple[int, ...]
    boundary: str = "periodic"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GraphError(f"unknown graph family {self.family!r}")
        params = tuple(int(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != _ARITY[self.family]:
            raise GraphError(
                f"{self.family} takes {_ARITY[self.family]} parameters, got {params}"
            )
        if self.boundary not in ("periodic", "free"):
            raise GraphError(f"boundary must be periodic or free, got {self.boundary!r}")
        if self.family != "torus" and self.boundary != "periodic":
            raise GraphError("boundary applies to tori only")
        # the seed of random_regular may be zero
        positive = params[:2] if self.family == "random_regular" else params
        if any(p <= 0 for p in positive):
            raise GraphError(f"parameters must be positive: {params}")
        if self.family == "torus":
            d, L = params
            if self.boundary == "periodic" and L < 3:
                raise GraphError("periodic torus needs L >= 3 (L = 2 gives double edges)")
            if self.boundary == "free" and L < 2:
                raise GraphError("free-boundary box needs L >= 2")
        elif self.family == "complete" and params[0] < 2:
            raise GraphError("complete graph needs n >= 2")
        elif self.family == "random_regular":
            n, d, seed = params
            if (n * d) % 2:
                raise GraphError(f"random_regular needs n*d even, got n={n}, d={d}")
            if d >= n:
                raise GraphError(f"random_regular needs d < n, got n={n}, d={d}")
            if seed < 0:
                raise GraphError("seed must be non-negative")
        elif self.family == "tree" and params[0] < 2:
            raise GraphError("tree needs d >= 2")

    @classmethod
    def torus(cls, d: int, L: int, boundary: str = "periodic") -> "GraphSpec":
        return cls("torus", (d, L), boundary)

    @classmethod
    def complete(cls, n: int) -> "GraphSpec":
        return cls("complete", (n,))

    @classmethod
    def hypercube(cls, k: int) -> "GraphSpec":
        return cls("hypercube", (k,))

    @classmethod
    def random_regular(cls, n: int, d: int, seed: int = 0) -> "GraphSpec":
        return cls("random_regular", (n, d, seed))

    @classmethod
    def tree(cls, d: int, depth: int) -> "GraphSpec":
        return cls("tree", (d, depth))

    @classmethod
    def parse(cls, text: str) -> "GraphSpec":
        """Parse ``family:p1,p2[,free|periodic]``, e.g. ``torus:2,64``."""
        try:
            family, _, rest = text.strip().partition(":")
            parts = [p.strip() for p in rest.split(",") if p.strip()]
            boundary = "periodic"
            if parts and parts[-1] in ("free", "periodic"):
                boundary = parts.pop()
            return cls(family.strip(), tuple(int(p) for p in parts), boundary)
        except ValueError as exc:
            raise GraphError(f"cannot parse graph spec {text!r}: {exc}") from None

    def with_size(self, size: int) -> "GraphSpec":
        """Same family with its size parameter replaced (L, n, k or depth)."""
        params = list(self.params)
        index = 1 if self.family in ("torus", "tree") else 0
        params[index] = size
        return GraphSpec(self.family, tuple(params), self.boundary)

    def __str__(self) -> str:
        text = f"{self.family}:{','.join(map(str, self.params))}"
        if self.family == "torus" and self.boundary == "free":
            text += ",free"
        return text


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple graph with CSR vertex incidence.

    Attributes
    ----------
    edges : (E, 2) int64 array, canonical ``u < v`` rows in sorted order.
    inc_ptr, inc_edges : CSR arrays, incident edge ids of vertex ``v`` are
        ``inc_edges[inc_ptr[v]:inc_ptr[v + 1]]`` (ascending).
    shifts : (E, d) int64 array or None. For tori, the lattice displacement
        taking ``edges[e, 0]`` to ``edges[e, 1]``; used for wrap detection.
    """

    vertex_count: int
    edges: np.ndarray
    max_degree: int
    inc_ptr: np.ndarray
    inc_edges: np.ndarray
    spec: GraphSpec | None = None
    shifts: np.ndarray | None = None
    _hash: list = field(default_factory=list, repr=False)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.inc_ptr)

    @property
    def is_torus(self) -> bool:
        return self.shifts is not None

    def vertex_adjacency(self, v: int) -> np.ndarray:
        """Ids of the edges incident to ``v``."""
        if not 0 <= v < self.vertex_count:
            raise GraphError(f"unknown vertex {v}")
        return self.inc_edges[self.inc_ptr[v] : self.inc_ptr[v + 1]]

    def edge_neighbors(self, e: int) -> np.ndarray:
        """Edges sharing at least one endpoint with ``e``, excluding ``e``."""
        if not 0 <= e < self.edge_count:
            raise GraphError(f"unknown edge id {e}")
        u, v = self.edges[e]
        both = np.union1d(self.vertex_adjacency(u), self.vertex_adjacency(v))
        return both[both != e]

    def edge_adjacency(self, e: int) -> np.ndarray:
        return self.edge_neighbors(e)

    def are_adjacent(self, e: int, f: int) -> bool:
        if e == f:
            return False
        return bool(np.intersect1d(self.edges[e], self.edges[f]).size)

    def edge_id(self, u: int, v: int) -> int:
        """Id of the edge joining ``u`` and ``v``."""
        u, v = min(u, v), max(u, v)
        ids = self.vertex_adjacency(u)
        hits = ids[self.edges[ids, 1] == v]
        if not hits.size:
            raise GraphError(f"no edge between {u} and {v}")
        return int(hits[0])

    def graph_hash(self) -> str:
        if not self._hash:
            h = hashlib.sha256()
            h.update(str(self.vertex_count).encode())
            h.update(np.ascontiguousarray(self.edges, dtype="<i8").tobytes())
            self._hash.append(h.hexdigest()[:16])
        return self._hash[0]


def from_edges(
    vertex_count: int,
    edges,
    spec: GraphSpec | None = None,
    shifts: np.ndarray | None = None,
    max_degree: int | None = None,
) -> Graph:
    """Build a :class:`Graph` from an iterable of vertex pairs.

    Pairs are canonicalised and sorted; self-loops and duplicates are
    rejected.  ``shifts`` (tori only) must be given per input pair and is
    re-signed and re-ordered along with the edges.
    """
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= vertex_count):
        raise GraphError("edge endpoint out of range")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise GraphError("self-loops are not allowed")
    swap = arr[:, 0] > arr[:, 1]
    canon = np.where(swap[:, None], arr[:, ::-1], arr)
    order = np.lexsort((canon[:, 1], canon[:, 0]))
    canon = canon[order]
    if len(canon) > 1 and np.any(np.all(canon[1:] == canon[:-1], axis=1)):
        raise GraphError("duplicate edges are not allowed")
    if shifts is not None:
        shifts = np.asarray(shifts, dtype=np.int64)
        shifts = np.where(swap[:, None], -shifts, shifts)[order]

    endpoints = canon.ravel()
    deg = np.bincount(endpoints, minlength=vertex_count)
    inc_ptr = np.zeros(vertex_count + 1, dtype=np.int64)
    np.cumsum(deg, out=inc_ptr[1:])
    edge_ids = np.repeat(np.arange(len(canon), dtype=np.int64), 2)
    inc_edges = edge_ids[np.argsort(endpoints, kind="stable")]
    realized = int(deg.max()) if vertex_count else 0
    return Graph(
        vertex_count=int(vertex_count),
        edges=canon,
        max_degree=max(realized, max_degree or 0),
        inc_ptr=inc_ptr,
        inc_edges=inc_edges,
        spec=spec,
        shifts=shifts,
    )


def _torus(spec: GraphSpec) -> Graph:
    d, L = spec.params
    periodic = spec.boundary == "periodic"
    coords = np.array(list(product(range(L), repeat=d)), dtype=np.int64)
    weights = L ** np.arange(d - 1, -1, -1)
    index = coords @ weights
    pairs, shifts = [], []
    for axis in range(d):
        nxt = coords.copy()
        nxt[:, axis] += 1
        keep = np.ones(len(coords), dtype=bool) if periodic else nxt[:, axis] < L
        nxt[:, axis] %= L
        pairs.append(np.stack([index[keep], (nxt @ weights)[keep]], axis=1))
        step = np.zeros((int(keep.sum()), d), dtype=np.int64)
        step[:, axis] = 1
        shifts.append(step)
    return from_edges(
        L**d,
        np.concatenate(pairs),
        spec,
        shifts=np.concatenate(shifts) if periodic else None,
    )


def _complete(spec: GraphSpec) -> Graph:
    (n,) = spec.params
    iu, ju = np.triu_indices(n, k=1)
    return from_edges(n, np.stack([iu, ju], axis=1), spec)


def _hypercube(spec: GraphSpec) -> Graph:
    (k,) = spec.params
    verts = np.arange(2**k, dtype=np.int64)
    pairs = []
    for bit in range(k):
        lo = verts[(verts >> bit) & 1 == 0]
        pairs.append(np.stack([lo, lo | (1 << bit)], axis=1))
    return from_edges(2**k, np.concatenate(pairs), spec)


def _random_regular(spec: GraphSpec, max_tries: int = 1000) -> Graph:
    # pairing model, whole-matching rejection on loops or multi-edges
    n, d, seed = spec.params
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    for _ in range(max_tries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        pairs.sort(axis=1)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        if len(np.unique(pairs, axis=0)) != len(pairs):
            continue
        return from_edges(n, pairs, spec)
    raise GraphError(
        f"random_regular({n}, {d}, seed={seed}): no simple pairing in {max_tries} tries"
    )


def _tree(spec: GraphSpec) -> Graph:
    d, depth = spec.params
    pairs = []
    frontier = [0]
    count = 1
    for level in range(depth):
        nxt = []
        for parent in frontier:
            for _ in range(d if level == 0 else d - 1):
                pairs.append((parent, count))
                nxt.append(count)
                count += 1
        frontier = nxt
    return from_edges(count, np.array(pairs, dtype=np.int64).reshape(-1, 2), spec, max_degree=d)


_BUILDERS = {
    "torus": _torus,
    "complete": _complete,
    "hypercube": _hypercube,
    "random_regular": _random_regular,
    "tree": _tree,
}


def build_graph(spec: GraphSpec | str) -> Graph:
    """Construct the graph described by ``spec`` (deterministic in the spec)."""
    if isinstance(spec, str):
        spec = GraphSpec.parse(spec)
    return _BUILDERS[spec.family](spec)


def edge_neighbors(g: Graph, e: int) -> np.ndarray:
    return g.edge_neighbors(e)


def path_graph(n: int) -> Graph:
    """Path ``0 - 1 - ... - n-1``; handy for hand-built configurations."""
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def write_edge_list(g: Graph, path) -> None:
    lines = [f"# vertices={g.vertex_count}"]
    lines += [f"{u} {v}" for u, v in g.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    vertex_count = None
    pairs = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "vertices":
                vertex_count = int(value)
            continue
        u, v = line.split()
        pairs.append((int(u), int(v)))
    if vertex_count is None:
        raise GraphError(f"{path}: missing '# vertices=N' header")
    return from_edges(vertex_count, pairs)
