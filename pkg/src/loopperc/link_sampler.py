"""Poisson link configurations on the edges of a graph.

A configuration stores every link in one flat, edge-major array sorted by
height within each edge (CSR layout: the links of edge ``e`` occupy
``ptr[e]:ptr[e + 1]``).  Marks are ``1`` for a cross and ``0`` for a
double bar.  Counting uses half-open height intervals ``(a, b]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .graphs import Graph


class ConfigurationError(ValueError):
    pass


class Mark(IntEnum):
    DOUBLE_BAR = 0
    CROSS = 1

    @property
    def symbol(self) -> str:
        return "C" if self is Mark.CROSS else "D"

    @classmethod
    def from_symbol(cls, s: str) -> "Mark":
        s = s.strip().upper()
        if s in ("C", "CROSS", "1"):
            return cls.CROSS
        if s in ("D", "DOUBLE_BAR", "DOUBLEBAR", "0"):
            return cls.DOUBLE_BAR
        raise ConfigurationError(f"unknown mark {s!r}")


@dataclass(frozen=True)
class ModelParams:
    beta: float
    u: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigurationError(f"beta must be positive and finite, got {self.beta}")
        if not 0.0 <= self.u <= 1.0:
            raise ConfigurationError(f"u must lie in [0, 1], got {self.u}")


class Link(NamedTuple):
    height: float
    mark: Mark


@dataclass(frozen=True)
class EdgeConfiguration:
    links: tuple[Link, ...]

    @property
    def n(self) -> int:
        return len(self.links)

    @property
    def a(self) -> float | None:
        return self.links[0].height if self.n == 2 else None

    @property
    def b(self) -> float | None:
        return self.links[1].height if self.n == 2 else None


class Configuration:
    """Links on every edge of a graph with ``n_edges`` edges.

    Immutable by convention: the arrays are flagged read-only.
    """

    __slots__ = ("params", "ptr", "heights", "marks")

    def __init__(self, params: ModelParams, ptr, heights, marks, check: bool = True):
        ptr = np.ascontiguousarray(ptr, dtype=np.int64)
        heights = np.ascontiguousarray(heights, dtype=np.float64)
        marks = np.ascontiguousarray(marks, dtype=np.int8)
        for arr in (ptr, heights, marks):
            arr.setflags(write=False)
        self.params = params
        self.ptr = ptr
        self.heights = heights
        self.marks = marks
        if check:
            self._check()

    def _check(self) -> None:
        ptr, h = self.ptr, self.heights
        if ptr[0] != 0 or ptr[-1] != len(h) or len(self.marks) != len(h):
            raise ConfigurationError("inconsistent link arrays")
        if np.any(np.diff(ptr) < 0):
            raise ConfigurationError("edge offsets must be non-decreasing")
        if len(h) and (h.min() < 0 or h.max() >= self.params.beta):
            raise ConfigurationError("link heights must lie in [0, beta)")
        if np.any((self.marks != 0) & (self.marks != 1)):
            raise ConfigurationError("marks must be 0 (double bar) or 1 (cross)")
        if len(h) > 1:
            same_edge = self.edge_of_link()[1:] == self.edge_of_link()[:-1]
            if np.any(same_edge & (np.diff(h) <= 0)):
                raise ConfigurationError("heights within an edge must be strictly increasing")

    @classmethod
    def empty(cls, n_edges: int, params: ModelParams) -> "Configuration":
        return cls(params, np.zeros(n_edges + 1, dtype=np.int64), [], [])

    @classmethod
    def from_links(cls, n_edges: int, params: ModelParams, links: dict) -> "Configuration":
        """Build from ``{edge: [(height, mark), ...]}``; marks may be
        :class:`Mark`, ints or the symbols ``"C"``/``"D"``."""
        counts = np.zeros(n_edges, dtype=np.int64)
        hs, ms = [], []
        for e in sorted(links):
            if not 0 <= e < n_edges:
                raise ConfigurationError(f"unknown edge id {e}")
            items = sorted(
                (float(h), Mark.from_symbol(m) if isinstance(m, str) else Mark(int(m)))
                for h, m in links[e]
            )
            counts[e] = len(items)
            hs.extend(h for h, _ in items)
            ms.extend(int(m) for _, m in items)
        ptr = np.zeros(n_edges + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return cls(params, ptr, hs, ms)

    @property
    def n_edges(self) -> int:
        return len(self.ptr) - 1

    @property
    def n_links(self) -> int:
        return len(self.heights)

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.ptr)

    def edge_of_link(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_edges, dtype=np.int64), self.counts)

    def n(self, e: int) -> int:
        self._check_edge(e)
        return int(self.ptr[e + 1] - self.ptr[e])

    def links(self, e: int) -> list[Link]:
        self._check_edge(e)
        lo, hi = self.ptr[e], self.ptr[e + 1]
        return [Link(float(h), Mark(int(m))) for h, m in zip(self.heights[lo:hi], self.marks[lo:hi])]

    def edge_configuration(self, e: int) -> EdgeConfiguration:
        return EdgeConfiguration(tuple(self.links(e)))

    def _check_edge(self, e: int) -> None:
        if not 0 <= e < self.n_edges:
            raise ConfigurationError(f"unknown edge id {e}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.params == other.params
            and np.array_equal(self.ptr, other.ptr)
            and np.array_equal(self.heights, other.heights)
            and np.array_equal(self.marks, other.marks)
        )

    def __repr__(self) -> str:
        return (
            f"Configuration(beta={self.params.beta}, u={self.params.u}, "
            f"edges={self.n_edges}, links={self.n_links})"
        )


def count_links_in(c: Configuration, e: int, a: float, b: float) -> int:
    """Number of links on ``e`` with height in ``(a, b]``."""
    if not a < b:
        raise ConfigurationError(f"need a < b, got ({a}, {b}]")
    c._check_edge(e)
    h = c.heights[c.ptr[e] : c.ptr[e + 1]]
    return int(np.searchsorted(h, b, side="right") - np.searchsorted(h, a, side="right"))


class VertexEvents:
    """Per-vertex view of the links: for every vertex, the incident links
    sorted by height.

    ``vlink[vptr[v]:vptr[v+1]]`` are the link ids at ``v`` in height order,
    ``vheight`` the matching heights. ``pos_lo[l]``/``pos_hi[l]`` give the
    position of link ``l`` in the list of its smaller/larger endpoint.
    Building it rejects height ties between links sharing a vertex.
    """

    __slots__ = ("vptr", "vlink", "vheight", "link_lo", "link_hi", "pos_lo", "pos_hi")

    def __init__(self, g: Graph, c: Configuration):
        if c.n_edges != g.edge_count:
            raise ConfigurationError(
                f"configuration has {c.n_edges} edges, graph has {g.edge_count}"
            )
        n = c.n_links
        link_edge = c.edge_of_link()
        self.link_lo = g.edges[link_edge, 0]
        self.link_hi = g.edges[link_edge, 1]
        verts = np.concatenate([self.link_lo, self.link_hi])
        hts = np.concatenate([c.heights, c.heights])
        order = np.lexsort((hts, verts))
        sv = verts[order]
        self.vheight = hts[order]
        self.vlink = np.concatenate([np.arange(n), np.arange(n)])[order]
        counts = np.bincount(sv, minlength=g.vertex_count)
        self.vptr = np.zeros(g.vertex_count + 1, dtype=np.int64)
        np.cumsum(counts, out=self.vptr[1:])
        if 2 * n > 1:
            tie = (sv[1:] == sv[:-1]) & (self.vheight[1:] == self.vheight[:-1])
            if np.any(tie):
                i = int(np.flatnonzero(tie)[0])
                raise ConfigurationError(
                    f"height tie {self.vheight[i]!r} between links at vertex {int(sv[i])}"
                )
        pos = np.empty(2 * n, dtype=np.int64)
        pos[order] = np.arange(2 * n) - self.vptr[sv]
        self.pos_lo = pos[:n]
        self.pos_hi = pos[n:]

    def at(self, v: int) -> np.ndarray:
        return self.vheight[self.vptr[v] : self.vptr[v + 1]]


def check_tie_free(g: Graph, c: Configuration) -> None:
    """Raise :class:`ConfigurationError` if links on adjacent edges share a height."""
    VertexEvents(g, c)


def _tied_edges(g: Graph, c: Configuration) -> np.ndarray:
    """Edges whose links tie (or fall outside [0, beta)); ties are charged to
    the higher edge id, i.e. the later-sampled one."""
    bad = np.zeros(c.n_edges, dtype=bool)
    edge = c.edge_of_link()
    h = c.heights
    bad[edge[h >= c.params.beta]] = True
    if len(h) > 1:
        dup = (edge[1:] == edge[:-1]) & (h[1:] == h[:-1])
        bad[edge[1:][dup]] = True
    verts = np.concatenate([g.edges[edge, 0], g.edges[edge, 1]])
    hts = np.concatenate([h, h])
    eid = np.concatenate([edge, edge])
    order = np.lexsort((eid, hts, verts))
    sv, sh, se = verts[order], hts[order], eid[order]
    if len(sv) > 1:
        tie = (sv[1:] == sv[:-1]) & (sh[1:] == sh[:-1]) & (se[1:] != se[:-1])
        bad[se[1:][tie]] = True
    return bad


def _assemble(params, counts, heights, marks, edge_of) -> Configuration:
    order = np.lexsort((heights, edge_of))
    ptr = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return Configuration(params, ptr, heights[order], marks[order], check=False)


def _draw(rng, params, counts):
    total = int(counts.sum())
    heights = rng.random(total) * params.beta
    marks = (rng.random(total) < params.u).astype(np.int8)
    return heights, marks


def _resample_ties(g, c, rng, draw_edge) -> Configuration:
    bad = _tied_edges(g, c)
    while bad.any():
        counts = c.counts.copy()
        keep = ~bad[c.edge_of_link()]
        heights, marks = list(c.heights[keep]), list(c.marks[keep])
        edge_of = list(c.edge_of_link()[keep])
        for e in np.flatnonzero(bad):
            hs, ms = draw_edge(int(e))
            counts[e] = len(hs)
            heights.extend(hs)
            marks.extend(ms)
            edge_of.extend([int(e)] * len(hs))
        c = _assemble(
            c.params, counts, np.array(heights, float), np.array(marks, np.int8), np.array(edge_of)
        )
        bad = _tied_edges(g, c)
    return c


def sample_configuration(g: Graph, params: ModelParams, rng: np.random.Generator) -> Configuration:
    """Independent rate-1 Poisson link process on every edge of ``g``.

    Each link is a cross with probability ``u``.  All draws come from
    ``rng`` in edge-id order, so a fixed seed reproduces the configuration.
    """
    E = g.edge_count
    counts = rng.poisson(params.beta, E).astype(np.int64)
    heights, marks = _draw(rng, params, counts)
    edge_of = np.repeat(np.arange(E, dtype=np.int64), counts)
    c = _assemble(params, counts, heights, marks, edge_of)

    def redraw(e):
        k = int(rng.poisson(params.beta))
        return _draw(rng, params, np.array([k]))

    return _resample_ties(g, c, rng, redraw)


def _nonempty_edge(rng, beta, u, size):
    """Poisson process on [0, beta) conditioned on at least one point.

    The first arrival is an Exp(1) time truncated to [0, beta); the rest is an
    ordinary Poisson process on the remaining stretch.  Exact for any beta.
    """
    first = -np.log1p(rng.random(size) * np.expm1(-beta))
    first = np.minimum(first, np.nextafter(beta, 0))
    extra = rng.poisson(beta - first)
    counts = 1 + extra
    rest = first.repeat(extra) + rng.random(int(extra.sum())) * (beta - first).repeat(extra)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    heights = np.empty(int(counts.sum()))
    heights[starts] = first
    mask = np.ones(len(heights), dtype=bool)
    mask[starts] = False
    heights[mask] = rest
    marks = (rng.random(len(heights)) < u).astype(np.int8)
    return counts, heights, marks


def sample_conditioned_nonempty(
    g: Graph, subgraph_edges, params: ModelParams, rng: np.random.Generator
) -> Configuration:
    """Links on ``subgraph_edges`` only, each edge conditioned to carry at
    least one link; every other edge is left empty."""
    sub = np.unique(np.asarray(list(subgraph_edges), dtype=np.int64))
    if sub.size == 0:
        raise ConfigurationError("subgraph edge set is empty")
    if sub[0] < 0 or sub[-1] >= g.edge_count:
        raise ConfigurationError("subgraph edge outside the graph")
    counts = np.zeros(g.edge_count, dtype=np.int64)
    k, heights, marks = _nonempty_edge(rng, params.beta, params.u, len(sub))
    counts[sub] = k
    edge_of = np.repeat(sub, k)
    c = _assemble(params, counts, heights, marks, edge_of)

    def redraw(e):
        _, hs, ms = _nonempty_edge(rng, params.beta, params.u, 1)
        return hs, ms

    return _resample_ties(g, c, rng, redraw)


def empty_edge(c: Configuration, e: int) -> Configuration:
    """Copy of ``c`` with edge ``e`` emptied."""
    c._check_edge(e)
    lo, hi = c.ptr[e], c.ptr[e + 1]
    ptr = c.ptr.copy()
    ptr[e + 1 :] -= hi - lo
    keep = np.r_[0:lo, hi : c.n_links]
    return Configuration(c.params, ptr, c.heights[keep], c.marks[keep], check=False)


def truncate(c: Configuration, beta: float) -> Configuration:
    """Restrict to links below ``beta`` on a circle of length ``beta``.

    Restricting a rate-1 process on [0, beta_max) gives a rate-1 process on
    [0, beta), which couples all smaller beta monotonically.
    """
    if beta > c.params.beta:
        raise ConfigurationError(f"cannot extend beta {c.params.beta} to {beta}")
    params = ModelParams(beta, c.params.u)
    keep = c.heights < beta
    counts = np.bincount(c.edge_of_link()[keep], minlength=c.n_edges)
    ptr = np.zeros(c.n_edges + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return Configuration(params, ptr, c.heights[keep], c.marks[keep], check=False)


def write_configuration(c: Configuration, path, seed=None, graph_hash: str | None = None) -> None:
    text = format_configuration(c, seed, graph_hash)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write configuration to {path}: {exc}") from None


def format_configuration(c: Configuration, seed=None, graph_hash: str | None = None) -> str:
    head = [f"# beta={c.params.beta!r} u={c.params.u!r} edges={c.n_edges}"]
    head.append(f"# seed={seed if seed is not None else 'none'} graph_hash={graph_hash or 'none'}")
    head.append("# edge_id height mark")
    body = [
        f"{e} {h!r} {Mark(m).symbol}"
        for e, h, m in zip(c.edge_of_link().tolist(), c.heights.tolist(), c.marks.tolist())
    ]
    return "\n".join(head + body) + "\n"


def read_configuration(path) -> tuple[Configuration, dict]:
    """Parse a file written by :func:`write_configuration`.

    Returns the configuration and the header fields as strings.
    """
    header: dict[str, str] = {}
    links: dict[int, list] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, _, v = tok.partition("=")
                    header[k] = v
            continue
        try:
            e, h, m = line.split()
            links.setdefault(int(e), []).append((float(h), Mark.from_symbol(m)))
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: bad link line {line!r}") from exc
    try:
        params = ModelParams(float(header["beta"]), float(header["u"]))
        n_edges = int(header["edges"])
    except KeyError as exc:
        raise ConfigurationError(f"{path}: header missing {exc}") from None
    return Configuration.from_links(n_edges, params, links), header
