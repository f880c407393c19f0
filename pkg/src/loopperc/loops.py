"""Loop decomposition of the space-time cylinder ``V x [0, beta)_per``.

Each vertex circle is cut at the heights of its incident links.  Segment
``j`` of a vertex with ``k > 0`` events is the arc ``(h[j-1], h[j]]`` (indices
mod ``k``), so segment 0 is the one wrapping through time 0; a vertex
without events has a single segment, the whole circle.

Walking rule: moving up, the top event of the segment is a link; jump to
its other endpoint and keep going up after a cross, turn down after a
double bar.  Moving down is the mirror image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .graphs import Graph
from .link_sampler import Configuration, ConfigurationError, VertexEvents


@numba.njit(cache=True)
def _step(v, j, d, vptr, vlink, link_lo, link_hi, pos_lo, pos_hi, cross):
    """One move of the walker: (vertex, segment index, direction) -> next."""
    k = vptr[v + 1] - vptr[v]
    if d == 1:
        ev = j
    else:
        ev = j - 1 if j > 0 else k - 1
    l = vlink[vptr[v] + ev]
    if link_lo[l] == v:
        w = link_hi[l]
        q = pos_hi[l]
    else:
        w = link_lo[l]
        q = pos_lo[l]
    kw = vptr[w + 1] - vptr[w]
    if cross[l]:
        nj = (q + 1) % kw if d == 1 else q
        nd = d
    else:
        if d == 1:
            nj = q
            nd = -1
        else:
            nj = (q + 1) % kw
            nd = 1
    return w, nj, nd


@numba.njit(cache=True)
def _trace_kernel(vptr, vlink, link_lo, link_hi, pos_lo, pos_hi, cross, segoff, seg_vertex):
    nseg = segoff[-1]
    seg_loop = np.full(nseg, -1, dtype=np.int64)
    seg_dir = np.zeros(nseg, dtype=np.int8)
    nloops = 0
    # time-0 segments first, in vertex order, so that loop orientation
    # matches the vertex-marking procedure; then everything else
    for pass_ in range(2):
        for s0 in range(nseg):
            v0 = seg_vertex[s0]
            j0 = s0 - segoff[v0]
            if pass_ == 0 and j0 != 0:
                continue
            if seg_loop[s0] >= 0:
                continue
            v, j, d = v0, j0, 1
            while True:
                s = segoff[v] + j
                if seg_loop[s] >= 0:
                    return seg_loop, seg_dir, -1
                seg_loop[s] = nloops
                seg_dir[s] = d
                if vptr[v + 1] == vptr[v]:
                    break
                v, j, d = _step(v, j, d, vptr, vlink, link_lo, link_hi, pos_lo, pos_hi, cross)
                if v == v0 and j == j0 and d == 1:
                    break
            nloops += 1
    return seg_loop, seg_dir, nloops


@numba.njit(cache=True)
def _walk(v0, j0, d0, vptr, vlink, link_lo, link_hi, pos_lo, pos_hi, cross, segoff):
    """All (segment, direction) states of the loop started at (v0, j0, d0)."""
    out_s = []
    out_d = []
    v, j, d = v0, j0, d0
    while True:
        out_s.append(segoff[v] + j)
        out_d.append(d)
        if vptr[v + 1] == vptr[v]:
            break
        v, j, d = _step(v, j, d, vptr, vlink, link_lo, link_hi, pos_lo, pos_hi, cross)
        if v == v0 and j == j0 and d == d0:
            break
    return np.array(out_s, dtype=np.int64), np.array(out_d, dtype=np.int8)


@dataclass(frozen=True)
class Segment:
    vertex: int
    lo: float
    hi: float
    full_circle: bool = False

    @property
    def wraps(self) -> bool:
        """True when the arc passes through time 0 (``lo >= hi``)."""
        return self.full_circle or self.lo >= self.hi


class _Tracer:
    """Segment bookkeeping for one (graph, configuration) pair."""

    def __init__(self, g: Graph, c: Configuration):
        self.g = g
        self.c = c
        self.ev = VertexEvents(g, c)
        k = np.diff(self.ev.vptr)
        nseg = np.maximum(k, 1)
        self.segoff = np.zeros(g.vertex_count + 1, dtype=np.int64)
        np.cumsum(nseg, out=self.segoff[1:])
        self.seg_vertex = np.repeat(np.arange(g.vertex_count, dtype=np.int64), nseg)
        self.cross = c.marks.astype(np.bool_)

    def args(self):
        ev = self.ev
        return (ev.vptr, ev.vlink, ev.link_lo, ev.link_hi, ev.pos_lo, ev.pos_hi, self.cross)

    def segment_lengths(self) -> np.ndarray:
        beta = self.c.params.beta
        ev = self.ev
        lengths = np.full(self.segoff[-1], beta)
        k = np.diff(ev.vptr)
        has = k > 0
        # tops are the event heights; bottoms the previous event, cyclically
        tops = ev.vheight
        prev_idx = np.arange(len(tops)) - 1
        first = ev.vptr[:-1][has]
        last = ev.vptr[1:][has] - 1
        prev_idx[first] = last
        gap = np.mod(tops - tops[prev_idx], beta)
        gap[k.repeat(k) == 1] = beta
        lengths[self.segoff[:-1][has].repeat(k[has]) + _ranks(k[has])] = gap
        return lengths


def _ranks(k: np.ndarray) -> np.ndarray:
    """``[0..k0-1, 0..k1-1, ...]``."""
    if k.size == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.repeat(np.cumsum(k) - k, k)
    return np.arange(int(k.sum())) - starts


@dataclass(frozen=True, eq=False)
class LoopPartition:
    """Loops of a configuration.

    ``seg_loop[s]`` and ``seg_dir[s]`` (``+1`` up, ``-1`` down) give the loop
    and traversal direction of segment ``s``; segments of vertex ``v`` are
    ``segoff[v]:segoff[v+1]`` with the time-0 segment first.
    """

    seg_loop: np.ndarray
    seg_dir: np.ndarray
    segoff: np.ndarray
    seg_vertex: np.ndarray
    seg_length: np.ndarray
    n_loops: int

    @property
    def vertex_count(self) -> int:
        return len(self.segoff) - 1

    @property
    def vertex_time0_loop(self) -> np.ndarray:
        return self.seg_loop[self.segoff[:-1]]

    @property
    def time0_direction(self) -> np.ndarray:
        return self.seg_dir[self.segoff[:-1]]

    def loop_sizes(self) -> np.ndarray:
        """Number of vertices visited at time 0, per loop (may be 0)."""
        return np.bincount(self.vertex_time0_loop, minlength=self.n_loops)

    def vertical_lengths(self) -> np.ndarray:
        """Total vertical length of every loop."""
        return np.bincount(self.seg_loop, weights=self.seg_length, minlength=self.n_loops)

    def max_loop_size(self) -> int:
        return int(self.loop_sizes().max()) if self.vertex_count else 0

    def loop_segments(self, loop: int) -> list[tuple[int, int]]:
        idx = np.flatnonzero(self.seg_loop == loop)
        return list(zip(idx.tolist(), self.seg_dir[idx].tolist()))

    def loop_vertices_at_time0(self, loop: int) -> set[int]:
        return set(np.flatnonzero(self.vertex_time0_loop == loop).tolist())

    @property
    def loops(self) -> list[dict]:
        return [
            {
                "segments": self.loop_segments(i),
                "time0_vertices": self.loop_vertices_at_time0(i),
            }
            for i in range(self.n_loops)
        ]


def trace_loops(g: Graph, c: Configuration) -> LoopPartition:
    """Decompose all vertical segments into loops.

    Raises :class:`ConfigurationError` on unsorted or tied heights.
    """
    tr = _Tracer(g, c)
    seg_loop, seg_dir, nloops = _trace_kernel(*tr.args(), tr.segoff, tr.seg_vertex)
    if nloops < 0:
        raise ConfigurationError("segment visited twice while tracing; malformed configuration")
    return LoopPartition(seg_loop, seg_dir, tr.segoff, tr.seg_vertex, tr.segment_lengths(), nloops)


def trace_from(g: Graph, c: Configuration, v: int, t: float, direction: int = 1):
    """Trace the loop through the point ``(v, t)`` starting in ``direction``.

    Returns parallel arrays of segment ids and directions in visiting order.
    """
    tr = _Tracer(g, c)
    heights = tr.ev.at(v)
    k = len(heights)
    j = 0
    if k:
        j = int(np.searchsorted(heights, np.mod(t, c.params.beta), side="left"))
        if j == k:
            j = 0
    return _walk(v, j, 1 if direction >= 0 else -1, *tr.args(), tr.segoff)


def segments(g: Graph, c: Configuration) -> list[Segment]:
    """All segments in global order."""
    ev = VertexEvents(g, c)
    out = []
    for v in range(g.vertex_count):
        h = ev.at(v).tolist()
        if not h:
            out.append(Segment(v, 0.0, c.params.beta, full_circle=True))
            continue
        for j in range(len(h)):
            out.append(Segment(v, h[j - 1], h[j], full_circle=len(h) == 1))
    return out


def loop_of(lp: LoopPartition, v: int) -> set[int]:
    """Vertices whose time-0 point lies on the loop through ``(v, 0)``."""
    if not 0 <= v < lp.vertex_count:
        raise ValueError(f"unknown vertex {v}")
    return lp.loop_vertices_at_time0(int(lp.vertex_time0_loop[v]))


def loop_count(lp: LoopPartition) -> int:
    return lp.n_loops


def rotate_time(c: Configuration, s: float) -> Configuration:
    """Shift every height by ``s`` around the time circle."""
    beta = c.params.beta
    if not 0 <= s < beta:
        raise ValueError(f"shift must lie in [0, beta), got {s}")
    h = c.heights + s
    h = np.where(h >= beta, h - beta, h)
    edge = c.edge_of_link()
    order = np.lexsort((h, edge))
    return Configuration(c.params, c.ptr, h[order], c.marks[order])


def mark_vertices(g: Graph, c: Configuration) -> np.ndarray:
    """``+1``/``-1`` marks of the time-0 points.

    Vertices are taken in id order; an unmarked vertex gets ``+`` and its
    loop is followed upward from time 0, marking every time-0 point on it by
    the direction in which it is traversed.
    """
    # the tracer starts loops at time-0 segments in vertex order, going up,
    # so the recorded time-0 directions are exactly these marks
    return trace_loops(g, c).time0_direction.astype(np.int64)
