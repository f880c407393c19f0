"""Red / blue / uncoloured edge classes, pivotality and local diagnostics.

An edge is red when it carries exactly two links, both crosses, at heights
``a < b`` and no edge sharing an endpoint has a link in ``(a, b]``.  Such an
edge can be emptied without changing any loop.  Blue means at least one
link and not red; uncoloured means no link.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numba
import numpy as np

from .graphs import Graph
from .link_sampler import Configuration, VertexEvents, count_links_in


class Color(IntEnum):
    UNCOLOURED = 0
    BLUE = 1
    RED = 2


@dataclass(frozen=True, eq=False)
class EdgeColoring:
    color: np.ndarray  # int8 per edge, values of Color

    @property
    def red(self) -> np.ndarray:
        return self.color == Color.RED

    @property
    def blue(self) -> np.ndarray:
        return self.color == Color.BLUE

    @property
    def open(self) -> np.ndarray:
        return self.color != Color.UNCOLOURED

    def counts(self) -> dict[str, int]:
        return {
            "red": int(self.red.sum()),
            "blue": int(self.blue.sum()),
            "uncoloured": int((self.color == Color.UNCOLOURED).sum()),
        }

    def __getitem__(self, e: int) -> Color:
        return Color(int(self.color[e]))


@numba.njit(cache=True)
def _count_in(vheight, lo, hi, a, b):
    # events in (a, b] among the sorted heights vheight[lo:hi]
    return np.searchsorted(vheight[lo:hi], b, side="right") - np.searchsorted(
        vheight[lo:hi], a, side="right"
    )


@numba.njit(cache=True)
def _red_kernel(cand, ptr, heights, edges, vptr, vheight):
    red = np.zeros(len(cand), dtype=np.bool_)
    for i in range(len(cand)):
        e = cand[i]
        a = heights[ptr[e]]
        b = heights[ptr[e] + 1]
        ok = True
        for side in range(2):
            x = edges[e, side]
            # the only event allowed in (a, b] at an endpoint is the edge's own link at b
            if _count_in(vheight, vptr[x], vptr[x + 1], a, b) != 1:
                ok = False
                break
        red[i] = ok
    return red


def color_edges(g: Graph, c: Configuration, events: VertexEvents | None = None) -> EdgeColoring:
    ev = events if events is not None else VertexEvents(g, c)
    counts = c.counts
    color = np.where(counts > 0, Color.BLUE, Color.UNCOLOURED).astype(np.int8)
    two = np.flatnonzero(counts == 2)
    if two.size:
        first = c.ptr[two]
        both_cross = (c.marks[first] == 1) & (c.marks[first + 1] == 1)
        cand = two[both_cross]
        if cand.size:
            red = _red_kernel(cand, c.ptr, c.heights, g.edges, ev.vptr, ev.vheight)
            color[cand[red]] = Color.RED
    return EdgeColoring(color)


def is_pivotal(g: Graph, c: Configuration, e0: int, etilde: int) -> bool:
    """Whether the contents of ``e0`` can change the redness of ``etilde``.

    Evaluated by the characterisation: ``etilde`` has exactly two links at
    ``a < b`` and no edge adjacent to ``etilde`` other than ``e0`` has a link
    in ``(a, b]``.  ``e0`` itself is never inspected.
    """
    if not g.are_adjacent(e0, etilde):
        raise ValueError(f"edge {etilde} is not adjacent to edge {e0}")
    if c.n(etilde) != 2:
        return False
    a, b = (link.height for link in c.links(etilde))
    for f in g.edge_neighbors(etilde):
        if f != e0 and count_links_in(c, int(f), a, b) > 0:
            return False
    return True


def pivotal_by_perturbation(
    g: Graph, c: Configuration, e0: int, etilde: int, replacements
) -> bool:
    """Slow cross-check: does any of the given replacement contents of ``e0``
    flip the colour class red/not-red of ``etilde``?"""
    base = color_edges(g, c).red[etilde]
    for links in replacements:
        alt = replace_edge(c, e0, links)
        if color_edges(g, alt).red[etilde] != base:
            return True
    return False


def replace_edge(c: Configuration, e: int, links) -> Configuration:
    """Copy of ``c`` with the links of ``e`` replaced by ``[(height, mark), ...]``."""
    items = sorted((float(h), int(m)) for h, m in links)
    lo, hi = c.ptr[e], c.ptr[e + 1]
    delta = len(items) - (hi - lo)
    ptr = c.ptr.copy()
    ptr[e + 1 :] += delta
    heights = np.concatenate([c.heights[:lo], [h for h, _ in items], c.heights[hi:]])
    marks = np.concatenate([c.marks[:lo], [m for _, m in items], c.marks[hi:]]).astype(np.int8)
    return Configuration(c.params, ptr, heights, marks)


def union_length(intervals) -> float:
    """Lebesgue measure of a union of half-open intervals ``(a, b]``."""
    total = 0.0
    cur_a = cur_b = None
    for a, b in sorted(intervals):
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                total += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        total += cur_b - cur_a
    return total


@dataclass
class PivotalReport:
    probe: int
    pivotal: dict[tuple[int, int], bool] = field(default_factory=dict)
    neighbor_link_sum: int = 0
    free_time_measure: float = 0.0
    red_neighbors: int = 0


def diagnostics(
    g: Graph, c: Configuration, e0: int, coloring: EdgeColoring | None = None
) -> PivotalReport:
    """Local observables around the probe edge ``e0``.

    ``neighbor_link_sum`` adds up the links on non-red neighbours;
    ``free_time_measure`` is the part of ``[0, beta]`` not covered by the
    gaps ``(a, b]`` of red neighbours.
    """
    col = coloring if coloring is not None else color_edges(g, c)
    report = PivotalReport(probe=int(e0))
    gaps = []
    for f in g.edge_neighbors(e0).tolist():
        report.pivotal[(int(e0), f)] = is_pivotal(g, c, e0, f)
        if col.red[f]:
            gaps.append(tuple(link.height for link in c.links(f)))
        else:
            report.neighbor_link_sum += c.n(f)
    report.red_neighbors = len(gaps)
    report.free_time_measure = max(0.0, c.params.beta - union_length(gaps))
    return report
