"""Birth-death Metropolis chain for the loop measure reweighted by
``theta ** (number of loops)`` on a finite graph.

Proposals: with probability 1/2 add a link (uniform edge, uniform height,
cross with probability ``u``), otherwise delete a uniformly chosen link.
With ``lam = |E| * beta`` and ``n`` the current number of links, births
are accepted with ``min(1, theta**dl * lam / (n + 1))`` and deaths with
``min(1, theta**dl * n / lam)``.

The change in loop number ``dl`` is always -1, 0 or +1 and is found by
walking only the loops through the two touched points; a walk longer than
``local_budget`` steps falls back to a full retrace.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .coloring import color_edges
from .graphs import Graph
from .link_sampler import Configuration, ConfigurationError, ModelParams, VertexEvents
from .loops import trace_loops


@dataclass(frozen=True)
class ThetaParams:
    base: ModelParams
    theta: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")

    @property
    def beta(self) -> float:
        return self.base.beta

    @property
    def u(self) -> float:
        return self.base.u


class BudgetExceeded(Exception):
    pass


def acceptance_probability(kind: str, dl: int, n: int, lam: float, theta: float) -> float:
    """Metropolis acceptance of a birth (``n`` links before) or a death
    (``n`` links before, ``n >= 1``)."""
    if kind == "birth":
        ratio = theta**dl * lam / (n + 1)
    elif kind == "death":
        ratio = theta**dl * n / lam
    else:
        raise ValueError(f"unknown move {kind!r}")
    return min(1.0, ratio)


@dataclass
class ChainState:
    """Mutable chain state: links plus per-vertex sorted event lists.

    ``loops`` caches the current loop count.
    """

    g: Graph
    beta: float
    u: float
    heights: list = field(default_factory=list)  # per vertex, sorted
    ids: list = field(default_factory=list)  # per vertex, link ids matching heights
    links: dict = field(default_factory=dict)  # link id -> (edge, height, mark)
    live: list = field(default_factory=list)  # link ids, for uniform deletion
    where: dict = field(default_factory=dict)  # link id -> index in live
    loops: int = 0
    step: int = 0
    proposed: dict = field(default_factory=lambda: {"birth": 0, "death": 0})
    accepted: dict = field(default_factory=lambda: {"birth": 0, "death": 0})
    fallbacks: int = 0
    local_budget: int = 10_000
    _next_id: int = 0

    @classmethod
    def from_configuration(cls, g: Graph, c: Configuration, local_budget: int = 10_000):
        VertexEvents(g, c)  # rejects ties
        st = cls(g=g, beta=c.params.beta, u=c.params.u, local_budget=local_budget)
        st.heights = [[] for _ in range(g.vertex_count)]
        st.ids = [[] for _ in range(g.vertex_count)]
        for e, h, m in zip(c.edge_of_link().tolist(), c.heights.tolist(), c.marks.tolist()):
            st._insert(e, h, m)
        st.loops = trace_loops(g, c).n_loops
        return st

    @property
    def n_links(self) -> int:
        return len(self.live)

    @property
    def lam(self) -> float:
        return self.g.edge_count * self.beta

    def acceptance_rates(self) -> dict[str, float]:
        return {
            k: (self.accepted[k] / self.proposed[k] if self.proposed[k] else float("nan"))
            for k in self.proposed
        }

    def to_configuration(self) -> Configuration:
        E = self.g.edge_count
        if not self.links:
            return Configuration.empty(E, ModelParams(self.beta, self.u))
        items = sorted(self.links.values())
        edge = np.array([e for e, _, _ in items], dtype=np.int64)
        ptr = np.zeros(E + 1, dtype=np.int64)
        np.cumsum(np.bincount(edge, minlength=E), out=ptr[1:])
        return Configuration(
            ModelParams(self.beta, self.u),
            ptr,
            [h for _, h, _ in items],
            [m for _, _, m in items],
        )

    # structure edits --------------------------------------------------------

    def _insert(self, e: int, h: float, m: int) -> int:
        lid = self._next_id
        self._next_id += 1
        self.links[lid] = (e, h, m)
        self.where[lid] = len(self.live)
        self.live.append(lid)
        for x in self.g.edges[e].tolist():
            i = bisect_left(self.heights[x], h)
            self.heights[x].insert(i, h)
            self.ids[x].insert(i, lid)
        return lid

    def _remove(self, lid: int) -> tuple:
        e, h, m = self.links.pop(lid)
        i = self.where.pop(lid)
        last = self.live.pop()
        if last != lid:
            self.live[i] = last
            self.where[last] = i
        for x in self.g.edges[e].tolist():
            j = bisect_left(self.heights[x], h)
            del self.heights[x][j]
            del self.ids[x][j]
        return e, h, m

    # local loop walks -------------------------------------------------------

    def _move(self, v, j, d):
        hv = self.heights[v]
        k = len(hv)
        ev = j if d == 1 else (j - 1) % k
        e, h, m = self.links[self.ids[v][ev]]
        a, b = self.g.edges[e].tolist()
        w = b if a == v else a
        q = bisect_left(self.heights[w], h)
        kw = len(self.heights[w])
        if m:
            return w, ((q + 1) % kw if d == 1 else q), d
        if d == 1:
            return w, q, -1
        return w, (q + 1) % kw, 1

    def walk(self, v: int, j: int) -> set:
        """Segments ``(vertex, index)`` on the loop through segment ``j`` of ``v``."""
        seen = {(v, j)}
        if not self.heights[v]:
            return seen
        state = (v, j, 1)
        steps = 0
        while True:
            state = self._move(*state)
            if state == (v, j, 1):
                return seen
            seen.add(state[:2])
            steps += 1
            if steps > self.local_budget:
                raise BudgetExceeded

    def _segment_at(self, x: int, h: float) -> int:
        i = bisect_left(self.heights[x], h)
        return 0 if i == len(self.heights[x]) else i

    def _loops_through_points(self, x, y, h) -> int:
        """1 if ``(x, h)`` and ``(y, h)`` share a loop (no link at h), else 2."""
        return 1 if (y, self._segment_at(y, h)) in self.walk(x, self._segment_at(x, h)) else 2

    def _loops_through_link(self, x, y, h) -> int:
        """Number of distinct loops through the four arcs meeting a link at h."""
        px = bisect_left(self.heights[x], h)
        py = bisect_left(self.heights[y], h)
        kx, ky = len(self.heights[x]), len(self.heights[y])
        seen = self.walk(x, (px + 1) % kx)
        ends = {(x, px), (y, py), (y, (py + 1) % ky)}
        return 1 if ends <= seen else 2

    def delta_loops_birth(self, e: int, h: float, m: int) -> int:
        x, y = self.g.edges[e].tolist()
        try:
            before = self._loops_through_points(x, y, h)
            lid = self._insert(e, h, m)
            try:
                after = self._loops_through_link(x, y, h)
            finally:
                self._remove(lid)
            return after - before
        except BudgetExceeded:
            self.fallbacks += 1
            lid = self._insert(e, h, m)
            try:
                return trace_loops(self.g, self.to_configuration()).n_loops - self.loops
            finally:
                self._remove(lid)

    def delta_loops_death(self, lid: int) -> int:
        e, h, m = self.links[lid]
        x, y = self.g.edges[e].tolist()
        try:
            before = self._loops_through_link(x, y, h)
            self._remove(lid)
            try:
                after = self._loops_through_points(x, y, h)
            finally:
                self._restore(lid, e, h, m)
            return after - before
        except BudgetExceeded:
            self.fallbacks += 1
            self._remove(lid)
            try:
                return trace_loops(self.g, self.to_configuration()).n_loops - self.loops
            finally:
                self._restore(lid, e, h, m)

    def _restore(self, lid, e, h, m):
        new = self._insert(e, h, m)
        # keep the original id so callers can keep referring to it
        self.links[lid] = self.links.pop(new)
        idx = self.where.pop(new)
        self.where[lid] = idx
        self.live[idx] = lid
        for x in self.g.edges[e].tolist():
            j = bisect_left(self.heights[x], h)
            self.ids[x][j] = lid

    def has_height(self, e: int, h: float) -> bool:
        for x in self.g.edges[e].tolist():
            hx = self.heights[x]
            i = bisect_left(hx, h)
            if i < len(hx) and hx[i] == h:
                return True
        return False

    def check_cache(self) -> None:
        full = trace_loops(self.g, self.to_configuration()).n_loops
        if full != self.loops:
            raise RuntimeError(f"cached loop count {self.loops} != retraced {full} at step {self.step}")


def mh_step(state: ChainState, params: ThetaParams, rng: np.random.Generator,
            check_every: int = 10_000) -> ChainState:
    """One Metropolis birth-death update, in place."""
    theta, lam = params.theta, state.lam
    state.step += 1
    if rng.random() < 0.5:
        state.proposed["birth"] += 1
        e = int(rng.integers(state.g.edge_count))
        h = float(rng.random() * state.beta)
        m = int(rng.random() < state.u)
        if h < state.beta and not state.has_height(e, h):
            dl = state.delta_loops_birth(e, h, m)
            if rng.random() < acceptance_probability("birth", dl, state.n_links, lam, theta):
                state._insert(e, h, m)
                state.loops += dl
                state.accepted["birth"] += 1
    else:
        state.proposed["death"] += 1
        n = state.n_links
        if n:
            lid = state.live[int(rng.integers(n))]
            dl = state.delta_loops_death(lid)
            if rng.random() < acceptance_probability("death", dl, n, lam, theta):
                state._remove(lid)
                state.loops += dl
                state.accepted["death"] += 1
    if check_every and state.step % check_every == 0:
        state.check_cache()
    return state


def summarize(state: ChainState) -> dict:
    c = state.to_configuration()
    lp = trace_loops(state.g, c)
    col = color_edges(state.g, c).counts()
    return {
        "step": state.step,
        "n": state.n_links,
        "loops": state.loops,
        "max_loop_frac": lp.max_loop_size() / state.g.vertex_count,
        "red": col["red"],
        "blue": col["blue"],
    }


def run_chain(
    g: Graph,
    init: Configuration,
    params: ThetaParams,
    burn_in: int,
    samples: int,
    thin: int,
    rng: np.random.Generator,
    full: bool = True,
    check_every: int = 10_000,
):
    """Yield one summary record every ``thin`` steps after ``burn_in`` steps.

    With ``full=False`` only the step, link count and loop count are
    reported, skipping the per-record retrace and colouring.
    """
    if burn_in < 0 or samples < 0 or thin < 1:
        raise ValueError("need burn_in >= 0, samples >= 0, thin >= 1")
    if init.params != params.base:
        raise ConfigurationError("initial configuration parameters differ from chain parameters")
    state = ChainState.from_configuration(g, init)
    for _ in range(burn_in):
        mh_step(state, params, rng, check_every)
    for _ in range(samples):
        for _ in range(thin):
            mh_step(state, params, rng, check_every)
        if full:
            rec = summarize(state)
        else:
            rec = {"step": state.step, "n": state.n_links, "loops": state.loops}
        rec["acc_birth"], rec["acc_death"] = (
            state.acceptance_rates()["birth"], state.acceptance_rates()["death"])
        yield rec
