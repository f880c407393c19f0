"""Replica orchestration: beta scans, crossing estimates, the loop versus
percolation gap, and red-edge frequency diagnostics.

Seeding: the master seed and a stream key are fed to
``numpy.random.SeedSequence(seed, spawn_key=key)``.  Keys are
``(0, replica)`` for a coupled scan (one configuration per replica, shared
by every grid point), ``(0, grid_index, replica)`` for uncoupled scans,
``(1, ...)`` for bootstrap resampling and ``(2, ...)`` for the
conditioned sampling used by :func:`estimate_delta`.  Records carry their
key, so any replica can be re-run alone.
"""

from __future__ import annotations

import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .coloring import color_edges, diagnostics
from .graphs import Graph, GraphSpec, build_graph
from .link_sampler import (
    Configuration,
    ModelParams,
    VertexEvents,
    sample_conditioned_nonempty,
    sample_configuration,
    truncate,
)
from .loops import trace_loops
from .percolation import CrossingEstimate, build_clusters, crossing_with_ci, sweep

RECORD_COLUMNS = (
    "grid", "beta", "replica", "stream", "loops", "max_loop_frac",
    "largest_S_frac", "largest_B_frac", "open", "red", "blue", "wrap_S", "wrap_B",
)
SENSITIVITY_C = (0.02, 0.05, 0.1)


class ExperimentError(ValueError):
    pass


class InclusionViolation(RuntimeError):
    """A loop left its blue cluster, or a blue cluster its open cluster."""


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec
    beta: tuple[float, ...]
    u: float = 1.0
    replicas: int = 100
    seed: int = 0
    observables: tuple[str, ...] = ("loops", "S", "B")
    c: float = 0.05
    out: str | None = None
    workers: int = 1
    coupled: bool = True
    sizes: tuple[int, ...] = ()
    probes: int = 100
    timing: bool = False

    def __post_init__(self):
        graph = GraphSpec.parse(self.graph) if isinstance(self.graph, str) else self.graph
        object.__setattr__(self, "graph", graph)
        beta = self.beta
        if isinstance(beta, (int, float)):
            beta = (beta,)
        beta = tuple(float(b) for b in beta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "observables", tuple(self.observables))
        if not beta:
            raise ExperimentError("beta grid is empty")
        if any(b < 0 or not math.isfinite(b) for b in beta):
            raise ExperimentError("beta values must be finite and non-negative")
        if any(b2 <= b1 for b1, b2 in zip(beta, beta[1:])):
            raise ExperimentError("beta grid must be strictly increasing")
        if not 0 <= self.u <= 1:
            raise ExperimentError("u must lie in [0, 1]")
        if self.replicas < 1:
            raise ExperimentError("replicas must be >= 1")
        if not 0 < self.c < 1:
            raise ExperimentError("c must lie in (0, 1)")
        if self.workers < 1:
            raise ExperimentError("workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ExperimentError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as exc:
            raise ExperimentError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ExperimentError(f"{path}: config must be a key/value mapping")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict:
        return {
            "graph": str(self.graph), "beta": list(self.beta), "u": self.u,
            "replicas": self.replicas, "seed": self.seed,
            "observables": list(self.observables), "c": self.c, "out": self.out,
            "workers": self.workers, "coupled": self.coupled,
            "sizes": list(self.sizes), "probes": self.probes, "timing": self.timing,
        }


def _echo(cfg: ExperimentConfig) -> dict:
    # output path and worker count do not affect results; leaving them out
    # keeps streams byte-identical across destinations and pool sizes
    m = cfg.to_mapping()
    del m["out"], m["workers"]
    return m


# one replica -----------------------------------------------------------------


def _wrap_str(wrap) -> str:
    return "-" if wrap is None else "".join("1" if w else "0" for w in wrap)


def check_inclusion(lp, forest_b, forest_s) -> None:
    """Every loop inside one blue cluster, every blue cluster inside one open cluster."""
    lv = lp.vertex_time0_loop
    for inner, outer, what in ((lv, forest_b.root, "loop"), (forest_b.root, forest_s.root, "blue cluster")):
        ref = np.empty(int(inner.max()) + 1, dtype=np.int64)
        ref[inner] = outer
        bad = np.flatnonzero(ref[inner] != outer)
        if bad.size:
            raise InclusionViolation(f"{what} of vertex {int(bad[0])} is not inside a single cluster")


def measure(g: Graph, c: Configuration) -> dict:
    """Loops, colours and S/B clusters of one configuration (inclusion checked)."""
    ev = VertexEvents(g, c)
    lp = trace_loops(g, c)
    col = color_edges(g, c, ev)
    fs = build_clusters(g, col.open)
    fb = build_clusters(g, col.blue)
    check_inclusion(lp, fb, fs)
    counts = col.counts()
    V = g.vertex_count
    return {
        "loops": lp.n_loops,
        "max_loop_frac": lp.max_loop_size() / V,
        "largest_S_frac": int(fs.size[fs.root].max()) / V,
        "largest_B_frac": int(fb.size[fb.root].max()) / V,
        "open": counts["red"] + counts["blue"],
        "red": counts["red"],
        "blue": counts["blue"],
        "wrap_S": _wrap_str(fs.wrap),
        "wrap_B": _wrap_str(fb.wrap),
        "_loop_sizes": lp.loop_sizes()[lp.vertex_time0_loop],
    }


def _measure_empty(g: Graph) -> dict:
    V = g.vertex_count
    wrap = None if not g.is_torus else (False,) * g.shifts.shape[1]
    return {
        "loops": V, "max_loop_frac": 1 / V, "largest_S_frac": 1 / V, "largest_B_frac": 1 / V,
        "open": 0, "red": 0, "blue": 0, "wrap_S": _wrap_str(wrap), "wrap_B": _wrap_str(wrap),
        "_loop_sizes": np.ones(V, dtype=np.int64),
    }


def _at_beta(g: Graph, base: Configuration | None, beta: float) -> dict:
    if beta == 0:
        return _measure_empty(g)
    return measure(g, truncate(base, beta))


def _replica_records(args) -> list[dict]:
    cfg, r, keep_sizes = args
    g = build_graph(cfg.graph)
    grid = cfg.beta
    out = []
    if cfg.coupled:
        rng = substream(cfg.seed, 0, r)
        bmax = grid[-1]
        base = sample_configuration(g, ModelParams(bmax, cfg.u), rng) if bmax > 0 else None
    for i, beta in enumerate(grid):
        t0 = time.perf_counter()
        if cfg.coupled:
            stream = f"0.{r}"
            rec = _at_beta(g, base, beta)
        else:
            stream = f"0.{i}.{r}"
            rng = substream(cfg.seed, 0, i, r)
            c = sample_configuration(g, ModelParams(beta, cfg.u), rng) if beta > 0 else None
            rec = _at_beta(g, c, beta)
        rec.update(grid=i, beta=beta, replica=r, stream=stream)
        if cfg.timing:
            rec["wall_time"] = time.perf_counter() - t0
        if not keep_sizes:
            rec.pop("_loop_sizes")
        out.append(rec)
    return out


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# records ----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_records(records, columns) -> str:
    lines = ["\t".join(columns)]
    lines += ["\t".join(_fmt(rec[k]) for k in columns) for rec in records]
    return "\n".join(lines) + "\n"


def format_summary(summary: dict) -> str:
    buf = io.StringIO()
    yaml.safe_dump(_plain(summary), buf, sort_keys=False, default_flow_style=None)
    return "".join(f"# {line}\n" for line in buf.getvalue().splitlines())


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, CrossingEstimate):
        return _plain({
            "value": obj.value if obj.value is not None else "no crossing",
            "ci": list(obj.ci) if obj.ci else None,
            "replicas": obj.replicas, "bracket": list(obj.bracket),
        })
    return obj


def write_stream(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from None


# statistics -------------------------------------------------------------------


def bootstrap_mean_ci(x, rng, n_boot: int = 1000, alpha: float = 0.05):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()), (float(x.mean()), float(x.mean()))
    idx = rng.integers(0, len(x), size=(n_boot, len(x)))
    means = x[idx].mean(axis=1)
    lo, hi = np.quantile(means, [alpha / 2, 1 - alpha / 2])
    return float(x.mean()), (float(lo), float(hi))


def grid_crossing(
    grid, indicators, rng, level: float = 0.5, n_boot: int = 1000, alpha: float = 0.05
) -> CrossingEstimate:
    """First upward crossing of ``level`` by the replica-averaged indicator
    curve on ``grid`` (linear interpolation), with a bootstrap percentile CI
    over replicas.  Not bracketed (curve starts at/above the level, or never
    reaches it) gives ``value=None``."""
    grid = np.asarray(grid, dtype=float)
    ind = np.asarray(indicators, dtype=float)
    R = ind.shape[0]
    bracket = (float(grid[0]), float(grid[-1]))

    def cross(y):
        if len(y) < 2 or y[0] >= level:
            return None
        above = np.flatnonzero(y >= level)
        if not above.size:
            return None
        i = int(above[0]) - 1
        return float(grid[i] + (level - y[i]) / (y[i + 1] - y[i]) * (grid[i + 1] - grid[i]))

    value = cross(ind.mean(axis=0))
    if value is None:
        return CrossingEstimate(None, None, R, bracket, False)
    boots = []
    for _ in range(n_boot):
        y = ind[rng.integers(0, R, size=R)].mean(axis=0)
        x = cross(y)
        if x is None:
            x = bracket[0] if y[0] >= level else bracket[1]
        boots.append(x)
    lo, hi = np.quantile(boots, [alpha / 2, 1 - alpha / 2])
    return CrossingEstimate(value, (float(lo), float(hi)), R, bracket, True)


def fit_exponential_tail(sizes, min_count: int = 5):
    """Least-squares fit of ``P(size = k) ~ a exp(-b k)`` on the empirical
    mass function, using sizes seen at least ``min_count`` times."""
    sizes = np.asarray(sizes, dtype=np.int64)
    ks, counts = np.unique(sizes[sizes >= 1], return_counts=True)
    keep = counts >= min_count
    if keep.sum() < 3:
        return None
    p = counts[keep] / len(sizes)
    slope, intercept = np.polyfit(ks[keep], np.log(p), 1)
    return float(np.exp(intercept)), float(-slope)


# run_experiment ---------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, write: bool = True):
    """Measure every replica at every beta of the grid.

    Returns ``(records, summary)``; with ``write`` the record stream and the
    ``#``-prefixed summary go to ``cfg.out`` (stdout for ``None``/``-``).
    """
    g = build_graph(cfg.graph)
    per_replica = _map(_replica_records, [(cfg, r, False) for r in range(cfg.replicas)], cfg.workers)
    records = sorted((rec for recs in per_replica for rec in recs),
                     key=lambda rec: (rec["grid"], rec["replica"]))
    boot = substream(cfg.seed, 1, 0)
    E = g.edge_count
    points = []
    for i, beta in enumerate(cfg.beta):
        rows = [rec for rec in records if rec["grid"] == i]
        open_frac = np.array([rec["open"] for rec in rows]) / E
        p = -math.expm1(-beta)
        se = math.sqrt(p * (1 - p) / (E * len(rows))) if 0 < p < 1 else 0.0
        point = {"beta": beta, "replicas": len(rows), "open_density_expected": p}
        for key, arr in (
            ("open_density", open_frac),
            ("red_density", np.array([rec["red"] for rec in rows]) / E),
            ("max_loop_frac", [rec["max_loop_frac"] for rec in rows]),
            ("largest_S_frac", [rec["largest_S_frac"] for rec in rows]),
            ("largest_B_frac", [rec["largest_B_frac"] for rec in rows]),
        ):
            mean, ci = bootstrap_mean_ci(arr, boot)
            point[key] = {"mean": mean, "ci": list(ci)}
        point["open_density_z"] = (open_frac.mean() - p) / se if se > 0 else 0.0
        for cc in SENSITIVITY_C:
            point[f"P_loop_gt_{cc}"] = float(np.mean([rec["max_loop_frac"] > cc for rec in rows]))
        point["P_S_gt_c"] = float(np.mean([rec["largest_S_frac"] > cfg.c for rec in rows]))
        if g.is_torus:
            point["P_wrap_S_axis0"] = float(np.mean([rec["wrap_S"][0] == "1" for rec in rows]))
        points.append(point)
    summary = {"config": _echo(cfg), "graph_hash": g.graph_hash(), "points": points}
    if write:
        columns = RECORD_COLUMNS + (("wall_time",) if cfg.timing else ())
        write_stream(cfg.out, format_records(records, columns) + format_summary(summary))
    return records, summary


# gap --------------------------------------------------------------------------


def _gap_replica(args):
    cfg, L, r = args
    spec = cfg.graph.with_size(L)
    g = build_graph(spec)
    grid = np.asarray(cfg.beta)
    rng = substream(cfg.seed, 0, L, r)
    base = sample_configuration(g, ModelParams(grid[-1], cfg.u), rng)
    arrival = np.full(g.edge_count, np.inf)
    has = base.counts > 0
    arrival[has] = base.heights[base.ptr[:-1][has]]
    _, _, first_wrap, first_frac = sweep(g, arrival, [], c=cfg.c, wrap_axis=0)
    rows = []
    for beta in grid:
        m = _at_beta(g, base, float(beta))
        rows.append((m["max_loop_frac"], m["largest_S_frac"], m["largest_B_frac"]))
    return first_wrap, first_frac, np.array(rows)


def estimate_gap(cfg: ExperimentConfig, sizes=None, tail_beta: float | None = None) -> dict:
    """Loop and percolation crossing points per system size.

    Per size and replica one configuration at the largest beta is sampled and
    truncated to every grid value.  The percolation estimate is the crossing
    of P(largest open cluster > c|V|), the loop estimate that of
    P(max_v |L(v)| > c|V|); the same macroscopic threshold ``c`` is used for
    both.  The wrap-probability crossing of the open clusters is reported as
    well.  A gap is declared when, at the two largest sizes, the loop CI lies
    entirely above the percolation CI.
    """
    sizes = tuple(sizes if sizes is not None else cfg.sizes)
    if len(sizes) < 3:
        raise ExperimentError("estimate_gap needs at least 3 sizes")
    grid = np.asarray(cfg.beta)
    lo, hi = float(grid[0]), float(grid[-1])
    report = {"config": _echo(cfg), "sizes": {}}
    for L in sizes:
        res = _map(_gap_replica, [(cfg, L, r) for r in range(cfg.replicas)], cfg.workers)
        first_wrap = np.array([x[0] for x in res])
        first_frac = np.array([x[1] for x in res])
        fr = np.stack([x[2] for x in res])  # replica, grid, (loop, S, B)
        boot = substream(cfg.seed, 1, L)
        per_frac = _bracketed(crossing_with_ci(first_frac, boot, lo, hi), grid)
        per_wrap = (
            _bracketed(crossing_with_ci(first_wrap, boot, lo, hi), grid)
            if build_graph(cfg.graph.with_size(L)).is_torus
            else None
        )
        loop = grid_crossing(grid, fr[:, :, 0] > cfg.c, boot)
        blue = grid_crossing(grid, fr[:, :, 2] > cfg.c, boot)
        sens = {cc: grid_crossing(grid, fr[:, :, 0] > cc, boot) for cc in SENSITIVITY_C}
        sens_per = {cc: grid_crossing(grid, fr[:, :, 1] > cc, boot) for cc in SENSITIVITY_C}
        s_beats_loop = (fr[:, :, 1] > fr[:, :, 0]).mean(axis=0)
        entry = {
            "per": per_frac,
            "per_wrap": per_wrap,
            "blue": blue,
            "loop": loop,
            "loop_sensitivity": sens,
            "per_sensitivity": sens_per,
            "S_exceeds_loop_fraction": dict(zip(grid.tolist(), s_beats_loop.tolist())),
            "mean_max_loop_frac": dict(zip(grid.tolist(), fr[:, :, 0].mean(0).tolist())),
            "mean_largest_S_frac": dict(zip(grid.tolist(), fr[:, :, 1].mean(0).tolist())),
        }
        if loop.value is not None and per_frac.value is not None:
            entry["gap"] = loop.value - per_frac.value
        report["sizes"][L] = entry
    largest = sorted(sizes)[-2:]
    disjoint = []
    for L in largest:
        e = report["sizes"][L]
        ok = (
            e["loop"].ci is not None and e["per"].ci is not None
            and e["loop"].ci[0] > e["per"].ci[1]
        )
        disjoint.append(ok)
    report["gap_detected"] = all(disjoint)
    signs = [np.sign(report["sizes"][L].get("gap", np.nan)) for L in largest]
    report["gap_sign"] = int(signs[-1]) if not np.isnan(signs[-1]) else None
    if tail_beta is not None:
        report["tail_fit"] = _tail_fit(cfg, sorted(sizes)[-1], tail_beta)
    return report


def _bracketed(est: CrossingEstimate, grid) -> CrossingEstimate:
    if len(grid) < 2:
        return CrossingEstimate(None, None, est.replicas, est.bracket, False)
    return est


def _tail_fit(cfg: ExperimentConfig, L: int, beta: float, replicas: int = 20):
    g = build_graph(cfg.graph.with_size(L))
    sizes = []
    for r in range(replicas):
        rng = substream(cfg.seed, 3, L, r)
        c = sample_configuration(g, ModelParams(beta, cfg.u), rng)
        lp = trace_loops(g, c)
        sizes.append(lp.loop_sizes()[lp.vertex_time0_loop])
    fit = fit_exponential_tail(np.concatenate(sizes))
    return {"beta": beta, "L": L, "a": fit[0] if fit else None, "b": fit[1] if fit else None}


def format_gap_report(report: dict) -> str:
    lines = ["size\tper\tper_ci\tper_wrap\tper_wrap_ci\tloop\tloop_ci\tblue\tblue_ci"]

    def cell(est):
        if est is None or est.value is None:
            return "none\t-"
        return f"{est.value:.5f}\t[{est.ci[0]:.5f},{est.ci[1]:.5f}]"

    for L, e in report["sizes"].items():
        lines.append(f"{L}\t{cell(e['per'])}\t{cell(e['per_wrap'])}\t{cell(e['loop'])}\t{cell(e['blue'])}")
    summary = {
        "gap_detected": report["gap_detected"],
        "gap_sign": report["gap_sign"],
        "loop_sensitivity": {
            L: {cc: (est.value if est.value is not None else "none")
                for cc, est in e["loop_sensitivity"].items()}
            for L, e in report["sizes"].items()
        },
    }
    if "tail_fit" in report:
        summary["tail_fit"] = report["tail_fit"]
    return "\n".join(lines) + "\n" + format_summary(summary)


# delta ------------------------------------------------------------------------


def wilson_interval(k: int, n: int, z: float = 1.96):
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


@dataclass
class DiagnosticsRecord:
    beta: float
    u: float
    probes: int
    delta_hat: float
    delta_ci: tuple[float, float]
    argmin_edge: int
    pooled: float
    pooled_ci: tuple[float, float]
    by_red_neighbors: dict = field(default_factory=dict)
    neighbor_link_sum: dict = field(default_factory=dict)
    free_time_measure: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return _plain(self.__dict__)


def estimate_delta(cfg: ExperimentConfig, probes: int | None = None, diag_edges: int = 8,
                   min_stratum: int = 50) -> list[DiagnosticsRecord]:
    """Red frequency of edges under the law conditioned on every edge being
    open, one record per beta of the grid.

    ``delta_hat`` is the minimum over edges of the per-edge frequency of
    R_e = 1 across ``probes`` conditioned samples (all edges are open, so this
    is the frequency given S_e = 1).  Frequencies are also stratified by the
    number of red neighbours; local diagnostics are collected on the first
    ``diag_edges`` edges.
    """
    probes = probes if probes is not None else cfg.probes
    if probes < 100:
        raise ExperimentError("estimate_delta needs at least 100 probes")
    g = build_graph(cfg.graph)
    all_edges = np.arange(g.edge_count)
    inc = [g.edge_neighbors(e) for e in range(g.edge_count)]
    out = []
    for gi, beta in enumerate(cfg.beta):
        if beta <= 0:
            raise ExperimentError("estimate_delta needs beta > 0")
        params = ModelParams(beta, cfg.u)
        rng = substream(cfg.seed, 2, gi)
        red_counts = np.zeros(g.edge_count, dtype=np.int64)
        strata: dict[int, list[int]] = {}
        nls, ftm = [], []
        for _ in range(probes):
            c = sample_conditioned_nonempty(g, all_edges, params, rng)
            col = color_edges(g, c)
            red = col.red
            red_counts += red
            nred = np.array([int(red[nb].sum()) for nb in inc])
            for k in np.unique(nred):
                sel = nred == k
                s = strata.setdefault(int(k), [0, 0])
                s[0] += int(red[sel].sum())
                s[1] += int(sel.sum())
            for e in range(min(diag_edges, g.edge_count)):
                rep = diagnostics(g, c, e, col)
                nls.append(rep.neighbor_link_sum)
                ftm.append(rep.free_time_measure)
        freq = red_counts / probes
        e_min = int(np.argmin(freq))
        total = int(red_counts.sum())
        by_red = {
            k: {"freq": s[0] / s[1], "n": s[1], "ci": list(wilson_interval(s[0], s[1]))}
            for k, s in sorted(strata.items())
            if s[1] >= min_stratum
        }
        out.append(
            DiagnosticsRecord(
                beta=beta,
                u=cfg.u,
                probes=probes,
                delta_hat=float(freq[e_min]),
                delta_ci=wilson_interval(int(red_counts[e_min]), probes),
                argmin_edge=e_min,
                pooled=total / (probes * g.edge_count),
                pooled_ci=wilson_interval(total, probes * g.edge_count),
                by_red_neighbors=by_red,
                neighbor_link_sum=_quantiles(nls),
                free_time_measure=_quantiles(ftm),
            )
        )
    return out


def _quantiles(x) -> dict:
    if not len(x):
        return {}
    q = np.quantile(np.asarray(x, dtype=float), [0.0, 0.05, 0.5, 0.95, 1.0])
    return dict(zip(("min", "q05", "median", "q95", "max"), (float(v) for v in q)))


def delta_conditioned_closed_form(beta: float, u: float, m: int) -> float:
    """P(R_e = 1) when e and its ``m`` neighbours are all conditioned open and
    neighbours are independent; for checking :func:`estimate_delta`."""
    from scipy import integrate

    p2 = math.exp(-beta) * beta**2 / 2 / (-math.expm1(-beta))

    def integrand(gap):
        empty = (math.exp(-gap) - math.exp(-beta)) / (-math.expm1(-beta))
        return 2 * (beta - gap) / beta**2 * empty**m

    val, _ = integrate.quad(integrand, 0, beta, epsabs=1e-13)
    return u * u * p2 * val
