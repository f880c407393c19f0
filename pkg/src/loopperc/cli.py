"""Command-line interface.

Every subcommand accepts the global flags ``--seed --replicas --workers
--config --out`` either before or after the subcommand name.  Output is a
tab-separated header line, one record per line, then a ``#`` summary block.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .coloring import Color, color_edges
from .experiments import (
    ExperimentConfig,
    ExperimentError,
    estimate_delta,
    estimate_gap,
    format_gap_report,
    format_records,
    format_summary,
    run_experiment,
    substream,
    wilson_interval,
    write_stream,
)
from .graphs import GraphError, build_graph
from .link_sampler import (
    ConfigurationError,
    ModelParams,
    format_configuration,
    read_configuration,
    sample_configuration,
)
from .loops import trace_loops
from .mcmc_theta import ThetaParams, run_chain
from .percolation import crossing_with_ci, sweep
from .reference_oracles import run_battery

GLOBAL_DEFAULTS = {"seed": 0, "replicas": None, "workers": 1, "config": None, "out": None}


def parse_grid(text: str) -> tuple[float, ...]:
    """``0.1,0.2,0.5`` or ``lo:hi:step`` (inclusive of ``hi`` up to rounding)."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + i * step, 12) for i in range(n))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None


def parse_sizes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def _global_flags(parser: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=S, help="master seed (default 0)")
    g.add_argument("--replicas", type=int, default=S, help="number of replicas")
    g.add_argument("--workers", type=int, default=S, help="worker processes (default 1)")
    g.add_argument("--config", default=S, help="YAML file with ExperimentConfig fields")
    g.add_argument("--out", default=S, help="output path (default stdout)")


def _model_flags(p, beta_grid: bool = False) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--graph", default=S, help="graph spec, e.g. torus:2,64 or complete:100")
    if beta_grid:
        p.add_argument("--beta", type=parse_grid, default=S, help="beta grid: a,b,c or lo:hi:step")
    else:
        p.add_argument("--beta", type=float, default=S)
    p.add_argument("--u", type=float, default=S, help="cross probability (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopperc", description="Random loop models and their percolation coupling."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("sample", help="sample link configurations to files")
    _global_flags(p)
    _model_flags(p)

    p = sub.add_parser("trace", help="trace the loops of a stored configuration")
    _global_flags(p)
    p.add_argument("configuration")
    p.add_argument("--graph", required=True)
    p.add_argument("--per-vertex", action="store_true", help="emit the loop id of every vertex")

    p = sub.add_parser("color", help="colour the edges of stored configurations")
    _global_flags(p)
    p.add_argument("configurations", nargs="+")
    p.add_argument("--graph", required=True)

    p = sub.add_parser("perc", help="Bernoulli bond percolation scan")
    _global_flags(p)
    p.add_argument("--graph", required=True)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--p", type=parse_grid, help="edge probability grid")
    grid.add_argument("--beta", type=parse_grid, help="beta grid, p = 1 - exp(-beta)")
    p.add_argument("--c", type=float, default=0.05, help="macroscopic fraction threshold")

    p = sub.add_parser("theta-sample", help="theta-weighted Metropolis chain")
    _global_flags(p)
    _model_flags(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--fast", action="store_true", help="skip per-record retrace and colouring")

    for name, helptext in (
        ("scan", "beta scan of loop and cluster observables"),
        ("gap", "loop and percolation crossing points over system sizes"),
        ("delta", "red-edge frequencies under all-open conditioning"),
    ):
        p = sub.add_parser(name, help=helptext)
        _global_flags(p)
        _model_flags(p, beta_grid=True)
        p.add_argument("--c", type=float, default=S)
        if name == "scan":
            p.add_argument("--uncoupled", dest="coupled", action="store_false", default=S,
                           help="fresh configuration per grid point")
            p.add_argument("--timing", action="store_true", default=S, help="record wall time")
        if name == "gap":
            p.add_argument("--sizes", type=parse_sizes, default=S, help="comma-separated sizes")
            p.add_argument("--tail-beta", type=float, default=None,
                           help="also fit an exponential loop-size tail at this beta")
        if name == "delta":
            p.add_argument("--probes", type=int, default=S)

    p = sub.add_parser("validate", help="run the oracle battery")
    _global_flags(p)
    return parser


def _opts(args) -> dict:
    return {k: getattr(args, k, v) for k, v in GLOBAL_DEFAULTS.items()}


def make_config(args) -> ExperimentConfig:
    """Config file values, overridden by any flag given on the command line."""
    data = {}
    if getattr(args, "config", None):
        data = ExperimentConfig.load(args.config).to_mapping()
    for key in ("graph", "beta", "u", "c", "replicas", "seed", "workers", "out",
                "coupled", "timing", "sizes", "probes"):
        if key in vars(args) and getattr(args, key) is not None:
            data[key] = getattr(args, key)
    for key in ("graph", "beta"):
        if key not in data:
            raise ExperimentError(f"--{key} is required (on the command line or in --config)")
    return ExperimentConfig.from_mapping(data)


# subcommands ------------------------------------------------------------------


def cmd_sample(args) -> int:
    o = _opts(args)
    if not hasattr(args, "graph") or not hasattr(args, "beta"):
        raise ExperimentError("sample needs --graph and --beta")
    g = build_graph(args.graph)
    params = ModelParams(args.beta, getattr(args, "u", 1.0))
    n = o["replicas"] or 1
    if n > 1 and o["out"] in (None, "-"):
        raise ExperimentError("several replicas need --out (files get a .<replica> suffix)")
    for r in range(n):
        c = sample_configuration(g, params, substream(o["seed"], 0, r))
        text = format_configuration(c, seed=f"{o['seed']}.0.{r}", graph_hash=g.graph_hash())
        write_stream(o["out"] if n == 1 else f"{o['out']}.{r}", text)
    return 0


def _load(path, g):
    c, header = read_configuration(path)
    if c.n_edges != g.edge_count:
        raise ConfigurationError(f"{path}: {c.n_edges} edges, graph has {g.edge_count}")
    h = header.get("graph_hash", "none")
    if h != "none" and h != g.graph_hash():
        raise ConfigurationError(f"{path}: graph hash {h} does not match {g.graph_hash()}")
    return c


def cmd_trace(args) -> int:
    o = _opts(args)
    g = build_graph(args.graph)
    lp = trace_loops(g, _load(args.configuration, g))
    sizes = lp.loop_sizes()
    vals, counts = np.unique(sizes, return_counts=True)
    if args.per_vertex:
        rows = [{"vertex": v, "loop": int(l)} for v, l in enumerate(lp.vertex_time0_loop)]
        text = format_records(rows, ("vertex", "loop"))
    else:
        m = lp.max_loop_size()
        rows = [{"loops": lp.n_loops, "max_loop_size": m, "max_loop_frac": m / g.vertex_count}]
        text = format_records(rows, ("loops", "max_loop_size", "max_loop_frac"))
    text += format_summary({
        "loops": lp.n_loops,
        "max_loop_size": lp.max_loop_size(),
        "size_histogram": dict(zip(vals.tolist(), counts.tolist())),
    })
    write_stream(o["out"], text)
    return 0


def cmd_color(args) -> int:
    o = _opts(args)
    g = build_graph(args.graph)
    reds = np.zeros(g.edge_count, dtype=np.int64)
    opens = np.zeros(g.edge_count, dtype=np.int64)
    rows = []
    for path in args.configurations:
        c = _load(path, g)
        col = color_edges(g, c)
        reds += col.red
        opens += col.open
        if len(args.configurations) == 1:
            rows = [{"edge": e, "color": Color(int(x)).name.lower(), "links": int(n)}
                    for e, (x, n) in enumerate(zip(col.color, c.counts))]
            text = format_records(rows, ("edge", "color", "links"))
            write_stream(o["out"], text + format_summary(col.counts()))
            return 0
        rows.append({"file": path, **col.counts()})
    text = format_records(rows, ("file", "red", "blue", "uncoloured"))
    seen = np.flatnonzero(opens > 0)
    summary = {"replicas": len(args.configurations)}
    if seen.size:
        freq = reds[seen] / opens[seen]
        i = int(np.argmin(freq))
        e = int(seen[i])
        summary.update(
            delta_hat=float(freq[i]), argmin_edge=e,
            delta_ci=list(wilson_interval(int(reds[e]), int(opens[e]))),
        )
    write_stream(o["out"], text + format_summary(summary))
    return 0


def cmd_perc(args) -> int:
    o = _opts(args)
    g = build_graph(args.graph)
    use_beta = args.beta is not None
    grid = np.asarray(args.beta if use_beta else args.p, dtype=float)
    if len(grid) == 0 or np.any(np.diff(grid) <= 0):
        raise ExperimentError("grid must be non-empty and strictly increasing")
    if not use_beta and (grid[0] < 0 or grid[-1] > 1):
        raise ExperimentError("p grid must lie in [0, 1]")
    R = o["replicas"] or 100
    largest = np.empty((R, len(grid)))
    wrap = np.zeros((R, len(grid)), dtype=bool)
    first = np.empty((R, 2))
    for r in range(R):
        u = substream(o["seed"], 0, r).random(g.edge_count)
        values = -np.log1p(-u) if use_beta else u
        lg, wr, fw, ff = sweep(g, values, grid, c=args.c)
        largest[r] = lg / g.vertex_count
        if g.is_torus:
            wrap[r] = wr[:, 0]
        first[r] = fw, ff
    rows = []
    obs = [("largest_fraction", largest), ("P_largest_gt_c", largest > args.c)]
    if g.is_torus:
        obs.append(("P_wrap_axis0", wrap))
    for i, x in enumerate(grid):
        for name, arr in obs:
            col = arr[:, i].astype(float)
            rows.append({
                "grid": float(x), "observable": name, "mean": col.mean(),
                "stderr": col.std(ddof=1) / math.sqrt(R) if R > 1 else 0.0, "replicas": R,
            })
    text = format_records(rows, ("grid", "observable", "mean", "stderr", "replicas"))
    boot = substream(o["seed"], 1, 0)
    summary = {"grid_variable": "beta" if use_beta else "p"}
    if R >= 2:
        if g.is_torus:
            summary["wrap_crossing"] = crossing_with_ci(first[:, 0], boot, grid[0], grid[-1])
        summary["fraction_crossing"] = crossing_with_ci(first[:, 1], boot, grid[0], grid[-1])
    write_stream(o["out"], text + format_summary(summary))
    return 0


def cmd_theta(args) -> int:
    o = _opts(args)
    if not hasattr(args, "graph") or not hasattr(args, "beta"):
        raise ExperimentError("theta-sample needs --graph and --beta")
    g = build_graph(args.graph)
    base = ModelParams(args.beta, getattr(args, "u", 1.0))
    params = ThetaParams(base, args.theta)
    rng = substream(o["seed"], 0, 0)
    init = sample_configuration(g, base, rng)
    records = list(run_chain(g, init, params, args.burn_in, args.samples, args.thin, rng,
                             full=not args.fast))
    cols = ("step", "n", "loops") if args.fast else (
        "step", "n", "loops", "max_loop_frac", "red", "blue")
    cols += ("acc_birth", "acc_death")
    summary = {"theta": args.theta, "beta": args.beta, "u": base.u, "samples": len(records)}
    if records:
        n = np.array([r["n"] for r in records])
        summary.update(mean_links=float(n.mean()), P_even_links=float(np.mean(n % 2 == 0)),
                       mean_loops=float(np.mean([r["loops"] for r in records])))
    write_stream(o["out"], format_records(records, cols) + format_summary(summary))
    return 0


def cmd_scan(args) -> int:
    cfg = make_config(args)
    run_experiment(cfg)
    return 0


def cmd_gap(args) -> int:
    cfg = make_config(args)
    report = estimate_gap(cfg, tail_beta=args.tail_beta)
    write_stream(cfg.out, format_gap_report(report))
    return 0


def cmd_delta(args) -> int:
    cfg = make_config(args)
    recs = estimate_delta(cfg)
    rows = [{
        "beta": r.beta, "u": r.u, "probes": r.probes, "delta_hat": r.delta_hat,
        "delta_lo": r.delta_ci[0], "delta_hi": r.delta_ci[1], "argmin_edge": r.argmin_edge,
        "pooled": r.pooled,
    } for r in recs]
    text = format_records(rows, tuple(rows[0]))
    text += format_summary({"diagnostics": [r.as_dict() for r in recs]})
    write_stream(cfg.out, text)
    return 0


def cmd_validate(args) -> int:
    o = _opts(args)
    reports = run_battery(seed=o["seed"], instances=o["replicas"] or 1000)
    lines = [str(r) for r in reports]
    failed = sum(not r.passed for r in reports)
    lines.append(f"# {len(reports) - failed}/{len(reports)} oracle checks passed")
    write_stream(o["out"], "\n".join(lines) + "\n")
    return 1 if failed else 0


COMMANDS = {
    "sample": cmd_sample, "trace": cmd_trace, "color": cmd_color, "perc": cmd_perc,
    "theta-sample": cmd_theta, "scan": cmd_scan, "gap": cmd_gap, "delta": cmd_delta,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (GraphError, ConfigurationError, ExperimentError, OSError, ValueError) as exc:
        print(f"loopperc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
