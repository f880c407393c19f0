"""Random loop models on graphs: link sampling, loop tracing, red/blue edge
colouring and the coupling to Bernoulli bond percolation."""

from .coloring import Color, EdgeColoring, color_edges, diagnostics, is_pivotal
from .graphs import Graph, GraphError, GraphSpec, build_graph
from .link_sampler import (
    Configuration,
    ConfigurationError,
    Mark,
    ModelParams,
    read_configuration,
    sample_conditioned_nonempty,
    sample_configuration,
    write_configuration,
)
from .loops import LoopPartition, loop_count, loop_of, mark_vertices, trace_loops

__version__ = "0.1.0"

__all__ = [
    "Color", "EdgeColoring", "color_edges", "diagnostics", "is_pivotal",
    "Graph", "GraphError", "GraphSpec", "build_graph",
    "Configuration", "ConfigurationError", "Mark", "ModelParams",
    "read_configuration", "sample_conditioned_nonempty", "sample_configuration",
    "write_configuration",
    "LoopPartition", "loop_count", "loop_of", "mark_vertices", "trace_loops",
]
