"""Synthetic CNN benchmark generation from profiled convolution traces."""

from ._core import (
    ClusterSet,
    ConvShape,
    CostVector,
    Error,
    GroupTargets,
    cluster,
    conv_macs,
    conv_warps,
    fitness,
    format_percent,
    model_to_dot,
    output_size,
    parse_config,
    parse_trace,
    scale_clusters,
    serialize_trace,
    synthesize,
    trace_totals,
    validate_model,
)

__all__ = [
    "ClusterSet",
    "ConvShape",
    "CostVector",
    "Error",
    "GroupTargets",
    "cluster",
    "conv_macs",
    "conv_warps",
    "fitness",
    "format_percent",
    "model_to_dot",
    "output_size",
    "parse_config",
    "parse_trace",
    "scale_clusters",
    "serialize_trace",
    "synthesize",
    "trace_totals",
    "validate_model",
]
