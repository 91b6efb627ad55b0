"""Python bindings for the hyrom reduced-order modelling library."""

from ._hyrom import (
    Divergence,
    Error,
    Experiment,
    FormatError,
    InvalidArgument,
    Surrogate,
    deim_points,
    error_metrics,
    manifest_problems,
    neo_hookean_energy,
    neo_hookean_pk1,
    pod,
    read_snapshots,
    write_snapshots,
)

__all__ = [
    "Divergence",
    "Error",
    "Experiment",
    "FormatError",
    "InvalidArgument",
    "Surrogate",
    "deim_points",
    "error_metrics",
    "manifest_problems",
    "neo_hookean_energy",
    "neo_hookean_pk1",
    "pod",
    "read_snapshots",
    "write_snapshots",
]
