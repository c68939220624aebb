"""Iterative gradient-based sparsification of brain graphs."""

from ._igs import (
    ConfigError,
    ContractError,
    IngestionError,
    NumericError,
    binarize_mask,
    emit_reports,
    exact_sum,
    generate_synthetic,
    load_dataset,
    normalize_adjacency,
    removal_count,
    resolve_plan,
    run_plan,
    soft_mask,
    subnetwork_aggregate,
    write_synthetic,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "IngestionError",
    "NumericError",
    "binarize_mask",
    "emit_reports",
    "exact_sum",
    "generate_synthetic",
    "load_dataset",
    "normalize_adjacency",
    "removal_count",
    "resolve_plan",
    "run_plan",
    "soft_mask",
    "subnetwork_aggregate",
    "write_synthetic",
]
