"""Haar wavelet synopses, V-Opt histograms and extended-wavelet allocation."""
from .extended import (
    ExtendedAllocation,
    MultiCoefficient,
    build_candidates,
    compute_benefits,
    items_from_benefits,
    solve_extended,
)
from .haar import InvalidSignal, Signal, forward, inverse, leaf_path, tree_node
from .metrics import L1, L2, LINF, ErrorMetric, norm
from .restricted import (
    Stats,
    SynopsisSolution,
    extract_restricted,
    restricted_error,
    solve_subtree,
)
from .unrestricted import GridTooLarge, ValueGrid, build_grid, solve_node, unrestricted_synopsis
from .vopt import Histogram, bucket_error, vopt_full_table, vopt_linear_space

__all__ = [
    "ErrorMetric",
    "ExtendedAllocation",
    "GridTooLarge",
    "Histogram",
    "InvalidSignal",
    "L1",
    "L2",
    "LINF",
    "MultiCoefficient",
    "Signal",
    "Stats",
    "SynopsisSolution",
    "ValueGrid",
    "bucket_error",
    "build_candidates",
    "build_grid",
    "compute_benefits",
    "extract_restricted",
    "forward",
    "inverse",
    "items_from_benefits",
    "leaf_path",
    "norm",
    "restricted_error",
    "solve_extended",
    "solve_node",
    "solve_subtree",
    "tree_node",
    "unrestricted_synopsis",
    "vopt_full_table",
    "vopt_linear_space",
]
