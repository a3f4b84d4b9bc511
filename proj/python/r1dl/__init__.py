"""Rank-1 dictionary learning: sparse decomposition of dense T x P matrices.

The heavy lifting lives in the ``_core`` extension module; this package
re-exports the main operations.
"""

from r1dl._core import (
    Decomposition,
    R1dlError,
    __version__,
    decompose,
    energy,
    match_atoms,
    pearson,
    read_matrix,
    sample_columns,
    spatial_overlap_rate,
    write_matrix,
)

__all__ = [
    "Decomposition",
    "R1dlError",
    "__version__",
    "decompose",
    "energy",
    "match_atoms",
    "pearson",
    "read_matrix",
    "sample_columns",
    "spatial_overlap_rate",
    "write_matrix",
]
