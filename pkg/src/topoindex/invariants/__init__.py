"""Bulk and boundary topological invariants and their Fredholm indices."""

from .check import BulkBoundaryReport, check_bulk_boundary
from .chern import (boundary_even_chern, boundary_odd_chern, central_region, even_chern,
                    even_constant, odd_chern, odd_constant)
from .clifford import CliffordRep
from .fredholm import fredholm_index_projection, fredholm_index_unitary
from .result import InvariantResult, aggregate

__all__ = [
    "BulkBoundaryReport", "CliffordRep", "InvariantResult", "aggregate",
    "boundary_even_chern", "boundary_odd_chern", "central_region", "check_bulk_boundary",
    "even_chern", "even_constant", "fredholm_index_projection", "fredholm_index_unitary",
    "odd_chern", "odd_constant",
]
