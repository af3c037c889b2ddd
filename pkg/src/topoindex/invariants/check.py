"""Bulk-boundary equality check."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError
from .result import InvariantResult

_PROVENANCE_KEYS = ("spec", "flux", "seed")


@dataclass(frozen=True)
class BulkBoundaryReport:
    bulk: float
    boundary: float
    difference: float
    bulk_deviation: float
    boundary_deviation: float
    tolerance: float
    passed: bool

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: bulk={self.bulk:+.6f} boundary={self.boundary:+.6f} "
                f"|diff|={self.difference:.3e} tol={self.tolerance:g}")


def check_bulk_boundary(bulk: InvariantResult, boundary: InvariantResult,
                        tolerance: float = 0.05) -> BulkBoundaryReport:
    """Compare a bulk invariant with the boundary invariant of the same model.

    Provenance entries present on both results must agree, otherwise the
    comparison is meaningless and a ConfigurationError is raised.  A failed
    comparison is reported, never raised.
    """
    for key in _PROVENANCE_KEYS:
        if key in bulk.provenance and key in boundary.provenance:
            if bulk.provenance[key] != boundary.provenance[key]:
                raise ConfigurationError(
                    f"provenance mismatch on {key!r}: {bulk.provenance[key]!r} "
                    f"vs {boundary.provenance[key]!r}")
    if bulk.dimension != boundary.dimension:
        raise ConfigurationError("bulk and boundary results refer to different dimensions")
    diff = abs(bulk.raw - boundary.raw)
    return BulkBoundaryReport(bulk.raw, boundary.raw, diff, bulk.deviation,
                              boundary.deviation, tolerance, diff < tolerance)
