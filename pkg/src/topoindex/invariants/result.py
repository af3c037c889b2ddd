"""Result record shared by every invariant evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

IMAG_TOL = 1e-8
UNCONVERGED = 0.1


@dataclass(eq=False)
class InvariantResult:
    kind: str
    dimension: int
    raw: float
    constant: complex
    size: tuple
    region: str
    values: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    imag_residue: float = 0.0
    site_values: Optional[np.ndarray] = None
    tail: Optional[float] = None
    provenance: dict = field(default_factory=dict)
    flags: set = field(default_factory=set)

    def __post_init__(self):
        if not self.values:
            self.values = [self.raw]
        if self.deviation > UNCONVERGED:
            self.flags.add("unconverged")

    @property
    def nearest(self) -> int:
        return int(np.rint(self.raw))

    @property
    def deviation(self) -> float:
        return abs(self.raw - self.nearest)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values)) if len(self.values) > 1 else 0.0

    @property
    def converged(self) -> bool:
        return "unconverged" not in self.flags

    def summary(self) -> str:
        return (f"{self.kind}: raw={self.raw:+.6f} nearest={self.nearest:+d} "
                f"dev={self.deviation:.2e} std={self.std:.2e} n={len(self.values)}")


def real_part(value: complex, what: str) -> tuple[float, float]:
    """Project a formula value to the real axis, returning (real, |imag|)."""
    residue = abs(complex(value).imag)
    if residue > IMAG_TOL * max(1.0, abs(value)):
        raise ArithmeticError(f"{what}: imaginary residue {residue:.3g} exceeds {IMAG_TOL}")
    return float(complex(value).real), residue


def aggregate(results: Sequence[InvariantResult]) -> InvariantResult:
    """Disorder average over realizations, in the given (fixed) order."""
    if not results:
        raise ValueError("nothing to aggregate")
    first = results[0]
    values = [r.raw for r in results]
    seeds = [s for r in results for s in r.seeds]
    flags = set()
    for r in results:
        flags |= r.flags - {"unconverged"}
    tails = [r.tail for r in results if r.tail is not None]
    return replace(
        first, raw=float(np.mean(values)), values=values, seeds=seeds,
        imag_residue=max(r.imag_residue for r in results),
        site_values=None, tail=float(np.mean(tails)) if tails else None,
        provenance=dict(first.provenance), flags=flags)
