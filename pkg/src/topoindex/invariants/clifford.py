"""Irreducible representations of the complex Clifford algebras C_d."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional

import numpy as np

_S0 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def _kron(*ms):
    return reduce(np.kron, ms, np.eye(1, dtype=complex))


@dataclass(eq=False)
class CliffordRep:
    """Hermitian generators Gamma_1..Gamma_d of size 2^floor(d/2).

    For odd d the last generator is ``(-1)^(d//2) sigma_z^(x d//2)``.
    For even d, ``grading`` is ``(-i)^(d/2) Gamma_1 ... Gamma_d``, which squares
    to the identity and anticommutes with every generator.
    """

    dimension: int
    gammas: list[np.ndarray]
    grading: Optional[np.ndarray] = None

    @classmethod
    def standard(cls, d: int) -> "CliffordRep":
        n = d // 2
        gens = []
        for k in range(n):
            pre = [_SZ] * k
            post = [_S0] * (n - k - 1)
            gens.append(_kron(*pre, _SX, *post))
            gens.append(_kron(*pre, _SY, *post))
        if d % 2:
            # of the two inequivalent odd irreps, pick the one whose Fredholm
            # index carries the same sign as the odd Chern trace formula
            gens.append((-1) ** n * _kron(*([_SZ] * n)))
        grading = None
        if d % 2 == 0:
            grading = (-1j) ** n * reduce(np.matmul, gens)
        return cls(d, gens, grading)

    @property
    def size(self) -> int:
        return self.gammas[0].shape[0]

    def dirac(self, x: np.ndarray) -> np.ndarray:
        """``x . Gamma`` for an array of points, shape (..., size, size)."""
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,iab->...ab", x, np.asarray(self.gammas))

    def graded_frame(self) -> np.ndarray:
        """Unitary whose first half of columns spans the +1 eigenspace of the grading."""
        w, v = np.linalg.eigh(self.grading)
        order = np.argsort(-w, kind="stable")
        return v[:, order]
