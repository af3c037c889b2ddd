"""Spectral decompositions and the derived operators built from them.

Matrix functions are evaluated on a dense eigendecomposition.  Chiral
matrices are decomposed through the SVD of their off-diagonal block, which is
both cheaper and exact in the pairing of +-lambda eigenvectors.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.special import betainc

from .errors import (AmbiguousRankWarning, ConfigurationError, IllConditionedWarning,
                     PreconditionError)
from .lattice import FiniteModel

HERMITIAN_TOL = 1e-10
GAP_REL = 1e-8


# --- switch functions -------------------------------------------------------

@dataclass(frozen=True)
class SwitchFunction:
    """Smooth spectral weight used in the boundary constructions.

    kind
        ``"descending_unit"``: 1 for x <= a, 0 for x >= b.
        ``"odd_sign"``: -1 for x <= a, +1 for x >= b, odd when a = -b.
        ``"step"``: sharp limit of ``descending_unit`` (jump at the midpoint).
        ``"sign_step"``: sharp limit of ``odd_sign`` (``sgn(x)``, ``sgn(0) = 0``).
    degree
        Odd degree ``2k+1`` of the interpolating polynomial; the profile has
        ``k`` vanishing derivatives at both ends (default 7, i.e. k = 3).
    """

    kind: str
    a: float
    b: float
    degree: int = 7

    def __post_init__(self):
        if self.kind not in ("descending_unit", "odd_sign", "step", "sign_step"):
            raise ConfigurationError(f"unknown switch kind {self.kind!r}")
        if not self.a < self.b:
            raise ConfigurationError("transition interval needs a < b")
        if self.degree < 1 or self.degree % 2 == 0:
            raise ConfigurationError("degree must be a positive odd integer")
        if self.kind in ("odd_sign", "sign_step") and abs(self.a + self.b) > 1e-12:
            raise ConfigurationError("odd_sign switch needs a symmetric interval [-b, b]")

    @classmethod
    def descending(cls, mu: float, halfwidth: float, degree: int = 7):
        return cls("descending_unit", mu - halfwidth, mu + halfwidth, degree)

    @classmethod
    def odd(cls, halfwidth: float, degree: int = 7):
        return cls("odd_sign", -halfwidth, halfwidth, degree)

    @property
    def is_step(self) -> bool:
        return self.kind in ("step", "sign_step")

    def rising(self, t) -> np.ndarray:
        """Polynomial ramp from 0 to 1 on [0, 1] (regularized incomplete beta)."""
        k = (self.degree - 1) // 2
        return betainc(k + 1, k + 1, np.clip(t, 0.0, 1.0))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = (x - self.a) / (self.b - self.a)
        if self.kind == "descending_unit":
            return 1.0 - self.rising(t)
        if self.kind == "odd_sign":
            return 2.0 * self.rising(t) - 1.0
        if self.kind == "step":
            return np.where(x < 0.5 * (self.a + self.b), 1.0, 0.0)
        return np.sign(x)


# --- decomposition ----------------------------------------------------------

@dataclass(eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    fingerprint: str
    norm: float

    def gap_around(self, mu: float, rel: float = GAP_REL) -> Optional[tuple[float, float]]:
        """Largest spectrum-free interval containing ``mu``, or None."""
        ev = self.eigenvalues
        below = ev[ev <= mu]
        above = ev[ev > mu]
        lo = below[-1] if below.size else -np.inf
        hi = above[0] if above.size else np.inf
        if hi - lo > rel * max(self.norm, 1.0):
            return float(lo), float(hi)
        return None

    def apply(self, fvals) -> np.ndarray:
        """``V diag(fvals) V^dagger``."""
        v = self.eigenvectors
        return (v * np.asarray(fvals)[None, :]) @ v.conj().T

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, e in enumerate(self.eigenvalues):
                w.writerow([i, repr(float(e))])


def check_hermitian(h: np.ndarray):
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    err = float(np.max(np.abs(h - h.conj().T), initial=0.0))
    if err > HERMITIAN_TOL * scale:
        raise PreconditionError(f"matrix is not Hermitian (max |H - H^dagger| = {err:.3g})")


@dataclass(frozen=True)
class ChiralFrame:
    """Per-site eigenbasis of the fiber chiral involution J.

    ``plus`` and ``minus`` are (N, N/2) isometries onto the +1 and -1
    eigenspaces; the full frame is ``T = [I (x) plus, I (x) minus]``, i.e. the
    +1 block first, ordered (site, component).  T is never formed densely.
    """

    plus: np.ndarray
    minus: np.ndarray
    n_sites: int

    @property
    def half(self) -> int:
        return self.n_sites * self.plus.shape[1]

    def block(self, m: np.ndarray, left: str, right: str) -> np.ndarray:
        """``(I (x) v_left)^dagger M (I (x) v_right)`` for left/right in {"+", "-"}."""
        vl = self.plus if left == "+" else self.minus
        vr = self.plus if right == "+" else self.minus
        s, n, h = self.n_sites, vl.shape[0], vl.shape[1]
        m4 = m.reshape(s, n, s, n)
        out = np.einsum("ia,sitj,jb->satb", vl.conj(), m4, vr, optimize=True)
        return out.reshape(s * h, s * h)

    def expand(self, top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
        """``T [top; bottom]`` for column blocks in the +1 / -1 coordinates."""
        s, n, h = self.n_sites, self.plus.shape[0], self.plus.shape[1]
        cols = top.shape[1]
        out = np.einsum("ia,sac->sic", self.plus, top.reshape(s, h, cols))
        out += np.einsum("ia,sac->sic", self.minus, bottom.reshape(s, h, cols))
        return out.reshape(s * n, cols)

    def dense(self) -> np.ndarray:
        eye = np.eye(self.n_sites)
        return np.hstack([np.kron(eye, self.plus), np.kron(eye, self.minus)])


def chiral_frame(j_fiber: np.ndarray, n_sites: int) -> ChiralFrame:
    """Frame in which ``I (x) J = diag(I, -I)`` (+1 block first, site-major)."""
    n = j_fiber.shape[0]
    w, v = np.linalg.eigh(j_fiber)
    if not np.allclose(np.abs(w), 1.0, atol=1e-10):
        raise PreconditionError("J is not an involution")
    # fix eigenvector phases: largest component real positive
    lead = v[np.argmax(np.abs(v), axis=0), np.arange(n)]
    v = v * (np.abs(lead) / lead)[None, :]
    plus, minus = v[:, w > 0], v[:, w < 0]
    if plus.shape[1] != minus.shape[1]:
        raise PreconditionError("J must have equal +1 and -1 multiplicities (even fiber)")
    return ChiralFrame(plus, minus, n_sites)


def _chiral_blocks(model: FiniteModel) -> tuple[ChiralFrame, np.ndarray]:
    if model.chiral is None:
        raise PreconditionError("model carries no chiral symmetry")
    if model.fiber_dim % 2:
        raise PreconditionError("chiral constructions need an even fiber dimension")
    frame = chiral_frame(model.chiral, model.geometry.n_sites)
    h = model.matrix
    scale = max(1.0, float(np.max(np.abs(h))))
    diag_err = max(np.max(np.abs(frame.block(h, "+", "+")), initial=0.0),
                   np.max(np.abs(frame.block(h, "-", "-")), initial=0.0))
    if diag_err > HERMITIAN_TOL * scale:
        raise PreconditionError(f"J H J = -H violated (diagonal block norm {diag_err:.3g})")
    return frame, frame.block(h, "-", "+")


def decompose(model: FiniteModel, method: str = "auto") -> SpectralDecomposition:
    """Dense eigendecomposition of a finite model.

    ``method="auto"`` uses the chiral SVD route when the model carries J,
    ``"dense"`` always calls the Hermitian eigensolver.
    """
    h = model.matrix
    check_hermitian(h)
    if method == "auto" and model.chiral is not None:
        frame, q = _chiral_blocks(model)
        y, sv, zh = np.linalg.svd(q)
        z = zh.conj().T / np.sqrt(2.0)
        y = y / np.sqrt(2.0)
        # singular values come out descending
        evals = np.concatenate([-sv, sv[::-1]])
        vecs = np.hstack([frame.expand(z, -y), frame.expand(z, y)[:, ::-1]])
        return SpectralDecomposition(evals, vecs, model.spec_fingerprint,
                                     float(sv[0]) if sv.size else 0.0)
    w, v = sla.eigh(h, driver="evr")
    return SpectralDecomposition(w, v, model.spec_fingerprint,
                                 float(np.max(np.abs(w), initial=0.0)))


# --- derived operators ------------------------------------------------------

def fermi_projection(dec: SpectralDecomposition, mu: float) -> np.ndarray:
    """Spectral projection onto eigenvalues <= mu."""
    ev = dec.eigenvalues
    if np.any(np.abs(ev - mu) < 1e-12):
        warnings.warn(f"Fermi level {mu} coincides with an eigenvalue; rank is ambiguous",
                      AmbiguousRankWarning, stacklevel=2)
    occ = dec.eigenvectors[:, ev <= mu]
    return occ @ occ.conj().T


def flat_band_unitary(dec: SpectralDecomposition, model: FiniteModel,
                      gap: Optional[float] = None) -> np.ndarray:
    """Off-diagonal block U of sgn(H) in the chiral grading (+1 block first).

    Requires a spectral gap around zero: no eigenvalue in ``(-gap, gap)``,
    default ``gap = 1e-8 * ||H||``.
    """
    frame, _ = _chiral_blocks(model)
    eps = GAP_REL * max(dec.norm, 1.0) if gap is None else gap
    if np.any(np.abs(dec.eigenvalues) < eps):
        raise PreconditionError("no spectral gap at 0; sgn(H) is undefined")
    sgn = dec.apply(np.sign(dec.eigenvalues))
    off = max(np.max(np.abs(frame.block(sgn, "+", "+"))),
              np.max(np.abs(frame.block(sgn, "-", "-"))))
    if off > 1e-10:
        raise PreconditionError(f"sgn(H) not block off-diagonal in the J grading ({off:.3g})")
    return frame.block(sgn, "-", "+")


def polar_flat_band_unitary(model: FiniteModel) -> np.ndarray:
    """Unitary part of the polar decomposition of the chiral off-diagonal block.

    Equals :func:`flat_band_unitary` whenever H is gapped at zero.  When H
    has (near-)zero modes, e.g. edge modes of an open sample, the polar
    factor stays unitary and pairs the zero modes among themselves, so the
    operator is unchanged away from where those modes live.
    """
    _, q = _chiral_blocks(model)
    y, _, zh = np.linalg.svd(q)
    return y @ zh


def chiral_positions(model: FiniteModel) -> np.ndarray:
    """Site coordinates for each row/column of a flat-band unitary."""
    return np.repeat(model.geometry.coords(), model.fiber_dim // 2, axis=0)


def _check_interval(f: SwitchFunction, bulk_gap):
    if bulk_gap is None:
        return
    lo, hi = bulk_gap
    if not (lo < f.a and f.b < hi):
        warnings.warn(
            f"transition interval [{f.a}, {f.b}] not inside bulk gap ({lo}, {hi})",
            IllConditionedWarning, stacklevel=3)


def boundary_unitary(model: FiniteModel, f: SwitchFunction, bulk_gap=None,
                     dec: Optional[SpectralDecomposition] = None) -> np.ndarray:
    """``exp(2 pi i f(H^))`` for a descending unit switch function.

    Only eigenvalues inside the transition interval contribute to ``U - I``,
    so without a precomputed decomposition just that window is diagonalized.
    """
    if f.kind not in ("descending_unit", "step"):
        raise ConfigurationError("boundary_unitary needs a descending_unit or step switch")
    _check_interval(f, bulk_gap)
    check_hermitian(model.matrix)
    n = model.dim
    if f.is_step:
        # f takes values in {0, 1}: exp(2 pi i f) = 1 identically
        return np.eye(n, dtype=complex)
    if dec is None:
        w, v = sla.eigh(model.matrix, driver="evr", subset_by_value=(f.a, f.b))
    else:
        sel = (dec.eigenvalues > f.a) & (dec.eigenvalues <= f.b)
        w, v = dec.eigenvalues[sel], dec.eigenvectors[:, sel]
    u = np.eye(n, dtype=complex)
    if w.size:
        u += (v * (np.exp(2j * np.pi * f(w)) - 1.0)[None, :]) @ v.conj().T
    return u


def reference_projection(model: FiniteModel) -> np.ndarray:
    """``(1 - J)/2``: the value of the boundary projection away from the boundary."""
    j = model.site_chiral()
    if j is None:
        raise PreconditionError("model carries no chiral symmetry")
    return 0.5 * (np.eye(model.dim) - j)


def boundary_projection(model: FiniteModel, f: SwitchFunction, bulk_gap=None,
                        dec: Optional[SpectralDecomposition] = None) -> np.ndarray:
    """``exp(-i pi/2 f(H^)) Pi_+ exp(i pi/2 f(H^))`` with ``Pi_+ = (1 + J)/2``."""
    if f.kind not in ("odd_sign", "sign_step"):
        raise ConfigurationError("boundary_projection needs an odd_sign or sign_step switch")
    _check_interval(f, bulk_gap)
    if dec is None:
        dec = decompose(model)
    ref = reference_projection(model)
    zero = np.abs(dec.eigenvalues) < GAP_REL * max(dec.norm, 1.0)
    if f.is_step and not np.any(zero):
        # sgn(H) anticommutes with J, so sgn Pi_+ sgn = (1 - J)/2 exactly
        return ref
    fv = f(dec.eigenvalues)
    if f.is_step:
        # numerically zero modes come in +-1e-17 pairs; sgn(0) = 0 for both
        fv[zero] = 0.0
    w = dec.apply(np.exp(0.5j * np.pi * fv))
    plus = np.eye(model.dim) - ref
    p = w.conj().T @ plus @ w
    return 0.5 * (p + p.conj().T)
