"""Independent reference values: momentum-space invariants and Lyapunov exponents.

These only apply to clean (or, for the transfer matrix, 1D Anderson)
models and are used to validate the real-space machinery.

Bloch convention: with stored blocks ``T_y = <x|H|x-y>`` the symbol is
``h(k) = sum_y T_y exp(-i k.y)`` (plus Hermitian conjugates of the stored
half of the hops).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ConfigurationError, PreconditionError
from .lattice import HoppingSpec, MagneticFlux


def _full_hops(spec: HoppingSpec):
    """All displacements with their blocks, conjugate partners included."""
    out = []
    for hop in spec.hops:
        y = np.asarray(hop.displacement, dtype=np.int64)
        out.append((y, hop.constant))
        if np.any(y):
            out.append((-y, hop.constant.conj().T))
    return out


def bloch_hamiltonian(spec: HoppingSpec, k: np.ndarray, derivative: Optional[int] = None):
    """``h(k)`` (or ``d h / d k_j``) for an array of momenta of shape (..., d)."""
    k = np.asarray(k, dtype=float)
    n = spec.fiber_dim
    out = np.zeros(k.shape[:-1] + (n, n), dtype=complex)
    for y, t in _full_hops(spec):
        phase = np.exp(-1j * (k @ y.astype(float)))
        if derivative is not None:
            phase = -1j * y[derivative] * phase
        out += phase[..., None, None] * t
    return out


def _grid(d: int, n: int) -> np.ndarray:
    ax = 2 * np.pi * np.arange(n) / n
    return np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)


def fhs_chern(hk: np.ndarray, n_occ: int) -> float:
    """Lattice Chern number of the lowest ``n_occ`` bands on a periodic 2D k-grid.

    ``hk`` has shape (n1, n2, m, m) sampled on ``2 pi (i/n1, j/n2)``.  Uses
    the gauge-invariant plaquette method of Fukui, Hatsugai and Suzuki, with
    the usual sign: ``C = (1/2 pi) sum arg(U1 U2(+1) U1(+2)^* U2^*)``.
    """
    _, v = np.linalg.eigh(hk)
    occ = v[..., :n_occ]

    def link(shift_axis):
        nxt = np.roll(occ, -1, axis=shift_axis)
        det = np.linalg.det(np.einsum("...ai,...aj->...ij", occ.conj(), nxt))
        return det / np.abs(det)

    u1, u2 = link(0), link(1)
    flux = np.angle(u1 * np.roll(u2, -1, axis=0) * np.roll(u1, -1, axis=1).conj() * u2.conj())
    return float(flux.sum() / (2 * np.pi))


def chern_2d(spec: HoppingSpec, mu: float = 0.0, grid: int = 256) -> float:
    """FHS Chern number of all bands below ``mu`` for a clean zero-flux 2D spec."""
    if spec.dimension != 2:
        raise ConfigurationError("chern_2d needs d = 2")
    hk = bloch_hamiltonian(spec, _grid(2, grid))
    w = np.linalg.eigvalsh(hk)
    n_occ = int((w < mu).sum(axis=-1).min())
    if n_occ != int((w < mu).sum(axis=-1).max()):
        raise PreconditionError(f"mu={mu} is not in a band gap of the Bloch spectrum")
    return fhs_chern(hk, n_occ)


def magnetic_bloch(spec: HoppingSpec, flux: MagneticFlux, kgrid: np.ndarray) -> np.ndarray:
    """Bloch Hamiltonian of a 2D spec in a rational field, magnetic cell q x 1.

    The Landau gauge used by the real-space builder puts the phase
    ``exp(2 pi i phi x_1 y_2)`` on ``<x|H|x-y>``, periodic in ``x_1`` with
    period ``q``.  Momenta ``(K, k_2)`` are taken in the periodic gauge where
    ``K = q k_1`` couples to whole-cell displacements only, so the result is
    2 pi periodic in both arguments.
    """
    if spec.dimension != 2:
        raise ConfigurationError("magnetic_bloch needs d = 2")
    phi = Fraction(float(flux.matrix[0, 1])).limit_denominator(1000)
    q = phi.denominator
    n = spec.fiber_dim
    kgrid = np.asarray(kgrid, dtype=float)
    out = np.zeros(kgrid.shape[:-1] + (q * n, q * n), dtype=complex)
    for y, t in _full_hops(spec):
        for a in range(q):
            src = a - int(y[0])
            b, cell = src % q, (src - src % q) // q
            # <a|H|a - y> with the cell displacement of a - y being ``cell``
            ph = np.exp(2j * np.pi * float(phi) * a * int(y[1]))
            kphase = np.exp(1j * (kgrid[..., 0] * cell - kgrid[..., 1] * int(y[1])))
            out[..., a * n:(a + 1) * n, b * n:(b + 1) * n] += (ph * kphase)[..., None, None] * t
    return out


def hofstadter_chern(spec: HoppingSpec, flux: MagneticFlux, n_occ: int,
                     grid: int = 96) -> float:
    """FHS Chern number of the lowest ``n_occ`` magnetic subbands."""
    hk = magnetic_bloch(spec, flux, _grid(2, grid))
    return fhs_chern(hk, n_occ)


def tknn_chern(p: int, q: int, r: int) -> int:
    """Hall integer ``t_r`` of the r-th gap at flux p/q: ``r = q s_r + p t_r``, ``|t_r| <= q/2``."""
    if not 0 < r < q:
        raise ConfigurationError("gap index r must satisfy 0 < r < q")
    sols = [t for t in range(-q, q + 1) if (r - p * t) % q == 0 and abs(t) <= q / 2]
    if len(sols) != 1:
        raise ConfigurationError(f"no unique Diophantine solution for p/q={p}/{q}, r={r}")
    return sols[0]


def _chiral_symbol(spec: HoppingSpec, k: np.ndarray, derivative: Optional[int] = None):
    """Off-diagonal block ``q(k)`` of the Bloch symbol in the J eigenbasis (+1 first)."""
    if spec.chiral is None:
        raise PreconditionError("spec has no chiral symmetry")
    w, v = np.linalg.eigh(spec.chiral)
    lead = v[np.argmax(np.abs(v), axis=0), np.arange(len(w))]
    v = v * (np.abs(lead) / lead)[None, :]
    plus, minus = v[:, w > 0], v[:, w < 0]
    hk = bloch_hamiltonian(spec, k, derivative)
    return minus.conj().T @ hk @ plus


def winding_1d(spec: HoppingSpec, grid: int = 2048) -> float:
    """``(1/2 pi i) oint d log det q(k)`` for a clean chiral chain."""
    k = (2 * np.pi * np.arange(grid + 1) / grid)[:, None]
    det = np.linalg.det(_chiral_symbol(spec, k))
    if np.min(np.abs(det)) < 1e-12:
        raise PreconditionError("chiral symbol is singular: gap closes")
    ang = np.unwrap(np.angle(det))
    return float((ang[-1] - ang[0]) / (2 * np.pi))


def winding_3d(spec: HoppingSpec, grid: int = 64) -> float:
    """``(1/24 pi^2) int eps^{ijk} tr[(q^-1 d_i q)(q^-1 d_j q)(q^-1 d_k q)] d^3k``.

    Midpoint rule with analytic derivatives of the symbol; exponentially
    accurate in ``grid`` for a gapped (analytic) symbol.
    """
    if spec.dimension != 3:
        raise ConfigurationError("winding_3d needs d = 3")
    k = _grid(3, grid) + np.pi / grid
    qk = _chiral_symbol(spec, k)
    qinv = np.linalg.inv(qk)
    a = [qinv @ _chiral_symbol(spec, k, j) for j in range(3)]
    total = np.zeros(k.shape[:-1], dtype=complex)
    for (i, j, l), sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                            ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
        total += sign * np.trace(a[i] @ a[j] @ a[l], axis1=-2, axis2=-1)
    vol = (2 * np.pi / grid) ** 3
    return float((total.sum() * vol / (24 * np.pi ** 2)).real)


def lyapunov_anderson_1d(disorder: float, energy: float = 0.0, t: float = 1.0,
                         steps: int = 200_000, seed: int = 0) -> float:
    """Lyapunov exponent of ``-t(psi_{n+1} + psi_{n-1}) + W w_n psi_n = E psi_n``.

    ``w_n`` uniform on [-1/2, 1/2]; transfer-matrix product with periodic
    renormalization.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    pot = disorder * (rng.random(steps) - 0.5)
    a, b = 1.0, 0.0          # (psi_n, psi_{n-1})
    acc = 0.0
    for v in (pot - energy) / t:
        a, b = v * a - b, a
        nrm = np.hypot(a, b)
        acc += np.log(nrm)
        a, b = a / nrm, b / nrm
    return acc / steps
