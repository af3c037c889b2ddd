"""Catalogue of standard test Hamiltonians.

Every builder returns ``(spec, flux)``.  Conventions: the stored block for
displacement ``y`` is ``<x|H|x-y>``, so the Bloch symbol is
``h(k) = sum_y T_y exp(-i k.y)``.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .lattice import Hop, HoppingSpec, MagneticFlux

S0 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def _unit(d, axis):
    y = [0] * d
    y[axis] = 1
    return tuple(y)


def atomic(d: int = 2, energies=(-1.0, 1.0), disorder: float = 0.0):
    """No hopping at all: ``A_0 = diag(energies)``, ``B_0 = I``."""
    n = len(energies)
    hops = [Hop((0,) * d, np.diag(np.asarray(energies, complex)), np.eye(n))]
    return HoppingSpec(d, n, hops, disorder, name="atomic"), MagneticFlux.zero(d)


def anderson(d: int = 1, t: float = 1.0, disorder: float = 0.0):
    """Single-band nearest-neighbour chain/lattice with onsite disorder."""
    hops = [Hop((0,) * d, np.zeros((1, 1)), np.eye(1))]
    hops += [Hop(_unit(d, a), -t * np.eye(1)) for a in range(d)]
    return HoppingSpec(d, 1, hops, disorder, name="anderson"), MagneticFlux.zero(d)


def ssh(t1: float = 0.0, t2: float = 1.0, t3: float = 0.0, disorder: float = 0.0):
    """Chiral two-sublattice chain, basis (A, B), J = diag(1, -1).

    ``t1`` couples A_c-B_c, ``t2`` couples A_c to B_{c-1}, ``t3`` couples A_c to
    B_{c-2}.  Bond disorder shifts every bond of cell c by ``W * omega_c``.
    """
    off = np.array([[0, 1], [0, 0]], dtype=complex)
    hops = [Hop((0,), t1 * (off + off.T), off + off.T),
            Hop((1,), t2 * off, off)]
    if t3:
        hops.append(Hop((2,), t3 * off, off))
    return (HoppingSpec(1, 2, hops, disorder, chiral=np.diag([1.0, -1.0]), name="ssh"),
            MagneticFlux.zero(1))


def qwz(m: float = 1.0, disorder: float = 0.0, disorder_matrix=None):
    """Two-band Chern insulator ``sin kx sx + sin ky sy + (m + cos kx + cos ky) sz``.

    Gap closes at ``m = 0, +-2``; |Chern| = 1 for ``0 < |m| < 2``.
    """
    b = S0 if disorder_matrix is None else np.asarray(disorder_matrix, complex)
    hops = [Hop((0, 0), m * SZ, b),
            Hop((1, 0), (SZ + 1j * SX) / 2),
            Hop((0, 1), (SZ + 1j * SY) / 2)]
    return HoppingSpec(2, 2, hops, disorder, name="qwz"), MagneticFlux.zero(2)


def hofstadter(phi: float = 1 / 3, t: float = 1.0, disorder: float = 0.0):
    """Square-lattice Harper-Hofstadter model with flux ``phi`` per plaquette."""
    hops = [Hop((0, 0), np.zeros((1, 1)), np.eye(1)),
            Hop((1, 0), -t * np.eye(1)),
            Hop((0, 1), -t * np.eye(1))]
    return HoppingSpec(2, 1, hops, disorder, name="hofstadter"), MagneticFlux.plane(2, phi)


def chiral3d(m: float = 2.0, disorder: float = 0.0):
    """Four-band chiral (class AIII) model in d = 3, J = diag(1, 1, -1, -1).

    Off-diagonal block ``q(k) = (m + sum_j cos k_j) - i sum_j sin k_j tau_j``.
    The 3d winding number is +-1 for ``1 < |m| < 3`` and 0 for ``|m| > 3``.
    Disorder enters as a random mass ``m -> m + W omega``.
    """
    taus = (SX, SY, SZ)
    z = np.zeros((2, 2), complex)

    def chiral_block(q_lower, q_upper):
        return np.block([[z, q_upper], [q_lower, z]])

    i2 = np.eye(2, dtype=complex)
    onsite = chiral_block(i2, i2)
    hops = [Hop((0, 0, 0), m * onsite, onsite)]
    for a, tau in enumerate(taus):
        # <x|H|x-e_a>: lower block Q_{+e}, upper block (Q_{-e})^dagger
        hops.append(Hop(_unit(3, a), chiral_block((i2 + tau) / 2, (i2 - tau) / 2)))
    j = np.diag([1.0, 1.0, -1.0, -1.0])
    return HoppingSpec(3, 4, hops, disorder, chiral=j, name="chiral3d"), MagneticFlux.zero(3)


BUILTINS = {
    "atomic": atomic,
    "anderson": anderson,
    "ssh": ssh,
    "qwz": qwz,
    "hofstadter": hofstadter,
    "chiral3d": chiral3d,
}


def builtin(name: str, **params):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown builtin model {name!r}; choose from {sorted(BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name!r}: {exc}") from None
