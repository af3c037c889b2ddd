"""Disorder sampling, magnetic translations and finite-volume Hamiltonians.

A covariant Hamiltonian on C^N (x) l^2(Z^d) is described by a :class:`HoppingSpec`:
a finite list of hops ``y -> A_y + omega_x * W * B_y`` where ``omega_x`` is the
local disorder variable at the row site ``x``.  Only one displacement of each
``+-y`` pair is stored; builders add the Hermitian conjugate.

Matrix layout: sites in lexicographic (C) order of their coordinates, fiber
index fastest, so matrix index ``i = site * N + alpha``.

Magnetic phases use the Landau-type bilinear form
``beta(x, y) = 2 * sum_{i<j} Phi_ij x_i y_j`` whose antisymmetric part is the
wedge ``x ^ y = x . Phi . y``.  The hop from ``x - y`` to ``x`` carries
``exp(i pi beta(x, y))``; see :func:`magnetic_translation` for the commuting
translations.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError

_ATOL = 1e-12


def _as_matrix(a, n: int, what: str) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m * np.eye(n, dtype=complex)
    if m.shape != (n, n):
        raise ConfigurationError(f"{what} must be {n}x{n}, got shape {m.shape}")
    return m


def _canonical(y: Sequence[int]) -> bool:
    for c in y:
        if c != 0:
            return c > 0
    return True


@dataclass(eq=False)
class Hop:
    """One stored displacement of a covariant Hamiltonian."""

    displacement: tuple[int, ...]
    constant: np.ndarray
    disorder: Optional[np.ndarray] = None

    @property
    def is_onsite(self) -> bool:
        return not any(self.displacement)


@dataclass(eq=False)
class HoppingSpec:
    """Finite-range covariant Hamiltonian with affine local disorder.

    Parameters
    ----------
    dimension : int
        Lattice dimension d.
    fiber_dim : int
        Number of internal degrees of freedom N per site.
    hops : sequence of Hop
        Stored displacements (``y = 0`` and the canonical half of the rest).
    disorder_amplitude : float
        W >= 0; the block at displacement y is ``A_y + omega_x * W * B_y``.
    chiral : array, optional
        Involution J on C^N with ``J H J = -H``.
    name : str
        Human-readable label, carried into result provenance.
    """

    dimension: int
    fiber_dim: int
    hops: list[Hop]
    disorder_amplitude: float = 0.0
    chiral: Optional[np.ndarray] = None
    name: str = "model"

    def __post_init__(self):
        d, n = int(self.dimension), int(self.fiber_dim)
        if d < 1 or n < 1:
            raise ConfigurationError("dimension and fiber_dim must be positive")
        if self.disorder_amplitude < 0:
            raise ConfigurationError("disorder_amplitude must be >= 0")
        self.dimension, self.fiber_dim = d, n
        self.disorder_amplitude = float(self.disorder_amplitude)
        seen = set()
        hops = []
        for hop in self.hops:
            y = tuple(int(c) for c in hop.displacement)
            if len(y) != d:
                raise ConfigurationError(f"displacement {y} has wrong length for d={d}")
            if not _canonical(y):
                raise ConfigurationError(
                    f"displacement {y} is not canonical; store -y instead "
                    "(first nonzero component must be positive)")
            if y in seen:
                raise ConfigurationError(f"duplicate displacement {y}")
            seen.add(y)
            a = _as_matrix(hop.constant, n, f"constant block at {y}")
            b = (np.zeros((n, n), complex) if hop.disorder is None
                 else _as_matrix(hop.disorder, n, f"disorder block at {y}"))
            if not any(y):
                for m, what in ((a, "constant"), (b, "disorder")):
                    if np.max(np.abs(m - m.conj().T), initial=0.0) > _ATOL:
                        raise ConfigurationError(f"onsite {what} block must be Hermitian")
            hops.append(Hop(y, a, b))
        self.hops = hops
        if self.chiral is not None:
            j = _as_matrix(self.chiral, n, "chiral involution")
            if np.max(np.abs(j - j.conj().T)) > _ATOL or \
                    np.max(np.abs(j @ j - np.eye(n))) > _ATOL:
                raise ConfigurationError("chiral J must satisfy J = J^dagger, J^2 = I")
            for hop in hops:
                for m in (hop.constant, hop.disorder):
                    if np.max(np.abs(j @ m @ j + m)) > _ATOL:
                        raise ConfigurationError(
                            f"hop {hop.displacement} breaks chiral symmetry J H J = -H")
            self.chiral = j

    @property
    def range(self) -> int:
        return max((max(abs(c) for c in h.displacement) for h in self.hops), default=0)

    def fingerprint(self) -> str:
        """Content hash identifying the model (used for provenance checks)."""
        h = hashlib.sha256()
        h.update(f"{self.dimension}|{self.fiber_dim}|{self.disorder_amplitude!r}".encode())
        for hop in sorted(self.hops, key=lambda h: h.displacement):
            h.update(repr(hop.displacement).encode())
            h.update(np.ascontiguousarray(hop.constant).tobytes())
            h.update(np.ascontiguousarray(hop.disorder).tobytes())
        if self.chiral is not None:
            h.update(np.ascontiguousarray(self.chiral).tobytes())
        return h.hexdigest()[:16]


@dataclass(eq=False)
class MagneticFlux:
    """Uniform magnetic field as an antisymmetric d x d matrix Phi.

    ``Phi[i, j]`` is the flux (in flux quanta) through an elementary (i, j)
    plaquette; the translation phase is ``exp(i pi x ^ y)`` with
    ``x ^ y = sum_{i<j} Phi_ij (x_i y_j - x_j y_i)``.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise ConfigurationError("flux matrix must be square")
        if np.max(np.abs(m + m.T), initial=0.0) > _ATOL:
            raise ConfigurationError("flux matrix must be antisymmetric")
        self.matrix = m

    @classmethod
    def zero(cls, d: int) -> "MagneticFlux":
        return cls(np.zeros((d, d)))

    @classmethod
    def plane(cls, d: int, phi: float, axes: tuple[int, int] = (0, 1)) -> "MagneticFlux":
        m = np.zeros((d, d))
        i, j = axes
        m[i, j], m[j, i] = phi, -phi
        return cls(m)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def wedge(self, x, y) -> np.ndarray:
        return np.asarray(x, float) @ self.matrix @ np.asarray(y, float).T

    def landau_form(self) -> np.ndarray:
        return 2.0 * np.triu(self.matrix, 1)

    def is_zero(self) -> bool:
        return not np.any(self.matrix)


@dataclass(eq=False)
class FiniteGeometry:
    """Finite piece of Z^d: side lengths and per-axis boundary conditions.

    With ``halfspace=True`` the last axis is the open normal direction, the
    boundary sits at ``x_d = 0`` and ``sides[-1]`` is the slab depth.
    """

    sides: tuple[int, ...]
    periodic: tuple[bool, ...]
    halfspace: bool = False

    def __post_init__(self):
        self.sides = tuple(int(s) for s in self.sides)
        self.periodic = tuple(bool(p) for p in self.periodic)
        if len(self.sides) != len(self.periodic) or not self.sides:
            raise ConfigurationError("sides and periodic must have equal nonzero length")
        if min(self.sides) < 1:
            raise ConfigurationError("all side lengths must be >= 1")
        if self.halfspace and self.periodic[-1]:
            raise ConfigurationError("half-space geometry needs an open normal axis")

    @classmethod
    def box(cls, sides) -> "FiniteGeometry":
        sides = tuple(sides)
        return cls(sides, (False,) * len(sides))

    @classmethod
    def torus(cls, sides) -> "FiniteGeometry":
        sides = tuple(sides)
        return cls(sides, (True,) * len(sides))

    @classmethod
    def slab(cls, edge: Sequence[int], depth: int,
             periodic_edge: bool = False) -> "FiniteGeometry":
        edge = tuple(edge)
        return cls(edge + (depth,), (periodic_edge,) * len(edge) + (False,), halfspace=True)

    @property
    def dimension(self) -> int:
        return len(self.sides)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.sides))

    @property
    def depth(self) -> int:
        return self.sides[-1]

    def coords(self) -> np.ndarray:
        """Integer site coordinates, shape (n_sites, d), lexicographic order."""
        return np.array(list(itertools.product(*(range(s) for s in self.sides))),
                        dtype=np.int64).reshape(self.n_sites, self.dimension)

    def index(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.int64)
        return np.ravel_multi_index(tuple(np.atleast_2d(c).T), self.sides)

    def describe(self) -> str:
        bc = "".join("p" if p else "o" for p in self.periodic)
        return "x".join(map(str, self.sides)) + f"[{bc}]" + ("/half" if self.halfspace else "")


@dataclass(eq=False)
class DisorderConfig:
    """One seeded realization of the disorder field on a geometry."""

    seed: int
    geometry: FiniteGeometry
    values: np.ndarray
    strip_halfwidth: Optional[int] = None

    def shifted(self, y) -> "DisorderConfig":
        """Realization of tau_y omega, i.e. ``omega'_x = omega_{x+y}`` (torus only)."""
        g = self.geometry
        if not all(g.periodic):
            raise ConfigurationError("disorder shifts are defined on tori only")
        grid = self.values.reshape(g.sides)
        shifted = np.roll(grid, shift=tuple(-int(c) for c in y), axis=tuple(range(g.dimension)))
        return DisorderConfig(self.seed, g, shifted.reshape(-1).copy(), self.strip_halfwidth)


def sample_disorder(seed: int, geometry: FiniteGeometry,
                    strip_halfwidth: Optional[int] = None) -> DisorderConfig:
    """Draw omega_x i.i.d. uniform on [-1/2, 1/2] for every site.

    Uses the counter-based Philox generator keyed by ``seed``; the value of a
    site is the draw at its lexicographic index, so results do not depend on
    the order in which realizations are generated.  With ``strip_halfwidth``
    (half-space only) every site with ``x_d > strip_halfwidth`` is set to 0.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigurationError("seed must be a 64-bit unsigned integer")
    if strip_halfwidth is not None:
        if not geometry.halfspace:
            raise ConfigurationError("strip_halfwidth requires a half-space geometry")
        if strip_halfwidth < 0:
            raise ConfigurationError("strip_halfwidth must be >= 0")
    rng = np.random.Generator(np.random.Philox(key=seed))
    values = rng.random(geometry.n_sites) - 0.5
    if strip_halfwidth is not None:
        values[geometry.coords()[:, -1] > strip_halfwidth] = 0.0
    return DisorderConfig(seed, geometry, values, strip_halfwidth)


def translation_phase(x, y, flux: MagneticFlux) -> complex:
    """Return ``exp(i pi x ^ y)``, the magnetic translation cocycle."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != (flux.dimension,) or y.shape != (flux.dimension,):
        raise ConfigurationError("site/displacement dimension does not match flux")
    return complex(np.exp(1j * np.pi * flux.wedge(x, y)))


@dataclass(eq=False)
class FiniteModel:
    """Hermitian matrix realization of a covariant Hamiltonian."""

    matrix: np.ndarray
    geometry: FiniteGeometry
    fiber_dim: int
    spec_fingerprint: str
    seed: Optional[int]
    flux: MagneticFlux
    chiral: Optional[np.ndarray] = None
    kind: str = "bulk"
    name: str = "model"
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def positions(self) -> np.ndarray:
        """Site coordinates for every matrix index, shape (dim, d)."""
        return np.repeat(self.geometry.coords(), self.fiber_dim, axis=0)

    def site_chiral(self) -> Optional[np.ndarray]:
        """Chiral operator on the full space (diagonal over sites)."""
        if self.chiral is None:
            return None
        return np.kron(np.eye(self.geometry.n_sites), self.chiral)


def _check_flux(flux: MagneticFlux, geometry: FiniteGeometry):
    phi = flux.matrix
    d = geometry.dimension
    if flux.dimension != d:
        raise ConfigurationError("flux dimension does not match geometry")
    for i in range(d):
        for j in range(i + 1, d):
            if phi[i, j] == 0:
                continue
            for axis in (i, j):
                if geometry.periodic[axis]:
                    t = phi[i, j] * geometry.sides[axis]
                    if abs(t - round(t)) > 1e-9:
                        raise ConfigurationError(
                            f"flux {phi[i, j]} incommensurate with periodic side "
                            f"L_{axis}={geometry.sides[axis]} (need Phi_ij * L integer)")


def _check_range(rng: int, geometry: FiniteGeometry):
    for s, p in zip(geometry.sides, geometry.periodic):
        if p and 2 * rng >= s:
            raise ConfigurationError(
                f"hopping range {rng} too large for periodic side {s} (need 2R < L)")


def _add_block_hop(h4, coords, geometry, landau, y, a, b, w, omega, rows):
    """Add one displacement (and its adjoint) to the (S, N, S, N) array."""
    y = np.asarray(y, dtype=np.int64)
    target = coords[rows] - y
    sides = np.asarray(geometry.sides)
    ok = np.ones(len(rows), dtype=bool)
    for ax in range(geometry.dimension):
        if geometry.periodic[ax]:
            target[:, ax] %= sides[ax]
        else:
            ok &= (target[:, ax] >= 0) & (target[:, ax] < sides[ax])
    rows, target = rows[ok], target[ok]
    if len(rows) == 0:
        return
    cols = geometry.index(target)
    phase = np.exp(1j * np.pi * (coords[rows] @ landau @ y))
    blocks = (a[None] + (w * omega[rows])[:, None, None] * b[None]) * phase[:, None, None]
    if not y.any():
        h4[rows, :, rows, :] += blocks
    else:
        h4[rows, :, cols, :] += blocks
        h4[cols, :, rows, :] += blocks.conj().transpose(0, 2, 1)


def _disorder_values(disorder: Optional[DisorderConfig], geometry: FiniteGeometry):
    if disorder is None:
        return np.zeros(geometry.n_sites)
    if disorder.geometry.sides != geometry.sides or \
            disorder.geometry.periodic != geometry.periodic:
        raise ConfigurationError("disorder realization was drawn for a different geometry")
    return disorder.values


def build_bulk(spec: HoppingSpec, flux: MagneticFlux, geometry: FiniteGeometry,
               disorder: Optional[DisorderConfig] = None) -> FiniteModel:
    """Assemble H_omega on a finite geometry.

    Open axes implement the Dirichlet restriction, periodic axes wrap around;
    on periodic axes the flux must be commensurate so that the magnetic
    translations of :func:`magnetic_translation` are exact symmetries.
    """
    if spec.dimension != geometry.dimension:
        raise ConfigurationError("spec and geometry dimensions differ")
    _check_flux(flux, geometry)
    _check_range(spec.range, geometry)
    omega = _disorder_values(disorder, geometry)
    n, s = spec.fiber_dim, geometry.n_sites
    coords = geometry.coords()
    landau = flux.landau_form()
    h4 = np.zeros((s, n, s, n), dtype=complex)
    rows = np.arange(s)
    for hop in spec.hops:
        _add_block_hop(h4, coords, geometry, landau, hop.displacement, hop.constant,
                       hop.disorder, spec.disorder_amplitude, omega, rows)
    return FiniteModel(
        matrix=h4.reshape(s * n, s * n), geometry=geometry, fiber_dim=n,
        spec_fingerprint=spec.fingerprint(),
        seed=None if disorder is None else disorder.seed, flux=flux,
        chiral=spec.chiral, kind="bulk", name=spec.name)


@dataclass(eq=False)
class BoundaryHop:
    """Boundary-term block coupling layer ``layer_to`` (column) to ``layer_from`` (row).

    The block ``constant + omega_{x,n} * W * disorder`` sits at
    ``<x, n | H~ | x - y, m>`` with ``n = layer_from``, ``m = layer_to`` and
    ``y`` a displacement parallel to the boundary.
    """

    layer_from: int
    layer_to: int
    displacement: tuple[int, ...]
    constant: np.ndarray
    disorder: Optional[np.ndarray] = None


@dataclass(eq=False)
class BoundaryTerm:
    """Finite-depth boundary perturbation of a half-space Hamiltonian."""

    hops: list[BoundaryHop] = field(default_factory=list)
    disorder_amplitude: float = 0.0

    @property
    def reach(self) -> int:
        return max((max(h.layer_from, h.layer_to) + 1 for h in self.hops), default=0)

    @classmethod
    def chemical_potential(cls, mu_b: float, fiber_dim: int, d: int) -> "BoundaryTerm":
        return cls([BoundaryHop(0, 0, (0,) * (d - 1), mu_b * np.eye(fiber_dim))])


def build_halfspace(spec: HoppingSpec, boundary_term: Optional[BoundaryTerm],
                    flux: MagneticFlux, geometry: FiniteGeometry,
                    disorder: Optional[DisorderConfig] = None) -> FiniteModel:
    """Half-space Hamiltonian: Dirichlet restriction to ``x_d >= 0`` plus boundary term.

    The boundary term reuses the bulk disorder realization (the same
    ``omega_x`` on the layers it touches).
    """
    if not geometry.halfspace:
        raise ConfigurationError("build_halfspace needs a half-space geometry")
    model = build_bulk(spec, flux, geometry, disorder)
    model.kind = "halfspace"
    if boundary_term is None or not boundary_term.hops:
        return model
    if boundary_term.reach > geometry.depth:
        raise ConfigurationError(
            f"boundary term reaches layer {boundary_term.reach - 1}, "
            f"deeper than slab depth {geometry.depth}")
    n, s = spec.fiber_dim, geometry.n_sites
    d = geometry.dimension
    coords = geometry.coords()
    omega = _disorder_values(disorder, geometry)
    landau = flux.landau_form()
    h4 = model.matrix.reshape(s, n, s, n)
    for bh in boundary_term.hops:
        ypar = tuple(int(c) for c in bh.displacement)
        if len(ypar) != d - 1:
            raise ConfigurationError("boundary displacement must have d-1 components")
        n_row, m_col = int(bh.layer_from), int(bh.layer_to)
        y = ypar + (n_row - m_col,)
        a = _as_matrix(bh.constant, n, "boundary block")
        b = (np.zeros((n, n), complex) if bh.disorder is None
             else _as_matrix(bh.disorder, n, "boundary disorder block"))
        if not any(y):
            if np.max(np.abs(a - a.conj().T)) > _ATOL or np.max(np.abs(b - b.conj().T)) > _ATOL:
                raise ConfigurationError("onsite boundary block must be Hermitian")
        rows = np.flatnonzero(coords[:, -1] == n_row)
        _add_block_hop(h4, coords, geometry, landau, y, a, b,
                       boundary_term.disorder_amplitude, omega, rows)
    model.matrix = h4.reshape(s * n, s * n)
    return model


def magnetic_translation(y, flux: MagneticFlux, geometry: FiniteGeometry,
                         fiber_dim: int = 1) -> np.ndarray:
    """Unitary U_y on a torus with ``U_y H_omega U_y^dagger = H_{tau_y omega}``.

    ``(U_y psi)(x) = exp(-i pi (beta(y, x) + beta(y, y)/2)) psi(x + y)``; these
    satisfy ``U_x U_y = exp(i pi x ^ y) U_{x+y}``.
    """
    if not all(geometry.periodic):
        raise ConfigurationError("magnetic translations need a torus")
    _check_flux(flux, geometry)
    y = np.asarray(y, dtype=np.int64)
    coords = geometry.coords()
    src = (coords + y) % np.asarray(geometry.sides)
    cols = geometry.index(src)
    landau = flux.landau_form()
    # gauge factor exp(-i pi q(y)), q(y) = beta(y, y) / 2, turns the Landau
    # cocycle exp(-i pi beta(y, x)) into exp(i pi x ^ y)
    phase = np.exp(-1j * np.pi * (y @ landau @ coords.T + 0.5 * (y @ landau @ y)))
    s = geometry.n_sites
    u = np.zeros((s, s), dtype=complex)
    u[np.arange(s), cols] = phase
    return np.kron(u, np.eye(fiber_dim))
