"""Real-space even and odd Chern numbers, bulk and boundary.

All formulas share the shape ``Lambda_d sum_rho sign(rho) tr<x| B prod_i F_rho(i) |x>``
averaged over a trace region, with ``F_j = i[X_j, P]`` (even) or
``F_j = U^dagger i[X_j, U]`` (odd).  Position commutators are taken on open
axes only, where ``X`` is unambiguous.
"""

from __future__ import annotations

import itertools
from math import factorial, pi
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, MarginError, ParityError, PreconditionError
from ..lattice import FiniteGeometry
from .result import InvariantResult, real_part

TAIL_LAYERS = 4
TAIL_TOL = 1e-3


def even_constant(d: int) -> complex:
    return (2j * pi) ** (d // 2) / factorial(d // 2)


def odd_constant(d: int) -> complex:
    double_fact = int(np.prod(np.arange(d, 0, -2))) if d > 0 else 1
    return 1j * (1j * pi) ** ((d - 1) // 2) / double_fact


def signed_permutations(d: int):
    for perm in itertools.permutations(range(d)):
        inversions = sum(1 for i in range(d) for j in range(i + 1, d) if perm[i] > perm[j])
        yield perm, (-1) ** inversions


def central_region(geometry: FiniteGeometry, margin: Optional[int] = None,
                   axes: Optional[Sequence[int]] = None) -> np.ndarray:
    """Coordinates of sites at distance >= margin from every open edge.

    ``axes`` restricts the region to those axes (others must be handled by
    the caller); the default margin is a quarter of the shortest open side.
    Returns an integer array of shape (n, len(axes)).
    """
    axes = list(range(geometry.dimension)) if axes is None else list(axes)
    sides = [geometry.sides[a] for a in axes]
    if margin is None:
        margin = min(s // 4 for s in sides)
    ranges = []
    for a, s in zip(axes, sides):
        lo, hi = (margin, s - margin) if not geometry.periodic[a] else (0, s)
        if hi <= lo:
            raise MarginError(f"side {s} too short for margin {margin}")
        ranges.append(range(lo, hi))
    return np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(-1, len(axes))


def _margin_of(cells: np.ndarray, geometry: FiniteGeometry, axes) -> int:
    dist = []
    for col, a in enumerate(axes):
        if geometry.periodic[a]:
            continue
        c = cells[:, col]
        dist.append(min(c.min(), geometry.sides[a] - 1 - c.max()))
    return int(min(dist)) if dist else np.iinfo(np.int64).max


def _require_open(geometry: FiniteGeometry, axes):
    for a in axes:
        if geometry.periodic[a]:
            raise PreconditionError(
                f"axis {a} is periodic; position commutators need open axes")


def _trace_density(first: Optional[np.ndarray], factors: list, rows: np.ndarray) -> np.ndarray:
    """Per-row ``sum_rho sign(rho) [first F_rho(1) ... F_rho(d)]_{rr}``."""
    d = len(factors)
    if d == 0:
        return np.diagonal(first)[rows].astype(complex)
    total = np.zeros(len(rows), dtype=complex)
    for perm, sign in signed_permutations(d):
        seq = ([first] if first is not None else []) + [factors[j] for j in perm]
        if len(seq) == 1:
            total += sign * seq[0][rows, rows]
            continue
        acc = seq[0][rows, :]
        for m in seq[1:-1]:
            acc = acc @ m
        total += sign * np.einsum("ij,ji->i", acc, seq[-1][:, rows])
    return total


def _commutator_factors(op: np.ndarray, coords: np.ndarray, axes, odd: bool) -> list:
    out = []
    for a in axes:
        x = coords[:, a].astype(float)
        comm = 1j * (x[:, None] - x[None, :]) * op
        out.append(op.conj().T @ comm if odd else comm)
    return out


def _winding_density(u: np.ndarray, coords: np.ndarray, axis: int,
                     rows: np.ndarray) -> np.ndarray:
    """``[U^dagger i[X_axis, U]]_{rr}`` without forming any matrix product."""
    x = coords[:, axis].astype(float)
    cols = u[:, rows]
    return 1j * np.einsum("kr,kr->r", cols.conj(), (x[:, None] - x[rows][None, :]) * cols)


def _matrix_coords(op: np.ndarray, geometry: FiniteGeometry) -> tuple[np.ndarray, int]:
    s = geometry.n_sites
    if op.shape[0] % s or op.shape[0] != op.shape[1]:
        raise ConfigurationError(f"operator of shape {op.shape} does not fit {s} sites")
    fiber = op.shape[0] // s
    return np.repeat(geometry.coords(), fiber, axis=0), fiber


def _rows_for_sites(sites: np.ndarray, fiber: int) -> np.ndarray:
    return (sites[:, None] * fiber + np.arange(fiber)[None, :]).reshape(-1)


def _bulk(op, geometry, trace_region, margin, odd: bool, kind: str) -> InvariantResult:
    d = geometry.dimension
    if (d % 2 == 1) != odd:
        raise ParityError(f"{kind} requires {'odd' if odd else 'even'} d, got d={d}")
    axes = list(range(d))
    _require_open(geometry, axes)
    if trace_region is None:
        trace_region = central_region(geometry, margin)
    cells = np.atleast_2d(np.asarray(trace_region, dtype=np.int64))
    need = min(s // 4 for s in geometry.sides) if margin is None else margin
    if _margin_of(cells, geometry, axes) < need:
        raise MarginError(f"trace region closer than {need} sites to the sample edge")
    coords, fiber = _matrix_coords(op, geometry)
    sites = geometry.index(cells)
    rows = _rows_for_sites(sites, fiber)
    factors = _commutator_factors(op, coords, axes, odd)
    dens = _trace_density(None if odd else op, factors, rows)
    const = odd_constant(d) if odd else even_constant(d)
    per_site = const * dens.reshape(len(sites), fiber).sum(axis=1)
    raw, residue = real_part(per_site.mean(), kind)
    return InvariantResult(
        kind=kind, dimension=d, raw=raw, constant=const, size=geometry.sides,
        region=f"box {cells.min(0).tolist()}..{cells.max(0).tolist()} ({len(sites)} sites)",
        imag_residue=max(residue, float(np.max(np.abs(per_site.imag)))),
        site_values=per_site.real)


def even_chern(p: np.ndarray, geometry: FiniteGeometry, trace_region=None,
               margin: Optional[int] = None) -> InvariantResult:
    """Even Chern number of a projection on an open box of even dimension."""
    return _bulk(p, geometry, trace_region, margin, odd=False, kind="even_chern")


def odd_chern(u: np.ndarray, geometry: FiniteGeometry, trace_region=None,
              margin: Optional[int] = None) -> InvariantResult:
    """Odd Chern number of a unitary on an open box of odd dimension (winding for d = 1)."""
    d = geometry.dimension
    if d == 1:
        return _odd_chern_1d(u, geometry, trace_region, margin)
    return _bulk(u, geometry, trace_region, margin, odd=True, kind="odd_chern")


def _odd_chern_1d(u, geometry, trace_region, margin):
    # d = 1: only diag_R(U^dagger i[X, U]) is needed, no full products
    _require_open(geometry, [0])
    if trace_region is None:
        trace_region = central_region(geometry, margin)
    cells = np.atleast_2d(np.asarray(trace_region, dtype=np.int64)).reshape(-1, 1)
    need = geometry.sides[0] // 4 if margin is None else margin
    if _margin_of(cells, geometry, [0]) < need:
        raise MarginError(f"trace region closer than {need} sites to the sample edge")
    coords, fiber = _matrix_coords(u, geometry)
    sites = geometry.index(cells)
    rows = _rows_for_sites(sites, fiber)
    dens = _winding_density(u, coords, 0, rows)
    const = odd_constant(1)
    per_site = const * dens.reshape(len(sites), fiber).sum(axis=1)
    raw, residue = real_part(per_site.mean(), "odd_chern")
    return InvariantResult(
        kind="odd_chern", dimension=1, raw=raw, constant=const, size=geometry.sides,
        region=f"cells {int(cells.min())}..{int(cells.max())}",
        imag_residue=max(residue, float(np.max(np.abs(per_site.imag)))),
        site_values=per_site.real)


# --- boundary invariants ----------------------------------------------------

def _boundary(op, geometry, edge_cells, sum_depth, margin, odd: bool, kind: str,
              reference: Optional[np.ndarray] = None) -> InvariantResult:
    if not geometry.halfspace:
        raise PreconditionError(f"{kind} needs a half-space geometry")
    d = geometry.dimension
    dpar = d - 1
    if (dpar % 2 == 1) != odd:
        raise ParityError(f"{kind} requires boundary dimension d-1 "
                          f"{'odd' if odd else 'even'}, got {dpar}")
    axes = list(range(dpar))
    _require_open(geometry, axes)
    depth = geometry.depth
    sum_depth = depth // 2 if sum_depth is None else int(sum_depth)
    if not 0 < sum_depth <= depth:
        raise ConfigurationError("sum_depth must lie in [1, depth]")
    if dpar:
        if edge_cells is None:
            edge_cells = central_region(geometry, margin, axes=axes)
        cells = np.atleast_2d(np.asarray(edge_cells, dtype=np.int64)).reshape(-1, dpar)
        need = min(geometry.sides[a] // 4 for a in axes) if margin is None else margin
        if _margin_of(cells, geometry, axes) < need:
            raise MarginError(f"edge cells closer than {need} sites to the side edges")
    else:
        cells = np.zeros((1, 0), dtype=np.int64)
    coords, fiber = _matrix_coords(op, geometry)
    layers = np.arange(sum_depth)
    full = np.array([tuple(c) + (n,) for c in cells for n in layers], dtype=np.int64)
    sites = geometry.index(full.reshape(-1, d))
    rows = _rows_for_sites(sites, fiber)
    if odd and dpar == 1:
        dens = _winding_density(op, coords, 0, rows)
        const = odd_constant(1)
    elif odd:
        factors = _commutator_factors(op, coords, axes, odd=True)
        dens = _trace_density(None, factors, rows)
        const = odd_constant(dpar)
    elif dpar == 0:
        # relative trace Tr(P~ - reference) along the half-line
        dens = np.diagonal(op - reference)[rows].astype(complex)
        const = 1.0 + 0j
    else:
        factors = _commutator_factors(op, coords, axes, odd=False)
        dens = _trace_density(op, factors, rows)
        const = even_constant(dpar)
    per_layer = const * dens.reshape(len(cells), sum_depth, fiber).sum(axis=2)
    per_cell = per_layer.sum(axis=1)
    raw, residue = real_part(per_cell.mean(), kind)
    tail = float(per_layer[:, -TAIL_LAYERS:].sum(axis=1).mean().real)
    res = InvariantResult(
        kind=kind, dimension=d, raw=raw, constant=const, size=geometry.sides,
        region=f"{len(cells)} edge cells x {sum_depth} layers",
        imag_residue=max(residue, float(np.max(np.abs(per_cell.imag)))),
        site_values=per_layer.real.mean(axis=0), tail=tail)
    if abs(tail) > TAIL_TOL * max(1.0, abs(raw)):
        res.flags.add("depth_unconverged")
    return res


def boundary_odd_chern(ut: np.ndarray, geometry: FiniteGeometry, edge_cells=None,
                       sum_depth: Optional[int] = None,
                       margin: Optional[int] = None) -> InvariantResult:
    """Odd Chern number of a boundary unitary (even bulk dimension).

    The trace over the normal direction runs over layers ``0 .. sum_depth-1``
    (default: half the slab depth, away from the opposite face) and is
    averaged over the edge cells.  ``site_values`` holds the per-layer profile
    and ``tail`` the contribution of the last four summed layers.
    """
    return _boundary(ut, geometry, edge_cells, sum_depth, margin, odd=True,
                     kind="boundary_odd_chern")


def boundary_even_chern(pt: np.ndarray, geometry: FiniteGeometry, reference: np.ndarray,
                        edge_cells=None, sum_depth: Optional[int] = None,
                        margin: Optional[int] = None) -> InvariantResult:
    """Even Chern number of a boundary projection (odd bulk dimension).

    For d = 1 the boundary is a point and the value is the relative trace
    ``Tr(P~ - reference)`` over the summed layers.
    """
    return _boundary(pt, geometry, edge_cells, sum_depth, margin, odd=False,
                     kind="boundary_even_chern", reference=reference)
