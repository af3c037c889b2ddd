"""Evaluation of all requested kinds on one disorder realization.

A task is a plain picklable record so that it can be shipped to worker
processes; it carries the normalized model document rather than live objects.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..invariants import (boundary_even_chern, boundary_odd_chern, even_chern,
                          fredholm_index_projection, fredholm_index_unitary, odd_chern)
from ..io import build_model
from ..lattice import (BoundaryTerm, FiniteGeometry, build_bulk, build_halfspace,
                       sample_disorder)
from ..localization import seed_moments
from ..spectral import (SwitchFunction, boundary_projection, boundary_unitary, decompose,
                        fermi_projection, polar_flat_band_unitary, reference_projection)


SWITCH_FRACTION = 0.6


@dataclass(frozen=True)
class Task:
    point_index: int
    replica: int
    seed: Optional[int]
    size: int
    model: dict
    kinds: tuple
    options: dict


@dataclass
class TaskOutcome:
    point_index: int
    replica: int
    size: int
    values: dict      # kind -> InvariantResult | seed_moments tuple | float
    runtimes: dict    # kind -> seconds


def canonical_kind(kind: str, d: int) -> str:
    if kind == "bulk":
        return "odd_chern" if d % 2 else "even_chern"
    if kind == "index":
        return "fredholm_unitary" if d % 2 else "fredholm_projection"
    if kind == "boundary":
        return "boundary_even_chern" if d % 2 else "boundary_odd_chern"
    return kind


def _strip(res):
    # per-site arrays are not needed downstream and bloat inter-process traffic
    return replace(res, site_values=None)


class _Bulk:
    """Lazily built bulk box model and its P or U, shared between kinds."""

    def __init__(self, spec, flux, size, seed, opts):
        self.spec, self.flux, self.opts = spec, flux, opts
        self.geometry = FiniteGeometry.box((size,) * spec.dimension)
        disorder = sample_disorder(seed, self.geometry) if seed is not None else None
        self.model = build_bulk(spec, flux, self.geometry, disorder)
        self._op = None

    def operator(self):
        if self._op is None:
            if self.spec.dimension % 2:
                self._op = polar_flat_band_unitary(self.model)
            else:
                self._op = fermi_projection(decompose(self.model), self.opts["mu"])
        return self._op


def _boundary(spec, flux, size, seed, opts):
    d = spec.dimension
    depth = opts["depth"] or size
    geometry = FiniteGeometry.slab((size,) * (d - 1), depth)
    disorder = None
    if seed is not None:
        disorder = sample_disorder(seed, geometry, opts["strip_halfwidth"])
    term = None
    if opts["boundary_mu"]:
        term = BoundaryTerm.chemical_potential(opts["boundary_mu"], spec.fiber_dim, d)
    model = build_halfspace(spec, term, flux, geometry, disorder)
    mu = opts["mu"]
    # bulk gap from the torus of the same size and seed
    ev = _gap(spec, flux, size, seed)
    lo, hi = ev[ev <= mu], ev[ev > mu]
    gap = (lo[-1] if lo.size else -np.inf, hi[0] if hi.size else np.inf)
    hw = opts["switch_halfwidth"]
    if hw is None:
        hw = SWITCH_FRACTION * min(mu - gap[0], gap[1] - mu)
        if not np.isfinite(hw) or hw <= 0:
            raise ConfigurationError("no bulk gap at mu; set switch_halfwidth explicitly")
    if d % 2 == 0:
        ut = boundary_unitary(model, SwitchFunction.descending(mu, hw), bulk_gap=gap)
        return boundary_odd_chern(ut, geometry, sum_depth=opts["sum_depth"],
                                  margin=opts["margin"])
    pt = boundary_projection(model, SwitchFunction.odd(hw), bulk_gap=gap)
    return boundary_even_chern(pt, geometry, reference_projection(model),
                               sum_depth=opts["sum_depth"], margin=opts["margin"])


def _gap(spec, flux, size, seed):
    geometry = FiniteGeometry.torus((size,) * spec.dimension)
    disorder = sample_disorder(seed, geometry) if seed is not None else None
    ev = np.linalg.eigvalsh(build_bulk(spec, flux, geometry, disorder).matrix)
    return ev


def evaluate_task(task: Task) -> TaskOutcome:
    spec, flux = build_model(task.model)
    opts = task.options
    d = spec.dimension
    values, runtimes = {}, {}
    bulk = None
    provenance = {"spec": spec.fingerprint(), "seed": task.seed, "flux": repr(flux.matrix.tolist())}
    for kind in task.kinds:
        t0 = time.perf_counter()
        name = canonical_kind(kind, d)
        if name in ("even_chern", "odd_chern", "fredholm_projection", "fredholm_unitary"):
            if bulk is None:
                bulk = _Bulk(spec, flux, task.size, task.seed, opts)
            op, geo = bulk.operator(), bulk.geometry
            if name == "even_chern":
                res = even_chern(op, geo, margin=opts["margin"])
            elif name == "odd_chern":
                res = odd_chern(op, geo, margin=opts["margin"])
            else:
                fn = fredholm_index_unitary if d % 2 else fredholm_index_projection
                res = fn(op, geo, x0=opts["x0"], radius=opts["radius"], order=opts["order"])
            values[name] = _strip(res)
        elif name in ("boundary_odd_chern", "boundary_even_chern"):
            values[name] = _strip(_boundary(spec, flux, task.size, task.seed, opts))
        elif name == "decay":
            geometry = FiniteGeometry.box((task.size,) * d)
            z = opts["mu"] + 1j * opts["eta"]
            seed = task.seed if task.seed is not None else 0
            values[name] = seed_moments(spec, flux, geometry, z, opts["s"], seed)
        elif name == "gap":
            ev = _gap(spec, flux, task.size, task.seed)
            mu = opts["mu"]
            below, above = ev[ev <= mu], ev[ev > mu]
            lo = below[-1] if below.size else -np.inf
            hi = above[0] if above.size else np.inf
            values[name] = float(hi - lo)
        else:
            raise ConfigurationError(f"unknown kind {kind!r}")
        if hasattr(values[name], "provenance"):
            values[name].provenance.update(provenance)
        runtimes[name] = time.perf_counter() - t0
    return TaskOutcome(task.point_index, task.replica, task.size, values, runtimes)
