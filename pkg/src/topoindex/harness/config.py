"""Sweep configuration: parsing and validation."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..io import build_model, load_yaml, model_document

KINDS = ("bulk", "even_chern", "odd_chern", "index", "boundary", "decay", "gap")

DEFAULT_OPTIONS = {
    "mu": 0.0,               # Fermi level / chiral gap centre
    "margin": None,          # trace-region margin, default side // 4
    "radius": None,          # Fedosov truncation radius, default largest that fits
    "order": None,           # Fedosov power, default d // 2 + 1
    "x0": None,              # Dirac point offset in (0, 1)^d
    "depth": None,           # slab depth, default L
    "sum_depth": None,       # boundary normal-direction sum, default depth // 2
    "switch_halfwidth": None,  # switch transition half width, default 0.6 x half gap
    "boundary_mu": 0.0,      # chemical potential on the boundary layer
    "strip_halfwidth": None,  # boundary-restricted disorder strip
    "eta": 1e-3,             # Im z for resolvent moments
    "s": 0.5,                # fractional exponent
    "fit_window": None,      # distance window for the decay fit
}


@dataclass
class SweepConfig:
    """One model, an optional swept parameter, sizes, seeds and requested kinds."""

    model: dict
    sizes: list
    invariants: list
    parameter: Optional[str] = None
    values: list = field(default_factory=lambda: [None])
    seeds: int = 1
    base_seed: int = 0
    output: Optional[str] = None
    calibration: Optional[str] = None
    record_runtime: bool = True
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.sizes or any(int(s) < 1 for s in self.sizes):
            raise ConfigurationError("sizes must be a non-empty list of positive integers")
        self.sizes = [int(s) for s in self.sizes]
        if int(self.seeds) < 1:
            raise ConfigurationError("seeds must be >= 1")
        self.seeds = int(self.seeds)
        if int(self.base_seed) < 0:
            raise ConfigurationError("base_seed must be >= 0")
        self.base_seed = int(self.base_seed)
        if self.parameter is None:
            self.values = [None]
        else:
            vals = np.asarray(self.values, dtype=float)
            if vals.size == 0:
                raise ConfigurationError("sweep grid is empty")
            steps = np.diff(vals)
            if vals.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
                raise ConfigurationError("sweep grid must be strictly monotone")
            self.values = [float(v) for v in vals]
        unknown = set(self.options) - set(DEFAULT_OPTIONS)
        if unknown:
            raise ConfigurationError(f"unknown options {sorted(unknown)}")
        self.options = {**DEFAULT_OPTIONS, **self.options}
        if not self.invariants:
            raise ConfigurationError("no invariants requested")
        spec, _ = build_model(self.model)
        d = spec.dimension
        for kind in self.invariants:
            if kind not in KINDS:
                raise ConfigurationError(f"unknown invariant kind {kind!r}; choose from {KINDS}")
            if kind == "even_chern" and d % 2:
                raise ConfigurationError(f"even_chern needs even d, model has d={d}")
            if kind == "odd_chern" and d % 2 == 0:
                raise ConfigurationError(f"odd_chern needs odd d, model has d={d}")
            if d % 2 and kind in ("bulk", "odd_chern", "index") and spec.chiral is None:
                raise ConfigurationError("odd-d bulk invariants need a chiral model")
            if d % 2 and kind == "boundary" and spec.chiral is None:
                raise ConfigurationError("odd-d boundary invariants need a chiral model")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "SweepConfig":
        if not isinstance(doc, dict):
            raise ConfigurationError("config must be a mapping")
        if "model" not in doc:
            raise ConfigurationError("config lacks a model section")
        sweep = doc.get("sweep") or {}
        sizes = doc.get("sizes", doc.get("size"))
        if isinstance(sizes, int):
            sizes = [sizes]
        output = doc.get("output")
        if output is not None and not os.path.isabs(output):
            output = os.path.join(base_dir, output)
        calibration = doc.get("calibration")
        if calibration is not None and not os.path.isabs(calibration):
            calibration = os.path.join(base_dir, calibration)
        known = {"model", "sweep", "sizes", "size", "seeds", "base_seed", "invariants",
                 "output", "calibration", "record_runtime", "options"}
        extra = set(doc) - known
        if extra:
            raise ConfigurationError(f"unknown config keys {sorted(extra)}")
        return cls(
            model=model_document(doc["model"], base_dir),
            sizes=list(sizes or []),
            invariants=list(doc.get("invariants") or ["bulk"]),
            parameter=sweep.get("parameter"),
            values=list(sweep.get("values") or []),
            seeds=doc.get("seeds", 1),
            base_seed=doc.get("base_seed", 0),
            output=output,
            calibration=calibration,
            record_runtime=bool(doc.get("record_runtime", True)),
            options=dict(doc.get("options") or {}),
        )

    @classmethod
    def from_yaml(cls, path) -> "SweepConfig":
        return cls.from_dict(load_yaml(path), os.path.dirname(os.path.abspath(path)))
