"""Orientation calibration against a momentum-space reference.

The real-space Chern number depends on orientation choices (wedge, Clifford
generators, commutator order).  The reference run compares it, for the
lowest Hofstadter band at flux 1/3, with the plaquette Chern number of the
magnetic Bloch bundle and with the Diophantine (TKNN) integer, and records
the relative sign.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from typing import Optional

from ..errors import TopoIndexError
from ..invariants import even_chern
from ..lattice import FiniteGeometry, build_bulk
from ..models import hofstadter
from ..oracles import hofstadter_chern, tknn_chern
from ..spectral import decompose, fermi_projection

UNCALIBRATED = "uncalibrated"
_FIELDS = ("id", "reference", "size", "grid", "raw", "nearest", "plaquette_chern",
           "tknn", "sign", "tknn_sign")


class CalibrationError(TopoIndexError):
    pass


class CalibrationWarning(UserWarning):
    pass


def _record_id(rec: dict) -> str:
    body = json.dumps({k: rec[k] for k in _FIELDS if k != "id"}, sort_keys=True)
    return hashlib.sha256(body.encode()).hexdigest()[:12]


def run_reference(size: int = 24, grid: int = 96, mu: float = -1.5) -> dict:
    """Hofstadter phi = 1/3 with the Fermi level in the lowest gap."""
    spec, flux = hofstadter(phi=1 / 3)
    geometry = FiniteGeometry.box((size, size))
    p = fermi_projection(decompose(build_bulk(spec, flux, geometry)), mu)
    res = even_chern(p, geometry)
    if not res.converged or res.nearest == 0:
        raise CalibrationError(f"reference run unconverged (raw={res.raw:.4f}); "
                               "calibration aborted")
    fhs = round(hofstadter_chern(spec, flux, 1, grid))
    tk = tknn_chern(1, 3, 1)
    rec = {"reference": "hofstadter phi=1/3 lowest gap", "size": size, "grid": grid,
           "raw": round(res.raw, 10), "nearest": res.nearest, "plaquette_chern": fhs,
           "tknn": tk, "sign": res.nearest * fhs, "tknn_sign": res.nearest * tk}
    rec["id"] = _record_id(rec)
    return {k: rec[k] for k in _FIELDS}


def _valid(rec) -> bool:
    try:
        return set(rec) == set(_FIELDS) and rec["sign"] in (1, -1) and \
            rec["id"] == _record_id(rec)
    except (TypeError, KeyError):
        return False


def load_calibration(path) -> Optional[dict]:
    """Stored record, or None if absent; a corrupted file warns and yields None."""
    if path is None or not os.path.exists(path):
        return None
    try:
        with open(path) as fh:
            rec = json.load(fh)
    except (OSError, ValueError):
        rec = None
    if not _valid(rec):
        warnings.warn(f"calibration record {path} is corrupted", CalibrationWarning,
                      stacklevel=2)
        return None
    return rec


def calibrate_sign(path=None, size: int = 24, grid: int = 96) -> dict:
    """Load the calibration record at ``path`` or (re)compute and store it."""
    rec = load_calibration(path) if path is not None else None
    if rec is not None and rec["size"] == size and rec["grid"] == grid:
        return rec
    if path is not None and os.path.exists(path) and rec is None:
        warnings.warn("recalibrating", CalibrationWarning, stacklevel=2)
    rec = run_reference(size, grid)
    if path is not None:
        with open(path, "w") as fh:
            json.dump(rec, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rec


def calibration_id(path) -> str:
    rec = load_calibration(path)
    return rec["id"] if rec else UNCALIBRATED
