"""Structured-text (YAML) serialization of model specifications.

A spec document mirrors :class:`HoppingSpec` and :class:`MagneticFlux`::

    name: qwz
    dimension: 2
    fiber_dim: 2
    disorder_amplitude: 0.0
    flux: [[0.0, 0.0], [0.0, 0.0]]        # optional, default zero
    chiral: null                          # optional N x N matrix
    hops:
      - displacement: [0, 0]
        constant: [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
        disorder: ...                     # optional

Complex matrices are row-major lists of ``[re, im]`` pairs.  A bare number
stands for that multiple of the identity.

Configuration files refer to models through a ``model`` section holding one
of ``builtin`` (+ ``params``), ``spec`` (path to a spec document) or
``inline`` (a spec document embedded in the config).
"""

from __future__ import annotations

import copy
import os
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigurationError
from .lattice import Hop, HoppingSpec, MagneticFlux
from .models import builtin


def matrix_to_pairs(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def pairs_to_matrix(data, n: Optional[int] = None) -> np.ndarray:
    if isinstance(data, (int, float)):
        if n is None:
            raise ConfigurationError("scalar matrix needs a known size")
        return float(data) * np.eye(n, dtype=complex)
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed complex matrix: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigurationError("complex matrix must be a list of rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def spec_to_dict(spec: HoppingSpec, flux: Optional[MagneticFlux] = None) -> dict:
    doc: dict[str, Any] = {
        "name": spec.name,
        "dimension": spec.dimension,
        "fiber_dim": spec.fiber_dim,
        "disorder_amplitude": spec.disorder_amplitude,
    }
    if flux is not None and not flux.is_zero():
        doc["flux"] = [[float(v) for v in row] for row in flux.matrix]
    if spec.chiral is not None:
        doc["chiral"] = matrix_to_pairs(spec.chiral)
    hops = []
    for hop in spec.hops:
        entry = {"displacement": list(hop.displacement),
                 "constant": matrix_to_pairs(hop.constant)}
        if hop.disorder is not None and np.any(hop.disorder):
            entry["disorder"] = matrix_to_pairs(hop.disorder)
        hops.append(entry)
    doc["hops"] = hops
    return doc


def spec_from_dict(doc: dict) -> tuple[HoppingSpec, MagneticFlux]:
    if not isinstance(doc, dict):
        raise ConfigurationError("spec document must be a mapping")
    missing = {"dimension", "fiber_dim", "hops"} - set(doc)
    if missing:
        raise ConfigurationError(f"spec document lacks {sorted(missing)}")
    d, n = int(doc["dimension"]), int(doc["fiber_dim"])
    hops = []
    for i, h in enumerate(doc["hops"]):
        try:
            y = tuple(int(c) for c in h["displacement"])
            a = pairs_to_matrix(h["constant"], n)
        except KeyError as exc:
            raise ConfigurationError(f"hop {i} lacks {exc}") from None
        b = pairs_to_matrix(h["disorder"], n) if h.get("disorder") is not None else None
        hops.append(Hop(y, a, b))
    chiral = pairs_to_matrix(doc["chiral"], n) if doc.get("chiral") is not None else None
    spec = HoppingSpec(d, n, hops, float(doc.get("disorder_amplitude", 0.0)),
                       chiral=chiral, name=str(doc.get("name", "model")))
    if doc.get("flux") is not None:
        flux = MagneticFlux(np.asarray(doc["flux"], dtype=float))
        if flux.dimension != d:
            raise ConfigurationError("flux matrix dimension differs from spec dimension")
    else:
        flux = MagneticFlux.zero(d)
    return spec, flux


def save_spec(path, spec: HoppingSpec, flux: Optional[MagneticFlux] = None):
    with open(path, "w") as fh:
        yaml.safe_dump(spec_to_dict(spec, flux), fh, sort_keys=False)


def load_yaml(path) -> Any:
    try:
        with open(path) as fh:
            return yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None


def load_spec(path) -> tuple[HoppingSpec, MagneticFlux]:
    return spec_from_dict(load_yaml(path))


def model_document(section: dict, base_dir: str = ".") -> dict:
    """Normalize a config ``model`` section to ``{"builtin", "params"}`` or ``{"inline"}``."""
    if not isinstance(section, dict):
        raise ConfigurationError("model section must be a mapping")
    keys = {"builtin", "spec", "inline"} & set(section)
    if len(keys) != 1:
        raise ConfigurationError("model section needs exactly one of builtin/spec/inline")
    if "builtin" in section:
        return {"builtin": section["builtin"], "params": dict(section.get("params") or {})}
    if "spec" in section:
        path = section["spec"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return {"inline": load_yaml(path)}
    return {"inline": copy.deepcopy(section["inline"])}


def build_model(doc: dict) -> tuple[HoppingSpec, MagneticFlux]:
    if "builtin" in doc:
        return builtin(doc["builtin"], **doc.get("params", {}))
    return spec_from_dict(doc["inline"])


def set_parameter(doc: dict, path: str, value: float) -> dict:
    """Copy of a normalized model document with one parameter replaced.

    For builtin models ``path`` names a builder argument (``m``, ``disorder``,
    optionally prefixed ``params.``).  For spec documents it is a dotted path
    into the document, e.g. ``disorder_amplitude`` or ``hops.0.constant.0.0``
    (a matrix entry, set to the real number ``value``).
    """
    out = copy.deepcopy(doc)
    if "builtin" in out:
        key = path[len("params."):] if path.startswith("params.") else path
        out["params"][key] = value
        return out
    node: Any = out["inline"]
    parts = path.split(".")
    try:
        for p in parts[:-1]:
            node = node[int(p)] if isinstance(node, list) else node[p]
        last = parts[-1]
        if isinstance(node, list):
            idx = int(last)
            node[idx] = [float(value), 0.0] if isinstance(node[idx], list) else value
        else:
            if last not in node:
                raise KeyError(last)
            node[last] = value
    except (KeyError, IndexError, ValueError, TypeError):
        raise ConfigurationError(f"parameter path {path!r} not found in spec") from None
    return out
