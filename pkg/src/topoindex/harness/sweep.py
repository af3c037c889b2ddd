"""Seeded Monte Carlo sweeps, convergence studies and CSV output."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, FitError
from ..invariants import aggregate
from ..io import build_model, set_parameter
from ..lattice import FiniteGeometry
from ..localization import combine_moments, fit_decay
from .calibrate import calibration_id
from .config import SweepConfig
from .tasks import Task, canonical_kind, evaluate_task

SEED_STRIDE = 10 ** 6

COLUMNS = ["point", "parameter", "value", "model_id", "model", "d", "invariant_kind",
           "L", "depth", "seed_count", "raw", "nearest", "deviation", "std", "quality",
           "flags", "calibration_id", "runtime_s"]


def point_seed(base_seed: int, point_index: int, replica: int) -> int:
    return base_seed + point_index * SEED_STRIDE + replica


def build_tasks(config: SweepConfig) -> list[Task]:
    tasks = []
    for pi, value in enumerate(config.values):
        doc = config.model if config.parameter is None else \
            set_parameter(config.model, config.parameter, value)
        spec, _ = build_model(doc)
        # a clean model has a single realization whatever the seed count
        replicas = config.seeds if spec.disorder_amplitude > 0 else 1
        for size in config.sizes:
            for r in range(replicas):
                seed = point_seed(config.base_seed, pi, r) if spec.disorder_amplitude > 0 else None
                tasks.append(Task(pi, r, seed, size, doc, tuple(config.invariants),
                                  dict(config.options)))
    return tasks


def execute(tasks: Sequence[Task], threads: int = 1) -> list:
    """Evaluate tasks serially or on a process pool; output order = input order."""
    if threads <= 1:
        return [evaluate_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(evaluate_task, tasks, chunksize=1))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_sweep(config: SweepConfig, threads: int = 1, out: Optional[str] = None) -> list[dict]:
    """Run every (point, size, seed) task and aggregate one row per (point, size, kind).

    Seeds are ``base_seed + point_index * 10**6 + replica``.  Rows with an
    unconverged invariant are flagged, never dropped.
    """
    tasks = build_tasks(config)
    outcomes = execute(tasks, threads)
    calib = calibration_id(config.calibration)
    groups: dict = {}
    for task, oc in zip(tasks, outcomes):
        groups.setdefault((oc.point_index, oc.size), []).append((task, oc))
    rows = []
    for (pi, size), members in sorted(groups.items()):
        doc = members[0][0].model
        spec, _ = build_model(doc)
        d = spec.dimension
        seeds = [t.seed for t, _ in members]
        for kind in config.invariants:
            name = canonical_kind(kind, d)
            runtime = float(sum(oc.runtimes[name] for _, oc in members))
            row = {"point": pi, "parameter": config.parameter or "",
                   "value": config.values[pi], "model_id": spec.fingerprint(),
                   "model": spec.name, "d": d, "invariant_kind": name, "L": size,
                   "depth": "", "seed_count": len(members), "raw": None, "nearest": None,
                   "deviation": None, "std": None, "quality": None, "flags": "",
                   "calibration_id": calib,
                   "runtime_s": round(runtime, 3) if config.record_runtime else None}
            if name.startswith("boundary"):
                row["depth"] = config.options["depth"] or size
            if name == "decay":
                opts = config.options
                geom = FiniteGeometry.box((size,) * d)
                prof = combine_moments([oc.values[name] for _, oc in members],
                                       opts["mu"] + 1j * opts["eta"], opts["s"], geom,
                                       [s or 0 for s in seeds])
                flags = set(prof.flags)
                try:
                    fit = fit_decay(prof, opts["fit_window"])
                    row.update(raw=fit.rate, std=fit.rate_stderr, quality=fit.quality)
                    if fit.quality < 0.8:
                        flags.add("poor_fit")
                except FitError:
                    flags.add("fit_failed")
                row["flags"] = ";".join(sorted(flags))
            elif name == "gap":
                vals = [oc.values[name] for _, oc in members]
                row.update(raw=float(np.mean(vals)),
                           std=float(np.std(vals)) if len(vals) > 1 else 0.0)
            else:
                res = aggregate([oc.values[name] for _, oc in members])
                row.update(raw=res.raw, nearest=res.nearest, deviation=res.deviation,
                           std=res.std, flags=";".join(sorted(res.flags)))
            rows.append(row)
    target = out or config.output
    if target:
        write_rows(rows, target)
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in COLUMNS])
    return buf.getvalue()


def write_rows(rows: Sequence[dict], path: str):
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def convergence_study(model: dict, sizes: Sequence[int], seeds: int = 1, kind: str = "bulk",
                      options: Optional[dict] = None, base_seed: int = 0,
                      threads: int = 1) -> list[dict]:
    """Deviation from the nearest integer versus system size.

    Adds a ``nonmonotone`` flag to any size whose deviation exceeds the
    previous one by more than twice their combined seed standard error, and
    ``unconverged`` (from the invariant) where the deviation is above 0.1.
    """
    if len(sizes) < 3:
        raise ConfigurationError("a convergence study needs at least 3 sizes")
    if kind in ("decay", "gap"):
        raise ConfigurationError("convergence studies apply to quantized invariants only")
    config = SweepConfig(model=model, sizes=sorted(int(s) for s in sizes), invariants=[kind],
                         seeds=seeds, base_seed=base_seed, record_runtime=False,
                         options=dict(options or {}))
    rows = run_sweep(config, threads)
    prev = None
    for row in rows:
        flags = set(filter(None, row["flags"].split(";")))
        if prev is not None:
            err = np.hypot(prev["std"], row["std"]) / np.sqrt(max(row["seed_count"], 1))
            if row["deviation"] > prev["deviation"] + 2 * err + 1e-8:
                flags.add("nonmonotone")
        row["flags"] = ";".join(sorted(flags))
        prev = row
    return rows
