"""Command-line entry point: ``topoindex <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

import yaml

from ..errors import ConfigurationError
from ..io import build_model, load_yaml
from ..lattice import FiniteGeometry
from ..localization import classify_energy, fit_decay, resolvent_moments
from .calibrate import calibrate_sign
from .config import SweepConfig
from .sweep import convergence_study, point_seed, rows_to_csv, run_sweep, write_rows

log = logging.getLogger("topoindex")


def _sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def _keyval(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, val = text.split("=", 1)
    return key.strip(), yaml.safe_load(val)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML config with a model section (and sweep settings)")
    p.add_argument("--out", help="output path (CSV)")
    p.add_argument("--seeds", type=int, help="disorder realizations per point")
    p.add_argument("--size", type=_sizes, help="linear size(s), comma separated")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--model", help="builtin model name (instead of --config)")
    p.add_argument("--param", type=_keyval, action="append", default=[],
                   help="builtin model parameter key=value (repeatable)")
    p.add_argument("--option", type=_keyval, action="append", default=[],
                   help="evaluation option key=value, e.g. mu=0.0 (repeatable)")
    p.add_argument("--calibration", help="calibration record to stamp into results")


def _load_doc(args) -> tuple[dict, str]:
    if args.config:
        doc = load_yaml(args.config)
        if not isinstance(doc, dict):
            raise ConfigurationError("config must be a mapping")
        base = os.path.dirname(os.path.abspath(args.config))
    elif args.model:
        doc, base = {"model": {"builtin": args.model}}, os.getcwd()
    else:
        raise ConfigurationError("either --config or --model is required")
    doc = dict(doc)
    if args.model and args.config:
        raise ConfigurationError("use either --config or --model, not both")
    if args.param:
        model = dict(doc["model"])
        if "builtin" not in model:
            raise ConfigurationError("--param applies to builtin models only")
        model["params"] = {**(model.get("params") or {}), **dict(args.param)}
        doc["model"] = model
    if args.option:
        doc["options"] = {**(doc.get("options") or {}), **dict(args.option)}
    if args.size:
        doc["sizes"] = args.size
        doc.pop("size", None)
    if args.seeds is not None:
        doc["seeds"] = args.seeds
    if args.calibration:
        doc["calibration"] = os.path.abspath(args.calibration)
    return doc, base


def _config(args, kinds: Optional[list] = None, sweep: bool = False) -> SweepConfig:
    doc, base = _load_doc(args)
    if kinds is not None:
        doc["invariants"] = kinds
    if not sweep:
        doc.pop("sweep", None)
    doc.setdefault("sizes", [24])
    return SweepConfig.from_dict(doc, base)


def _emit(rows, out):
    if out:
        write_rows(rows, out)
        print(f"wrote {len(rows)} rows to {out}")
    else:
        sys.stdout.write(rows_to_csv(rows))


def cmd_single(args, kind):
    config = _config(args, [kind])
    rows = run_sweep(config, args.threads)
    _emit(rows, args.out)


def cmd_sweep(args):
    config = _config(args, sweep=True)
    rows = run_sweep(config, args.threads)
    _emit(rows, args.out or config.output)


def cmd_converge(args):
    config = _config(args)
    kind = args.kind or config.invariants[0]
    rows = convergence_study(config.model, config.sizes, config.seeds, kind,
                             {k: v for k, v in config.options.items()},
                             config.base_seed, args.threads)
    _emit(rows, args.out)


def cmd_localize(args):
    config = _config(args, ["decay"])
    spec, flux = build_model(config.model)
    opts = config.options
    z = opts["mu"] + 1j * opts["eta"]
    fits = []
    for size in config.sizes:
        geometry = FiniteGeometry.box((size,) * spec.dimension)
        n = config.seeds if spec.disorder_amplitude > 0 else 1
        seeds = [point_seed(config.base_seed, 0, r) for r in range(n)]
        prof = resolvent_moments(spec, flux, geometry, z, opts["s"], seeds, keep_spectrum=True)
        fit = fit_decay(prof, opts["fit_window"])
        fits.append(fit)
        rec = fit.to_record()
        rec["flags"] = sorted(prof.flags)
        rec["spectrum_range"] = [float(prof.spectrum[0]), float(prof.spectrum[-1])]
        if args.out:
            stem, ext = os.path.splitext(args.out)
            path = args.out if len(config.sizes) == 1 else f"{stem}_L{size}{ext or '.csv'}"
            prof.to_csv(path)
            with open(os.path.splitext(path)[0] + ".json", "w") as fh:
                json.dump(rec, fh, indent=2, sort_keys=True)
                fh.write("\n")
        print(json.dumps(rec, sort_keys=True))
    if len(fits) >= 2:
        print(f"classification: {classify_energy(fits)}")


def cmd_calibrate(args):
    rec = calibrate_sign(args.out or "calibration.json", size=(args.size or [24])[0])
    print(json.dumps(rec, indent=2, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoindex",
        description="Real-space topological invariants and localization probes "
                    "for disordered tight-binding models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "bulk": "bulk Chern number (even d) or winding-type odd Chern number (odd d)",
        "boundary": "boundary invariant on a half-space slab",
        "index": "Fredholm index via Fedosov traces",
        "localize": "fractional resolvent moments and exponential decay fit",
        "sweep": "parameter sweep from a config file",
        "converge": "deviation from quantization versus system size",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "converge":
            p.add_argument("--kind", help="invariant kind (default: first in config)")
    p = sub.add_parser("calibrate", help="orientation calibration against the Hofstadter reference")
    p.add_argument("--out", help="calibration record path (default calibration.json)")
    p.add_argument("--size", type=_sizes, help="reference system size")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("bulk", "boundary", "index"):
            cmd_single(args, args.command)
        elif args.command == "sweep":
            cmd_sweep(args)
        elif args.command == "converge":
            cmd_converge(args)
        elif args.command == "localize":
            cmd_localize(args)
        else:
            cmd_calibrate(args)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
