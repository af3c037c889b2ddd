import csv
import io
import json

import pytest
import yaml

from topoindex.errors import ConfigurationError
from topoindex.harness import (SweepConfig, calibrate_sign, calibration_id, convergence_study,
                               load_calibration, run_sweep)
from topoindex.harness.calibrate import CalibrationWarning
from topoindex.harness.cli import main
from topoindex.harness.sweep import COLUMNS, build_tasks, point_seed, rows_to_csv


def qwz_config(**kw):
    base = dict(model={"builtin": "qwz", "params": {"m": 1.0, "disorder": 1.0}},
                sizes=[8], invariants=["bulk"], seeds=2, record_runtime=False)
    base.update(kw)
    return SweepConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        qwz_config(sizes=[])
    with pytest.raises(ConfigurationError):
        qwz_config(parameter="m", values=[1.0, 0.5, 2.0])
    with pytest.raises(ConfigurationError):
        qwz_config(parameter="m", values=[])
    with pytest.raises(ConfigurationError):
        qwz_config(invariants=["odd_chern"])
    with pytest.raises(ConfigurationError):
        qwz_config(invariants=["magic"])
    with pytest.raises(ConfigurationError):
        qwz_config(options={"bogus": 1})
    with pytest.raises(ConfigurationError):
        SweepConfig(model={"builtin": "anderson", "params": {"d": 1}}, sizes=[8],
                    invariants=["bulk"])
    with pytest.raises(ConfigurationError):
        SweepConfig.from_dict({"model": {"builtin": "qwz"}, "sizes": [8], "colour": "red"})


def test_seed_scheme():
    cfg = qwz_config(parameter="m", values=[0.5, 1.0], seeds=3, base_seed=7)
    seeds = [(t.point_index, t.seed) for t in build_tasks(cfg)]
    assert seeds == [(0, 7), (0, 8), (0, 9), (1, 1_000_007), (1, 1_000_008), (1, 1_000_009)]
    assert point_seed(7, 1, 2) == 1_000_009
    clean = qwz_config(model={"builtin": "qwz", "params": {"m": 1.0}}, seeds=5)
    assert [t.seed for t in build_tasks(clean)] == [None]


def test_sweep_rows_and_csv(tmp_path):
    cfg = qwz_config(parameter="m", values=[1.0, 3.0], invariants=["bulk", "gap", "decay"])
    rows = run_sweep(cfg, out=str(tmp_path / "out.csv"))
    assert len(rows) == 6
    bulk = [r for r in rows if r["invariant_kind"] == "even_chern"]
    assert [r["nearest"] for r in bulk] == [-1, 0]
    assert all(r["seed_count"] == 2 for r in rows)
    text = (tmp_path / "out.csv").read_text()
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert list(parsed[0]) == COLUMNS and len(parsed) == 6
    assert all(r["calibration_id"] == "uncalibrated" for r in parsed)
    assert rows_to_csv(run_sweep(cfg)) == text


def test_serial_equals_parallel():
    cfg = qwz_config(seeds=3)
    assert rows_to_csv(run_sweep(cfg, threads=1)) == rows_to_csv(run_sweep(cfg, threads=2))


def test_convergence_study():
    rows = convergence_study({"builtin": "qwz", "params": {"m": 1.0}}, [8, 12, 16])
    assert [r["L"] for r in rows] == [8, 12, 16]
    assert rows[-1]["deviation"] <= rows[0]["deviation"]
    with pytest.raises(ConfigurationError):
        convergence_study({"builtin": "qwz"}, [8, 12])


def test_boundary_and_index_kinds():
    cfg = SweepConfig(model={"builtin": "ssh", "params": {"t1": 0.3, "t2": 1.0}}, sizes=[24],
                      invariants=["bulk", "index", "boundary"], record_runtime=False)
    rows = run_sweep(cfg)
    assert [r["invariant_kind"] for r in rows] == ["odd_chern", "fredholm_unitary",
                                                   "boundary_even_chern"]
    assert [r["nearest"] for r in rows] == [1, 1, 1]
    assert rows[2]["depth"] == 24


@pytest.fixture(scope="module")
def calibration(tmp_path_factory):
    path = tmp_path_factory.mktemp("cal") / "calibration.json"
    return path, calibrate_sign(str(path))


def test_calibration_record(calibration):
    path, rec = calibration
    assert rec["sign"] == -1 and rec["tknn_sign"] == -1 and rec["nearest"] == -1
    assert load_calibration(str(path)) == rec
    assert calibration_id(str(path)) == rec["id"]
    assert calibrate_sign(str(path)) == rec


def test_corrupted_calibration(tmp_path, calibration):
    path, rec = calibration
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**rec, "sign": 1}))
    with pytest.warns(CalibrationWarning):
        assert load_calibration(str(bad)) is None
    bad.write_text("not json")
    with pytest.warns(CalibrationWarning):
        assert calibration_id(str(bad)) == "uncalibrated"


def test_cli_bulk_and_sweep(tmp_path, capsys):
    assert main(["bulk", "--model", "qwz", "--param", "m=1.0", "--size", "8"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split(",") == COLUMNS and len(out) == 2
    cfg = {"model": {"builtin": "qwz", "params": {"disorder": 0.5}}, "sizes": [8],
           "seeds": 2, "invariants": ["bulk"], "record_runtime": False,
           "sweep": {"parameter": "m", "values": [1.0, 2.5]}, "output": "sweep.csv"}
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(cfg))
    assert main(["sweep", "--config", str(tmp_path / "c.yaml")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert [r["nearest"] for r in rows] == ["-1", "0"]


def test_cli_other_commands(tmp_path, capsys):
    assert main(["index", "--model", "ssh", "--param", "t1=0.3", "--size", "24"]) == 0
    assert main(["boundary", "--model", "ssh", "--param", "t1=0.3", "--size", "24",
                 "--out", str(tmp_path / "b.csv")]) == 0
    assert main(["converge", "--model", "qwz", "--size", "8,10,12", "--kind", "bulk"]) == 0
    assert main(["localize", "--model", "anderson", "--param", "disorder=4.0",
                 "--size", "32,48", "--seeds", "4", "--out", str(tmp_path / "loc.csv")]) == 0
    out = capsys.readouterr().out
    assert "classification:" in out
    assert (tmp_path / "loc_L32.csv").exists() and (tmp_path / "loc_L48.json").exists()


def test_cli_errors(tmp_path, capsys):
    assert main(["bulk", "--model", "nope"]) == 2
    assert main(["bulk"]) == 2
    assert main(["sweep", "--config", str(tmp_path / "missing.yaml")]) == 2
    (tmp_path / "bad.yaml").write_text("model: [unclosed")
    assert main(["sweep", "--config", str(tmp_path / "bad.yaml")]) == 2
    assert "error:" in capsys.readouterr().err
