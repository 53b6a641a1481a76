import csv

import pytest

from gatesim import ScenarioConfig, dump
from gatesim.cli import main
from gatesim.io import RESULT_COLUMNS, SUMMARY_COLUMNS


@pytest.fixture
def cheap(tmp_path):
    cfg = ScenarioConfig(num_ues=2, mean_file_bytes=5e7, rng_seed=100).replace(
        gate_geometry__width_m=1.0, gate_geometry__exit=(1.0, 5.0))
    path = tmp_path / "cheap.toml"
    dump(cfg, path)
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_defaults():
    assert main(["validate"]) == 0


def test_validate_reports_fields(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario]\nnum_ues = 0\nslot_s = -1.0\n")
    assert main(["validate", "--config", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "num_ues" in err and "slot_s" in err


def test_unknown_key_is_config_error(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario]\nnum_gates = 2\n")
    assert main(["validate", "--config", str(bad)]) == 1


def test_missing_file_is_io_error(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "absent.toml")]) == 2


def test_sweep_grid_count(cheap, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(cheap), "--aps", "1,2,3,4", "--grt", "0.5,1,1.5,2",
                 "--seeds", "20", "--out", str(out)]) == 0
    rows = _rows(out / "results.csv")
    summary = _rows(out / "summary.csv")
    assert len(rows) == 320 and len(summary) == 16
    assert tuple(rows[0]) == RESULT_COLUMNS and tuple(summary[0]) == SUMMARY_COLUMNS
    assert {int(r["count"]) for r in summary} == {20}
    for r in rows:
        assert 0.0 <= float(r["gofe"]) <= 1.0
        assert 0.0 <= float(r["norm_energy"]) <= 1.0 + 1e-12
    manifest = (out / "manifest.txt").read_text()
    assert "seeds = " + ",".join(str(100 + i) for i in range(20)) in manifest
    assert "[scenario]" in manifest


def test_run_twice_identical(cheap, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["run", "--config", str(cheap), "--seed", "9", "--out", str(out)]) == 0
    for name in ("results.csv", "summary.csv", "events.csv", "manifest.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_row_reproducible_from_manifest(cheap, tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(cheap), "--aps", "4", "--grt", "0.5", "--seeds", "2",
                 "--out", str(out)]) == 0
    row = _rows(out / "results.csv")[1]
    again = tmp_path / "again"
    assert main(["run", "--config", str(cheap), "--seed", row["seed"], "--out", str(again)]) == 0
    # the single run uses the file's own AP count and GRT, which match this sweep point
    assert _rows(again / "results.csv")[0] == row


def test_parallel_matches_serial(cheap, tmp_path):
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"j{jobs}"
        assert main(["fairness", "--config", str(cheap), "--schedulers", "wpf,rr", "--speed-ratios", "1,4",
                     "--aps", "2", "--grt", "0.5", "--seeds", "2", "--jobs", jobs, "--out", str(out)]) == 0
        outs.append(out)
    assert (outs[0] / "results.csv").read_bytes() == (outs[1] / "results.csv").read_bytes()
    assert len(_rows(outs[0] / "summary.csv")) == 4


def test_output_dir_from_environment(cheap, tmp_path, monkeypatch):
    monkeypatch.setenv("GATESIM_OUT", str(tmp_path / "env"))
    assert main(["run", "--config", str(cheap)]) == 0
    assert (tmp_path / "env" / "results.csv").exists()


def test_bad_scheduler_list(capsys):
    with pytest.raises(SystemExit):
        main(["fairness", "--schedulers", "wpf,best"])
