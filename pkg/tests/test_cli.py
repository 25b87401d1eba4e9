import json
from dataclasses import replace

import numpy as np
import pytest

from kinebench.cli import main
from kinebench.report import read_records_csv, write_records_csv
from kinebench.skeleton import CANONICAL_JOINTS


@pytest.fixture
def fixture_dir(tmp_path):
    assert main(["synth", str(tmp_path / "fx"), "--preset", "standard"]) == 0
    return tmp_path / "fx"


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "run_log.json"}


def test_run_standard(fixture_dir, capsys):
    assert main(["run", str(fixture_dir / "manifest.json")]) == 0
    out = fixture_dir / "results"
    recs = {r.model: r for r in read_records_csv(out / "records.csv")}
    assert set(recs) == {"clean", "noisy", "lagged", "noisy_lagged"}
    assert recs["lagged"].offset == 7 and recs["clean"].offset == 0
    assert (out / "overlay_S01_A01.svg").exists()
    log = json.loads((out / "run_log.json").read_text())
    assert [t["status"] for t in log["trials"]] == ["ok"] * 4
    assert log["config"]["filter_config"]["median_window"] == 5
    assert "4/4 trials ok" in capsys.readouterr().out


def test_run_is_deterministic_across_jobs(fixture_dir, tmp_path):
    m = str(fixture_dir / "manifest.json")
    assert main(["run", m, "--output-dir", str(tmp_path / "a")]) == 0
    assert main(["--jobs", "2", "run", m, "--output-dir", str(tmp_path / "b")]) == 0
    assert main(["run", m, "--jobs", "3", "--output-dir", str(tmp_path / "c")]) == 0
    a = outputs(tmp_path / "a")
    assert a == outputs(tmp_path / "b") == outputs(tmp_path / "c")


def test_run_one_bad_trial(fixture_dir):
    (fixture_dir / "S01_A01_noisy.csv").write_text("frame,oops\n0,1\n")
    assert main(["run", str(fixture_dir / "manifest.json")]) == 0
    out = fixture_dir / "results"
    assert len(read_records_csv(out / "records.csv")) == 3
    log = json.loads((out / "run_log.json").read_text())
    bad = [t for t in log["trials"] if t["status"] == "failed"]
    assert [t["model_name"] for t in bad] == ["noisy"]
    assert "MalformedHeader" in bad[0]["error"]


def test_run_all_bad_or_empty(fixture_dir, tmp_path):
    for p in fixture_dir.glob("*.csv"):
        p.write_text("frame,oops\n0,1\n")
    assert main(["run", str(fixture_dir / "manifest.json")]) != 0
    empty = tmp_path / "empty.json"
    empty.write_text('{"trials": []}')
    assert main(["run", str(empty)]) != 0


def test_run_bad_manifest(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text('{"trials": [{"subject_id": 1}]}')
    assert main(["run", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_report_rebuilds_tables(fixture_dir, tmp_path):
    assert main(["run", str(fixture_dir / "manifest.json")]) == 0
    res = fixture_dir / "results"
    assert main(["report", str(res / "records.csv"), str(tmp_path / "rep")]) == 0
    for name in ("summary_overall_per_model.md", "summary_per_activity_per_model.csv", "A01_rmse.svg"):
        assert (res / name).read_bytes() == (tmp_path / "rep" / name).read_bytes()
    recs = read_records_csv(res / "records.csv")
    more = recs + [replace(r, subject_id="S02", rmse=r.rmse + 1.0) for r in recs]
    two = write_records_csv(more, tmp_path / "two.csv")
    assert main(["report", str(two), str(tmp_path / "pop")]) == 0
    assert main(["report", str(two), str(tmp_path / "smp"), "--sample-std"]) == 0
    pop = (tmp_path / "pop" / "summary_overall_per_model.md").read_text()
    smp = (tmp_path / "smp" / "summary_overall_per_model.md").read_text()
    assert "0.50" in pop and "0.71" in smp


def test_report_needs_output(fixture_dir):
    assert main(["report", str(fixture_dir / "nothing.csv")]) == 2


def test_convert_and_angles(tmp_path, rng):
    names = [("thorax" if j == "neck" else j) for j in CANONICAL_JOINTS]
    src = tmp_path / "native.csv"
    rows = [",".join(["frame"] + [f"{n}_{a}" for n in names for a in "xyz"])]
    for i, f in enumerate(rng.normal(size=(6, 17 * 3))):
        rows.append(",".join([str(i)] + [repr(float(v)) for v in f]))
    src.write_text("\n".join(rows) + "\n")
    canon = tmp_path / "canon.csv"
    assert main(["convert", str(src), str(canon), "--kind", "h36m17_generic"]) == 0
    assert canon.read_text().startswith("frame,pelvis_x")
    ang = tmp_path / "ang.csv"
    assert main(["angles", str(canon), str(ang), "--activity", "A01"]) == 0
    lines = ang.read_text().splitlines()
    assert lines[0] == "time_s,angle_deg" and len(lines) == 7
    vals = np.array([float(x.split(",")[1]) for x in lines[1:]])
    assert ((vals >= 0) & (vals <= 180)).all()
    assert main(["angles", str(canon), str(ang), "--activity", "A99"]) == 2
    assert main(["convert", str(src), str(canon), "--kind", "nope"]) == 2


def test_synth_single(tmp_path):
    d = tmp_path / "s"
    args = ["synth", str(d), "--motion", "sinusoid_elbow", "--lag", "-4", "--noise", "0.2", "--radians"]
    assert main(args) == 0
    assert main(["run", str(d / "manifest.json")]) == 0
    rec = read_records_csv(d / "results" / "records.csv")[0]
    assert rec.activity_id == "A05" and rec.offset == -4


def test_synth_rejects_bad_lag(tmp_path):
    assert main(["synth", str(tmp_path / "s"), "--lag", "20"]) == 2
