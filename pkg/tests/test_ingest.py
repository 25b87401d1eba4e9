import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinebench.errors import (
    ColumnCountMismatch,
    MalformedHeader,
    MissingEndHeader,
    NoFrames,
    NonMonotonicTime,
    NonNumericCell,
    RaggedRow,
    RowCountMismatch,
    SchemaError,
    UnknownActivity,
    UnknownColumn,
    UnknownModelKind,
    UnresolvablePath,
)
from kinebench.ingest import (
    convert_model_output,
    extract_imu_angle,
    load_manifest,
    read_mot,
    read_pose_csv,
    write_pose_csv,
)
from kinebench.skeleton import CANONICAL_JOINTS, JointSet, PoseSequence, canonical_joint_set
from kinebench.testkit import write_mot


def random_pose(rng, t=12, joints=CANONICAL_JOINTS, holes=0.1):
    frames = rng.normal(size=(t, len(joints), 3)) * 100
    validity = rng.random((t, len(joints))) > holes
    frames[~validity] = np.nan
    return PoseSequence(JointSet(tuple(joints)), frames, 30.0, validity)


def write_native(path, names, frames):
    header = ["frame"] + [f"{n}_{a}" for n in names for a in "xyz"]
    lines = [",".join(header)]
    for i, f in enumerate(frames):
        lines.append(",".join([str(i)] + [repr(float(v)) for v in f.reshape(-1)]))
    path.write_text("\n".join(lines) + "\n")


# ------------------------------------------------------------ pose CSV

def test_pose_csv_round_trip(tmp_path, rng):
    seq = random_pose(rng)
    back = read_pose_csv(write_pose_csv(seq, tmp_path / "p.csv"))
    assert back.joint_set == seq.joint_set
    assert np.array_equal(back.validity, seq.validity)
    assert np.array_equal(back.frames[seq.validity], seq.frames[seq.validity])


@settings(max_examples=25)
@given(st.integers(0, 2**31), st.integers(1, 20), st.floats(0, 0.9))
def test_pose_csv_round_trip_property(tmp_path_factory, seed, t, holes):
    seq = random_pose(np.random.default_rng(seed), t=t, holes=holes)
    back = read_pose_csv(write_pose_csv(seq, tmp_path_factory.mktemp("rt") / "p.csv"))
    assert np.array_equal(back.validity, seq.validity)
    assert np.max(np.abs(np.nan_to_num(back.frames - seq.frames)), initial=0) <= 1e-9


def test_pose_csv_empty_cell_is_invalid(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("frame,a_x,a_y,a_z,b_x,b_y,b_z\n0,1,2,3,4,5,6\n1,1,,3,4,5,6\n")
    seq = read_pose_csv(p)
    assert seq.validity.tolist() == [[True, True], [False, True]]
    assert seq.frames[0, 1].tolist() == [4, 5, 6]


def test_pose_csv_without_frame_column(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("a_x,a_y,a_z\n1,2,3\n")
    assert read_pose_csv(p).frames.tolist() == [[[1, 2, 3]]]


def test_pose_csv_expected_joint_order(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("b_x,b_y,b_z,a_x,a_y,a_z\n1,2,3,4,5,6\n")
    seq = read_pose_csv(p, expected_joint_set=JointSet(("a", "b")))
    assert seq.frames[0].tolist() == [[4, 5, 6], [1, 2, 3]]
    with pytest.raises(MalformedHeader):
        read_pose_csv(p, expected_joint_set=JointSet(("a", "c")))


@pytest.mark.parametrize(
    "text, exc",
    [
        ("", MalformedHeader),
        ("frame,a_x,a_y\n0,1,2\n", MalformedHeader),
        ("frame,a_q,a_y,a_z\n0,1,2,3\n", MalformedHeader),
        ("frame,a_x,a_y,a_z\n", NoFrames),
        ("frame,a_x,a_y,a_z\n0,1,2\n", RaggedRow),
    ],
)
def test_pose_csv_errors(tmp_path, text, exc):
    p = tmp_path / "p.csv"
    p.write_text(text)
    with pytest.raises(exc):
        read_pose_csv(p)


def test_pose_csv_line_endings(tmp_path, rng):
    data = (write_pose_csv(random_pose(rng, t=3), tmp_path / "p.csv")).read_bytes()
    assert b"\r" not in data


# ------------------------------------------------------------ .mot

MOT = """Coordinates
version=1
nRows=3
nColumns=3
inDegrees=yes
endheader
time\tknee_angle_l\telbow_flex_r
0.00\t10.0\t20.0
0.02\t11.0\t21.5
0.04\t12.0\tnan
"""


def test_read_mot(tmp_path):
    p = tmp_path / "a.mot"
    p.write_text(MOT)
    tab = read_mot(p)
    assert tab.column_names == ("time", "knee_angle_l", "elbow_flex_r")
    assert tab.time.tolist() == [0.0, 0.02, 0.04]
    s = extract_imu_angle(tab, "elbow_flex_r")
    assert s.sample_rate_hz == 50.0 and s.provenance == "imu"
    assert s.validity.tolist() == [True, True, False]
    with pytest.raises(UnknownColumn):
        tab.column("nope")


def test_read_mot_space_delimited(tmp_path):
    p = tmp_path / "a.mot"
    p.write_text(MOT.replace("\t", "   "))
    assert read_mot(p).column("knee_angle_l").tolist() == [10, 11, 12]


def test_read_mot_radians(tmp_path):
    p = tmp_path / "a.mot"
    p.write_text(MOT.replace("inDegrees=yes", "inDegrees=no").replace("10.0", repr(math.pi / 2)))
    s = extract_imu_angle(read_mot(p), "knee_angle_l")
    assert s.values[0] == pytest.approx(90.0, abs=1e-12)


@pytest.mark.parametrize(
    "edit, exc",
    [
        (lambda t: t.replace("endheader\n", ""), MissingEndHeader),
        (lambda t: t.replace("nColumns=3", "nColumns=4"), ColumnCountMismatch),
        (lambda t: t.replace("nRows=3", "nRows=4"), RowCountMismatch),
        (lambda t: t.replace("11.0", "eleven"), NonNumericCell),
        (lambda t: t.replace("0.04", "0.01"), NonMonotonicTime),
        (lambda t: t.replace("\t21.5", ""), ColumnCountMismatch),
        (lambda t: t.replace("time\t", "t\t"), ColumnCountMismatch),
    ],
)
def test_read_mot_errors(tmp_path, edit, exc):
    p = tmp_path / "a.mot"
    p.write_text(edit(MOT))
    with pytest.raises(exc):
        read_mot(p)


def test_non_numeric_cell_reports_position(tmp_path):
    p = tmp_path / "a.mot"
    p.write_text(MOT.replace("11.0", "eleven"))
    with pytest.raises(NonNumericCell) as ei:
        read_mot(p)
    assert "eleven" in str(ei.value)


@pytest.mark.parametrize("deg", [True, False])
def test_mot_round_trip(tmp_path, rng, deg):
    t = np.arange(40) / 50.0
    cols = {"knee_angle_l": rng.normal(size=40) * 30, "elbow_flex_r": rng.normal(size=40)}
    tab = read_mot(write_mot(tmp_path / "r.mot", t, cols, in_degrees=deg))
    assert tab.in_degrees is deg
    assert np.max(np.abs(tab.time - t)) <= 1e-9
    for k, v in cols.items():
        assert np.max(np.abs(tab.column(k) - v)) <= 1e-9


# ------------------------------------------------------------ conversion

def test_convert_generic_with_alias(tmp_path, rng):
    names = [("neck_base" if j == "neck" else j) for j in CANONICAL_JOINTS]
    frames = rng.normal(size=(5, 17, 3))
    src = tmp_path / "native.csv"
    write_native(src, names, frames)
    out = tmp_path / "canon.csv"
    seq = convert_model_output(src, "h36m17_generic", out)
    assert seq.joint_set == canonical_joint_set()
    assert np.array_equal(seq.joint("neck"), frames[:, names.index("neck_base")])
    again = read_pose_csv(out)
    assert np.array_equal(again.frames, seq.frames)


def test_convert_is_idempotent(tmp_path, rng):
    src = tmp_path / "native.csv"
    write_native(src, CANONICAL_JOINTS, rng.normal(size=(4, 17, 3)))
    once = tmp_path / "once.csv"
    twice = tmp_path / "twice.csv"
    convert_model_output(src, "h36m17_generic", once)
    convert_model_output(once, "h36m17_generic", twice)
    assert once.read_bytes() == twice.read_bytes()


def test_convert_bodytrack(tmp_path, rng):
    from kinebench.skeleton import builtin_map_entries

    sources = sorted({s for s, _ in builtin_map_entries("bodytrack34")})
    extra = [f"extra_{i}" for i in range(34 - len(sources))]
    src = tmp_path / "bt.csv"
    write_native(src, sources + extra, rng.normal(size=(3, 34, 3)))
    seq = convert_model_output(src, "bodytrack34")
    assert len(seq.joint_set) == 16
    assert "head" not in seq.joint_set


def test_convert_unknown_kind(tmp_path):
    with pytest.raises(UnknownModelKind):
        convert_model_output(tmp_path / "x.csv", "no_such_model")


# ------------------------------------------------------------ manifest

def touch_inputs(d):
    (d / "p.csv").write_text("a_x,a_y,a_z\n1,2,3\n")
    (d / "i.mot").write_text(MOT)


def trial(**kw):
    t = dict(subject_id="S01", activity_id="A05", model_name="m", pose_file_path="p.csv", imu_file_path="i.mot")
    t.update(kw)
    return t


def write_manifest(d, doc):
    p = d / "manifest.json"
    p.write_text(json.dumps(doc))
    return p


def test_manifest_defaults(tmp_path):
    touch_inputs(tmp_path)
    m = load_manifest(write_manifest(tmp_path, {"trials": [trial()]}))
    t = m.trials[0]
    assert t.imu_rate_hz == 50.0 and t.video_rate_hz == 30.0
    assert t.imu_column_name == "elbow_flex_r"
    assert t.pose_file_path == tmp_path / "p.csv"
    assert m.output_dir == tmp_path / "results"
    assert (m.filter_config.median_window, m.filter_config.mavg_window) == (5, 5)
    assert (m.alignment_config.fit_window, m.alignment_config.max_offset) == (180, 15)
    json.dumps(m.snapshot())


def test_manifest_overrides(tmp_path):
    touch_inputs(tmp_path)
    doc = {
        "trials": [trial(imu_rate_hz=100, imu_column_name="knee_angle_l")],
        "filter_config": {"median_window": 3},
        "alignment_config": {"max_offset": 5},
        "std_ddof": 1,
    }
    m = load_manifest(write_manifest(tmp_path, doc))
    assert m.trials[0].imu_rate_hz == 100.0
    assert m.trials[0].imu_column_name == "knee_angle_l"
    assert m.filter_config.median_window == 3 and m.alignment_config.max_offset == 5
    assert m.std_ddof == 1


@pytest.mark.parametrize(
    "doc, exc, field",
    [
        ({"trials": [trial(activity_id="A99")]}, UnknownActivity, None),
        ({"trials": [trial(pose_file_path="missing.csv")]}, UnresolvablePath, None),
        ({"trials": [{"subject_id": "S01"}]}, SchemaError, "trials.0"),
        ({"trials": [trial(imu_rate_hz="fast")]}, SchemaError, "imu_rate_hz"),
        ({"trials": [], "bogus": 1}, SchemaError, "<root>"),
        ({"trials": [trial()], "filter_config": {"median_window": 4}}, SchemaError, "filter_config"),
    ],
)
def test_manifest_errors(tmp_path, doc, exc, field):
    touch_inputs(tmp_path)
    with pytest.raises(exc) as ei:
        load_manifest(write_manifest(tmp_path, doc))
    if field:
        assert field in str(ei.value)


def test_manifest_invalid_json(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        load_manifest(p)
