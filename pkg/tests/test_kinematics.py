import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinebench.errors import UnknownActivity, UnknownMarker
from kinebench.kinematics import (
    AngleDefinition,
    AngleSeries,
    angle_definition,
    builtin_activity_angle_map,
    builtin_angle_definitions,
    frames_to_time,
    joint_angle,
    load_angle_config,
)
from kinebench.skeleton import CANONICAL_JOINTS, JointSet, PoseSequence
from kinebench.testkit import SynthSpec, synth_pose

ELBOW_R = AngleDefinition("elbow_flex_r", "right_shoulder", "right_elbow", "right_elbow", "right_wrist")


def pose_with(points: dict, n_frames=1):
    """Canonical pose, all joints at distinct dummy spots, overridden by ``points``."""
    frames = np.zeros((n_frames, 17, 3))
    for i in range(17):
        frames[:, i] = (i, 2 * i, 3 * i)
    for name, p in points.items():
        frames[:, CANONICAL_JOINTS.index(name)] = p
    return PoseSequence(JointSet(CANONICAL_JOINTS), frames, 30.0)


def test_builtin_definitions():
    defs = builtin_angle_definitions()
    assert len(defs) == 6
    assert angle_definition("elbow_flex_r").markers == ("right_shoulder", "right_elbow", "right_elbow", "right_wrist")
    assert angle_definition("knee_angle_l").markers == ("left_hip", "left_knee", "left_knee", "left_ankle")
    assert angle_definition("arm_flex_r").markers == ("right_shoulder", "right_elbow", "neck", "torso")


def test_activity_map():
    amap = builtin_activity_angle_map()
    assert len(amap) == 13
    assert amap["A01"] == amap["A03"] == "knee_angle_l"
    assert amap["A02"] == amap["A04"] == "knee_angle_r"
    assert amap["A06"] == "elbow_flex_l"
    assert amap["A05"] == amap["A09"] == "elbow_flex_r"
    assert amap["A08"] == amap["A12"] == "arm_flex_l"
    assert all(amap[a] == "arm_flex_r" for a in ("A07", "A10", "A11", "A13"))
    with pytest.raises(UnknownActivity):
        amap["A99"]


def test_definition_invariants():
    with pytest.raises(UnknownMarker):
        AngleDefinition("x", "right_shoulder", "elbow_tip", "neck", "torso")
    with pytest.raises(ValueError):
        AngleDefinition("x", "neck", "neck", "neck", "torso")


def test_right_angle():
    seq = pose_with({"right_shoulder": (0, 0, 0), "right_elbow": (1, 0, 0), "right_wrist": (1, 1, 0)})
    assert joint_angle(seq, ELBOW_R).values[0] == pytest.approx(90.0, abs=1e-12)


@pytest.mark.parametrize("method", ["atan2", "arccos"])
def test_collinear(method):
    straight = pose_with({"right_shoulder": (0, 0, 0), "right_elbow": (1, 0, 0), "right_wrist": (2, 0, 0)})
    folded = pose_with({"right_shoulder": (0, 0, 0), "right_elbow": (1, 0, 0), "right_wrist": (0.5, 0, 0)})
    assert joint_angle(straight, ELBOW_R, method=method).values[0] == pytest.approx(0.0, abs=1e-6)
    assert joint_angle(folded, ELBOW_R, method=method).values[0] == pytest.approx(180.0, abs=1e-6)
    assert not np.isnan(joint_angle(straight, ELBOW_R, method=method).values).any()


def test_sinusoidal_knee_matches_analytic():
    pose, theta = synth_pose(SynthSpec("sinusoid_knee", 30.0, 0.5, 10.0, 30.0, seed=4))
    out = joint_angle(pose, angle_definition("knee_angle_l"))
    assert out.sample_rate_hz == 30.0
    assert np.max(np.abs(out.values - theta.values)) < 1e-9


def test_methods_agree_away_from_extremes():
    pose, theta = synth_pose(SynthSpec("sinusoid_elbow", 60.0, 1.0, 3.0, 30.0, seed=2))
    a = joint_angle(pose, ELBOW_R, method="atan2").values
    b = joint_angle(pose, ELBOW_R, method="arccos").values
    assert np.max(np.abs(a - b)) < 1e-6


def test_invalid_and_degenerate_samples():
    seq = pose_with({"right_shoulder": (0, 0, 0), "right_elbow": (1, 0, 0), "right_wrist": (1, 1, 0)}, n_frames=3)
    frames = np.array(seq.frames)
    validity = np.array(seq.validity)
    validity[0, CANONICAL_JOINTS.index("right_wrist")] = False
    frames[2, CANONICAL_JOINTS.index("right_wrist")] = frames[2, CANONICAL_JOINTS.index("right_elbow")]
    out = joint_angle(PoseSequence(seq.joint_set, frames, 30.0, validity), ELBOW_R)
    assert out.validity.tolist() == [False, True, False]
    assert out.values[1] == pytest.approx(90.0)


def test_unknown_marker():
    seq = PoseSequence(JointSet(("a", "b", "c")), np.zeros((1, 3, 3)), 30.0)
    with pytest.raises(UnknownMarker):
        joint_angle(seq, ELBOW_R)


def test_frames_to_time():
    s30 = AngleSeries(np.zeros(100), 30.0)
    t, v = frames_to_time(s30)
    assert t[90] == 3.0 and t[0] == 0.0
    assert v is s30.values
    t50, _ = frames_to_time(AngleSeries(np.zeros(60), 50.0))
    assert t50[50] == 1.0


def test_angle_config_override(tmp_path):
    cfg = tmp_path / "angles.txt"
    cfg.write_text("# custom\nhip_flex_l: torso, pelvis, left_hip, left_knee\nA01: hip_flex_l\nA14: elbow_flex_l\n")
    amap = load_angle_config(cfg)
    assert amap["A01"] == "hip_flex_l"
    assert amap["A14"] == "elbow_flex_l"
    assert amap["A13"] == "arm_flex_r"
    assert amap.definition_for("A01").markers == ("torso", "pelvis", "left_hip", "left_knee")


# ---------------------------------------------------------------- properties

finite = st.floats(-10, 10, allow_nan=False)
vec = st.tuples(finite, finite, finite)


def _rigid(seed):
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    return q * np.sign(np.diag(r)), rng.uniform(-5, 5, 3), rng.uniform(0.1, 10)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["sinusoid_knee", "sinusoid_elbow"]))
def test_rigid_and_scale_invariance(seed, motion):
    pose, _ = synth_pose(SynthSpec(motion, 45.0, 0.7, 2.0, 30.0, seed=seed % 1000))
    rot, shift, scale = _rigid(seed)
    moved = PoseSequence(pose.joint_set, scale * pose.frames @ rot.T + shift, pose.frame_rate_hz)
    for d in builtin_angle_definitions():
        a = joint_angle(pose, d).values
        b = joint_angle(moved, d).values
        assert np.max(np.abs(a - b)) < 1e-9


@given(vec, vec, vec, vec)
def test_range_symmetry_and_negation(p1, p2, p3, p4):
    pts = np.array([p1, p2, p3, p4], dtype=float)
    v1, v2 = pts[1] - pts[0], pts[3] - pts[2]
    if np.linalg.norm(v1) < 1e-3 or np.linalg.norm(v2) < 1e-3:
        return
    names = ("torso", "neck", "left_hip", "left_knee")
    frames = np.zeros((1, 17, 3))
    for n, p in zip(names, pts):
        frames[0, CANONICAL_JOINTS.index(n)] = p
    seq = PoseSequence(JointSet(CANONICAL_JOINTS), frames, 30.0)
    theta = joint_angle(seq, AngleDefinition("a", *names)).values[0]
    assert 0.0 <= theta <= 180.0
    swapped = joint_angle(seq, AngleDefinition("b", names[2], names[3], names[0], names[1])).values[0]
    assert swapped == pytest.approx(theta, abs=1e-9)
    negated = joint_angle(seq, AngleDefinition("c", names[1], names[0], names[2], names[3])).values[0]
    assert negated == pytest.approx(180.0 - theta, abs=1e-9)
