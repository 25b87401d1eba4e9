"""Synthetic skeletons with known joint angles, plus corruption operators.

The hinge joints are built in closed form so the angle the pipeline should
recover is known exactly: thigh and upper arm point straight down, and the
distal segment is rotated by the target angle in the sagittal plane. A
seeded rigid transform then places the whole skeleton somewhere arbitrary.

Randomness uses numpy's PCG64 bit generator seeded through SeedSequence, so
fixtures are reproducible across platforms for a given numpy major version.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np

from .kinematics import AngleSeries, video_provenance
from .skeleton import CANONICAL_JOINTS, JointSet, PoseSequence

MOTIONS = ("sinusoid_knee", "sinusoid_elbow", "constant_pose")

# hinge angle held by joints that are not animated
_REST_KNEE_DEG = 5.0
_REST_ELBOW_DEG = 20.0


@dataclass(frozen=True)
class SynthSpec:
    motion: str = "sinusoid_knee"
    amplitude_deg: float = 30.0
    frequency_hz: float = 0.5
    duration_s: float = 10.0
    rate_hz: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.motion not in MOTIONS:
            raise ValueError(f"motion must be one of {MOTIONS}")
        # amplitude 0 is allowed: it is the constant-angle degenerate case
        if not 0 <= self.amplitude_deg <= 90:
            raise ValueError("amplitude_deg must lie in [0, 90]")
        if not (self.frequency_hz > 0 and self.duration_s > 0 and self.rate_hz > 0):
            raise ValueError("frequency, duration and rate must be positive")

    @property
    def n_samples(self) -> int:
        return max(2, int(round(self.duration_s * self.rate_hz)))

    @property
    def angle_name(self) -> str:
        """Angle carrying the motion. The mirrored side moves identically."""
        return "elbow_flex_r" if self.motion == "sinusoid_elbow" else "knee_angle_l"


@dataclass(frozen=True)
class CorruptionSpec:
    """Noise is in degrees for angle series and in length units for poses."""

    noise_std_deg: float = 0.0
    dropout_prob: float = 0.0
    lag_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.noise_std_deg < 0:
            raise ValueError("noise_std_deg must be >= 0")
        if not 0 <= self.dropout_prob < 1:
            raise ValueError("dropout_prob must lie in [0, 1)")
        if abs(self.lag_samples) > 15:
            raise ValueError("|lag_samples| must be <= 15")


def analytic_angle(spec: SynthSpec, rate_hz: float | None = None, n_samples: int | None = None) -> np.ndarray:
    """90 + A sin(2 pi f t) sampled at ``rate_hz``; constant 90 for constant_pose."""
    rate = spec.rate_hz if rate_hz is None else rate_hz
    n = spec.n_samples if n_samples is None else n_samples
    t = np.arange(n) / rate
    if spec.motion == "constant_pose":
        return np.full(n, 90.0)
    return 90.0 + spec.amplitude_deg * np.sin(2 * np.pi * spec.frequency_hz * t)


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def pose_from_angles(
    knee_deg: np.ndarray,
    elbow_deg: np.ndarray,
    rate_hz: float,
    seed: int = 0,
    rigid: bool = True,
) -> PoseSequence:
    """Canonical skeleton whose knee and elbow hinges follow the given angles.

    Both sides share the same hinge angle. Segment lengths and the global
    rotation/translation are drawn from ``seed``; ``rigid=False`` keeps the
    local frame (x forward, y up, z right).
    """
    knee = np.radians(np.asarray(knee_deg, dtype=np.float64))
    elbow = np.radians(np.asarray(elbow_deg, dtype=np.float64))
    if knee.shape != elbow.shape:
        raise ValueError("knee and elbow angle arrays differ in length")
    n = knee.size
    rng = np.random.default_rng(seed)
    thigh, shank, upper, fore = rng.uniform(0.25, 0.5, size=4)

    def fixed(p):
        return np.tile(np.asarray(p, dtype=np.float64), (n, 1))

    def down(base, length):
        return base + length * np.array([0.0, -1.0, 0.0])

    def hinge(base, length, theta):
        # rotate the downward direction by theta towards +x
        return base + length * np.stack([np.sin(theta), -np.cos(theta), np.zeros_like(theta)], axis=1)

    j = {
        "pelvis": fixed([0.0, 1.0, 0.0]),
        "right_hip": fixed([0.0, 1.0, 0.1]),
        "left_hip": fixed([0.0, 1.0, -0.1]),
        "torso": fixed([0.0, 1.25, 0.0]),
        "neck": fixed([0.0, 1.5, 0.0]),
        "nose": fixed([0.08, 1.6, 0.0]),
        "head": fixed([0.0, 1.75, 0.0]),
        "right_shoulder": fixed([0.0, 1.45, 0.18]),
        "left_shoulder": fixed([0.0, 1.45, -0.18]),
    }
    for side in ("right", "left"):
        j[f"{side}_knee"] = down(j[f"{side}_hip"], thigh)
        j[f"{side}_ankle"] = hinge(j[f"{side}_knee"], shank, knee)
        j[f"{side}_elbow"] = down(j[f"{side}_shoulder"], upper)
        j[f"{side}_wrist"] = hinge(j[f"{side}_elbow"], fore, elbow)

    frames = np.stack([j[name] for name in CANONICAL_JOINTS], axis=1)
    if rigid:
        rot = _random_rotation(rng)
        shift = rng.uniform(-1.0, 1.0, size=3)
        scale = rng.uniform(0.5, 2.0)
        frames = scale * frames @ rot.T + shift
    return PoseSequence(JointSet(CANONICAL_JOINTS), frames, rate_hz)


def synth_pose(spec: SynthSpec, rigid: bool = True) -> tuple[PoseSequence, AngleSeries]:
    """Pose sequence and the exact angle it encodes for ``spec.angle_name``."""
    theta = analytic_angle(spec)
    n = theta.size
    if spec.motion == "sinusoid_knee":
        knee, elbow = theta, np.full(n, _REST_ELBOW_DEG)
    elif spec.motion == "sinusoid_elbow":
        knee, elbow = np.full(n, _REST_KNEE_DEG), theta
    else:
        knee = elbow = theta
    pose = pose_from_angles(knee, elbow, spec.rate_hz, seed=spec.seed, rigid=rigid)
    return pose, AngleSeries(theta, spec.rate_hz, label=spec.angle_name, provenance="analytic")


def _shift(a: np.ndarray, lag: int) -> np.ndarray:
    """Delay content by ``lag`` samples (advance if negative), edge-padded, same length."""
    if lag == 0 or a.shape[0] == 0:
        return a.copy()
    k = min(abs(lag), a.shape[0])
    if lag > 0:
        pad = np.repeat(a[:1], k, axis=0)
        return np.concatenate([pad, a[: a.shape[0] - k]], axis=0)
    pad = np.repeat(a[-1:], k, axis=0)
    return np.concatenate([a[k:], pad], axis=0)


def corrupt(obj: Union[AngleSeries, PoseSequence], spec: CorruptionSpec):
    """Copy of ``obj`` with lag, Gaussian noise and dropout applied, in that order.

    Noise and dropout draw from independent PCG64 streams spawned from
    ``spec.seed``, so the dropout mask for a seed does not depend on the noise
    level. Dropped samples become NaN and invalid.
    """
    noise_ss, drop_ss = np.random.SeedSequence(spec.seed).spawn(2)
    noise_rng = np.random.Generator(np.random.PCG64(noise_ss))
    drop_rng = np.random.Generator(np.random.PCG64(drop_ss))

    if isinstance(obj, AngleSeries):
        values = _shift(obj.values, spec.lag_samples)
        valid = _shift(obj.validity, spec.lag_samples)
        if spec.noise_std_deg > 0:
            values = values + noise_rng.normal(0.0, spec.noise_std_deg, size=values.shape)
        if spec.dropout_prob > 0:
            valid = valid & ~(drop_rng.random(values.shape) < spec.dropout_prob)
        values = np.where(valid, values, np.nan)
        return AngleSeries(values, obj.sample_rate_hz, valid, obj.label, obj.provenance)

    if isinstance(obj, PoseSequence):
        frames = _shift(obj.frames, spec.lag_samples)
        valid = _shift(obj.validity, spec.lag_samples)
        if spec.noise_std_deg > 0:
            frames = frames + noise_rng.normal(0.0, spec.noise_std_deg, size=frames.shape)
        if spec.dropout_prob > 0:
            valid = valid & ~(drop_rng.random(valid.shape) < spec.dropout_prob)
        frames = np.where(valid[:, :, None], frames, np.nan)
        return PoseSequence(obj.joint_set, frames, obj.frame_rate_hz, valid)

    raise TypeError(f"cannot corrupt {type(obj).__name__}")


# --------------------------------------------------------------------------
# fixtures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FixtureTrial:
    """One video variant. Noise and lag act on the hinge angle before the
    pose is built; dropout blanks pose cells afterwards."""

    model_name: str
    corruption: CorruptionSpec = CorruptionSpec()


@dataclass(frozen=True)
class FixtureBundle:
    synth: SynthSpec = SynthSpec()
    trials: tuple[FixtureTrial, ...] = (FixtureTrial("clean"),)
    subject_id: str = "S01"
    activity_id: str = "A01"
    imu_rate_hz: float = 50.0
    imu_in_degrees: bool = True
    manifest_extra: dict = field(default_factory=dict)


def standard_bundle(seed: int = 0) -> FixtureBundle:
    """Clean, noisy (0.5 deg), lagged (7 samples) and noisy+lagged variants."""
    return FixtureBundle(
        synth=SynthSpec("sinusoid_knee", 30.0, 0.5, 10.0, 30.0, seed),
        trials=(
            FixtureTrial("clean"),
            FixtureTrial("noisy", CorruptionSpec(noise_std_deg=0.5, seed=seed + 1)),
            FixtureTrial("lagged", CorruptionSpec(lag_samples=7, seed=seed + 2)),
            FixtureTrial("noisy_lagged", CorruptionSpec(noise_std_deg=0.5, lag_samples=7, seed=seed + 3)),
        ),
    )


def write_mot(path: Path, time: np.ndarray, columns: dict[str, np.ndarray], in_degrees: bool = True) -> Path:
    """Minimal OpenSim motion writer. Deliberately shares no code with the reader."""
    names = ["time", *columns]
    out = [
        Path(path).stem,
        "version=1",
        f"nRows={len(time)}",
        f"nColumns={len(names)}",
        f"inDegrees={'yes' if in_degrees else 'no'}",
        "endheader",
        "\t".join(names),
    ]
    cols = [np.asarray(time)] + [np.asarray(columns[c]) for c in columns]
    for i in range(len(time)):
        out.append("\t".join("%.12f" % c[i] for c in cols))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    return Path(path)


def _imu_columns(spec: SynthSpec, n: int, rate: float) -> dict[str, np.ndarray]:
    theta = analytic_angle(spec, rate_hz=rate, n_samples=n)
    knee = theta if spec.motion in ("sinusoid_knee", "constant_pose") else np.full(n, _REST_KNEE_DEG)
    elbow = theta if spec.motion in ("sinusoid_elbow", "constant_pose") else np.full(n, _REST_ELBOW_DEG)
    # upper arm and trunk both point straight down in the synthetic skeleton
    arm = np.zeros(n)
    return {
        "knee_angle_r": knee,
        "knee_angle_l": knee,
        "elbow_flex_r": elbow,
        "elbow_flex_l": elbow,
        "arm_flex_r": arm,
        "arm_flex_l": arm,
    }


def emit_fixture(bundle: FixtureBundle, out_dir: str | Path) -> Path:
    """Write pose CSVs, one .mot and a manifest; returns the manifest path.

    The IMU file holds the analytic angles sampled at ``imu_rate_hz`` over
    at least the video's time span. All manifest paths are relative.
    """
    from .ingest import write_pose_csv  # writer only; parsing stays independent

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = bundle.synth
    n_video = spec.n_samples
    span = (n_video - 1) / spec.rate_hz
    # cover the whole video span so both branches average over the same window
    n_imu = int(np.ceil(span * bundle.imu_rate_hz - 1e-9)) + 1

    imu_name = f"{bundle.subject_id}_{bundle.activity_id}_imu.mot"
    cols = _imu_columns(spec, n_imu, bundle.imu_rate_hz)
    if not bundle.imu_in_degrees:
        cols = {k: np.radians(v) for k, v in cols.items()}
    write_mot(out / imu_name, np.arange(n_imu) / bundle.imu_rate_hz, cols, bundle.imu_in_degrees)

    theta = analytic_angle(spec)
    trials = []
    for ft in bundle.trials:
        c = ft.corruption
        angle = corrupt(
            AngleSeries(theta, spec.rate_hz, label=spec.angle_name, provenance=video_provenance(ft.model_name)),
            replace(c, dropout_prob=0.0),
        )
        if spec.motion == "sinusoid_elbow":
            knee, elbow = np.full(n_video, _REST_KNEE_DEG), angle.values
        elif spec.motion == "sinusoid_knee":
            knee, elbow = angle.values, np.full(n_video, _REST_ELBOW_DEG)
        else:
            knee = elbow = angle.values
        pose = pose_from_angles(knee, elbow, spec.rate_hz, seed=spec.seed)
        if c.dropout_prob > 0:
            pose = corrupt(pose, CorruptionSpec(dropout_prob=c.dropout_prob, seed=c.seed))
        pose_name = f"{bundle.subject_id}_{bundle.activity_id}_{ft.model_name}.csv"
        write_pose_csv(pose, out / pose_name)
        trials.append(
            {
                "subject_id": bundle.subject_id,
                "activity_id": bundle.activity_id,
                "model_name": ft.model_name,
                "pose_file_path": pose_name,
                "imu_file_path": imu_name,
                "imu_column_name": spec.angle_name,
                "video_rate_hz": spec.rate_hz,
                "imu_rate_hz": bundle.imu_rate_hz,
            }
        )
    manifest = {"output_dir": "results", "trials": trials, **bundle.manifest_extra}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
