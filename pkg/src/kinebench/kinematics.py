"""Joint angles from 3D poses, and which angle each activity evaluates."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import UnknownActivity, UnknownAngle, UnknownMarker
from .skeleton import CANONICAL_JOINTS, PoseSequence

DEGENERATE_EPS = 1e-9

IMU = "imu"


@dataclass(frozen=True)
class AngleDefinition:
    """Two bone vectors: v1 = m2 - m1 and v2 = m4 - m3."""

    angle_name: str
    m1: str
    m2: str
    m3: str
    m4: str

    def __post_init__(self):
        for m in self.markers:
            if m not in CANONICAL_JOINTS:
                raise UnknownMarker(m)
        if self.m1 == self.m2 or self.m3 == self.m4:
            raise ValueError(f"{self.angle_name}: bone vector endpoints must differ")

    @property
    def markers(self) -> tuple[str, str, str, str]:
        return (self.m1, self.m2, self.m3, self.m4)


@dataclass(frozen=True, eq=False)
class AngleSeries:
    """Uniformly sampled joint-angle trajectory in degrees.

    ``provenance`` is ``"imu"`` or ``"video:<model>"``.
    """

    values: np.ndarray
    sample_rate_hz: float
    validity: np.ndarray = None
    label: str = ""
    provenance: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.validity is None:
            validity = np.isfinite(values)
        else:
            validity = np.array(self.validity, dtype=bool).reshape(-1)
            if validity.shape != values.shape:
                raise ValueError("validity mask length does not match values")
        values.setflags(write=False)
        validity.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "validity", validity)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def fully_valid(self) -> bool:
        return bool(self.validity.all())

    def with_values(self, values, validity=None, sample_rate_hz=None) -> "AngleSeries":
        return AngleSeries(
            values=values,
            sample_rate_hz=self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz,
            validity=np.ones(len(values), dtype=bool) if validity is None else validity,
            label=self.label,
            provenance=self.provenance,
        )


def video_provenance(model: str) -> str:
    return f"video:{model}"


_TABLE = (
    ("arm_flex_r", "right_shoulder", "right_elbow", "neck", "torso"),
    ("arm_flex_l", "left_shoulder", "left_elbow", "neck", "torso"),
    ("elbow_flex_r", "right_shoulder", "right_elbow", "right_elbow", "right_wrist"),
    ("elbow_flex_l", "left_shoulder", "left_elbow", "left_elbow", "left_wrist"),
    ("knee_angle_r", "right_hip", "right_knee", "right_knee", "right_ankle"),
    ("knee_angle_l", "left_hip", "left_knee", "left_knee", "left_ankle"),
)

_ACTIVITY_ANGLES = {
    "A01": "knee_angle_l",
    "A02": "knee_angle_r",
    "A03": "knee_angle_l",
    "A04": "knee_angle_r",
    "A05": "elbow_flex_r",
    "A06": "elbow_flex_l",
    "A07": "arm_flex_r",
    "A08": "arm_flex_l",
    "A09": "elbow_flex_r",
    "A10": "arm_flex_r",
    "A11": "arm_flex_r",
    "A12": "arm_flex_l",
    "A13": "arm_flex_r",
}

ACTIVITY_NAMES = {
    "A01": "walk_forward",
    "A02": "walk_backward",
    "A03": "walk_along",
    "A04": "sit_to_stand",
    "A05": "move_right_arm",
    "A06": "move_left_arm",
    "A07": "drink_right_arm",
    "A08": "drink_left_arm",
    "A09": "assemble_both_arms",
    "A10": "throw_both_arms",
    "A11": "reachup_right_arm",
    "A12": "reachup_left_arm",
    "A13": "tear_both_arms",
}


def builtin_angle_definitions() -> list[AngleDefinition]:
    return [AngleDefinition(*row) for row in _TABLE]


class ActivityAngleMap(Mapping):
    """activity id -> angle name, checked against a set of angle definitions."""

    def __init__(self, entries: Mapping[str, str], definitions: Iterable[AngleDefinition] | None = None):
        defs = builtin_angle_definitions() if definitions is None else list(definitions)
        self.definitions = {d.angle_name: d for d in defs}
        for activity, angle in entries.items():
            if angle not in self.definitions:
                raise UnknownAngle(angle)
        self._entries = dict(sorted(entries.items()))

    def __getitem__(self, activity_id: str) -> str:
        try:
            return self._entries[activity_id]
        except KeyError:
            raise UnknownActivity(activity_id) from None

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def definition_for(self, activity_id: str) -> AngleDefinition:
        return self.definitions[self[activity_id]]


def builtin_activity_angle_map() -> ActivityAngleMap:
    return ActivityAngleMap(_ACTIVITY_ANGLES)


def angle_definition(name: str, definitions: Iterable[AngleDefinition] | None = None) -> AngleDefinition:
    for d in builtin_angle_definitions() if definitions is None else definitions:
        if d.angle_name == name:
            return d
    raise UnknownAngle(name)


def parse_angle_config(lines: Iterable[str]) -> tuple[list[AngleDefinition], dict[str, str]]:
    """Parse override lines: ``name: m1,m2,m3,m4`` and ``Axx: angle_name``.

    Returns the definitions and activity entries found; callers merge them
    over the built-ins.
    """
    defs, acts = [], {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key, rest = key.strip(), rest.strip()
        if not sep or not key or not rest:
            raise ValueError(f"line {lineno}: expected 'key: value', got {raw.strip()!r}")
        if "," in rest:
            markers = [m.strip() for m in rest.split(",")]
            if len(markers) != 4:
                raise ValueError(f"line {lineno}: angle {key!r} needs exactly four markers")
            defs.append(AngleDefinition(key, *markers))
        else:
            acts[key] = rest
    return defs, acts


def load_angle_config(path: str | Path) -> ActivityAngleMap:
    """Built-in definitions and activity map with a config file laid over them."""
    defs, acts = parse_angle_config(Path(path).read_text(encoding="utf-8").splitlines())
    merged = {d.angle_name: d for d in builtin_angle_definitions()}
    merged.update({d.angle_name: d for d in defs})
    entries = dict(_ACTIVITY_ANGLES)
    entries.update(acts)
    return ActivityAngleMap(entries, merged.values())


def joint_angle(
    seq: PoseSequence,
    definition: AngleDefinition,
    eps: float = DEGENERATE_EPS,
    method: str = "atan2",
    provenance: str = "",
) -> AngleSeries:
    """Angle between the two bone vectors of ``definition``, per frame, in degrees.

    ``method="arccos"`` evaluates arccos of the clamped normalized dot
    product literally. The default ``"atan2"`` evaluates
    atan2(|v1 x v2|, v1 . v2), which is the same angle but keeps full
    precision near 0 and 180 degrees where arccos loses about half the
    significant digits.

    Frames where any contributing joint is invalid, or where a bone vector is
    shorter than ``eps``, are marked invalid with value NaN.
    """
    for m in definition.markers:
        if m not in seq.joint_set:
            raise UnknownMarker(m)
    p1, p2, p3, p4 = (seq.joint(m) for m in definition.markers)
    valid = np.logical_and.reduce([seq.joint_validity(m) for m in definition.markers])
    v1 = p2 - p1
    v2 = p4 - p3
    n1 = np.linalg.norm(v1, axis=1)
    n2 = np.linalg.norm(v2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        valid &= (n1 >= eps) & (n2 >= eps)
        dot = np.einsum("ij,ij->i", v1, v2)
        if method == "atan2":
            cross = np.linalg.norm(np.cross(v1, v2), axis=1)
            theta = np.degrees(np.arctan2(cross, dot))
        elif method == "arccos":
            cos = np.clip(dot / (n1 * n2), -1.0, 1.0)
            theta = np.arccos(cos) * 180.0 / np.pi
        else:
            raise ValueError(f"unknown method {method!r}")
    theta = np.where(valid, theta, np.nan)
    return AngleSeries(
        values=theta,
        sample_rate_hz=seq.frame_rate_hz,
        validity=valid,
        label=definition.angle_name,
        provenance=provenance,
    )


def frames_to_time(series: AngleSeries) -> tuple[np.ndarray, np.ndarray]:
    """(timestamps in seconds, values); sample i sits at ``i / sample_rate_hz``."""
    return np.arange(len(series)) / series.sample_rate_hz, series.values
