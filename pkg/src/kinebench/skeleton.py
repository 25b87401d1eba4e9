"""Canonical 17-joint skeleton and harmonization of model-native joint sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidMap, MissingRequiredTarget, MissingSourceJoint

# Human3.6M order, renamed to the snake_case scheme used by the angle table.
# torso is the H36M spine joint, neck the thorax, nose the neck/nose joint.
CANONICAL_JOINTS: tuple[str, ...] = (
    "pelvis",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "torso",
    "neck",
    "nose",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
)

# Joints consumed by the built-in angle definitions.
REQUIRED_JOINTS: tuple[str, ...] = (
    "right_shoulder",
    "left_shoulder",
    "right_elbow",
    "left_elbow",
    "right_wrist",
    "left_wrist",
    "right_hip",
    "left_hip",
    "right_knee",
    "left_knee",
    "right_ankle",
    "left_ankle",
    "neck",
    "torso",
)


@dataclass(frozen=True)
class JointSet:
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            dupes = sorted({n for n in self.names if self.names.count(n) > 1})
            raise ValueError(f"duplicate joint names: {dupes}")

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name) -> bool:
        return name in self.names

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


_CANONICAL = JointSet(CANONICAL_JOINTS)


def canonical_joint_set() -> JointSet:
    return _CANONICAL


@dataclass(frozen=True, eq=False)
class PoseSequence:
    """Per-frame 3D joint coordinates.

    ``frames`` has shape (n_frames, n_joints, 3); ``validity`` has shape
    (n_frames, n_joints). Coordinates of invalid samples are unspecified (NaN
    when read from file) and must be interpolated before use. Arrays are made
    read-only on construction.
    """

    joint_set: JointSet
    frames: np.ndarray
    frame_rate_hz: float
    validity: np.ndarray = None

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise ValueError(f"frames must have shape (T, J, 3), got {frames.shape}")
        if frames.shape[1] != len(self.joint_set):
            raise ValueError(
                f"frames carry {frames.shape[1]} joints but joint set has {len(self.joint_set)}"
            )
        if not self.frame_rate_hz > 0:
            raise ValueError("frame_rate_hz must be positive")
        if self.validity is None:
            validity = np.isfinite(frames).all(axis=2)
        else:
            validity = np.array(self.validity, dtype=bool)
            if validity.shape != frames.shape[:2]:
                raise ValueError("validity mask shape does not match frames")
        frames.setflags(write=False)
        validity.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "validity", validity)
        object.__setattr__(self, "frame_rate_hz", float(self.frame_rate_hz))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def joint(self, name: str) -> np.ndarray:
        """(T, 3) trajectory of one joint."""
        return self.frames[:, self.joint_set.index(name), :]

    def joint_validity(self, name: str) -> np.ndarray:
        return self.validity[:, self.joint_set.index(name)]


@dataclass(frozen=True)
class HarmonizationMap:
    """Ordered ``source -> target`` renames. Unmapped source joints are discarded."""

    entries: tuple[tuple[str, str], ...]
    name: str = ""

    def __post_init__(self):
        entries = tuple((str(s), str(t)) for s, t in self.entries)
        object.__setattr__(self, "entries", entries)
        unknown = [t for _, t in entries if t not in _CANONICAL]
        if unknown:
            raise InvalidMap(f"targets outside canonical joint set: {unknown}")
        targets = [t for _, t in entries]
        dupes = sorted({t for t in targets if targets.count(t) > 1})
        if dupes:
            raise InvalidMap(f"duplicate targets: {dupes}")

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.entries)

    @classmethod
    def identity(cls, names: Iterable[str] = CANONICAL_JOINTS) -> "HarmonizationMap":
        return cls(tuple((n, n) for n in names), name="identity")


@dataclass
class MapReport:
    unmapped_required: list[str] = field(default_factory=list)
    duplicate_targets: list[str] = field(default_factory=list)
    unknown_sources: list[str] = field(default_factory=list)
    unknown_targets: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(
            self.unmapped_required or self.duplicate_targets or self.unknown_sources or self.unknown_targets
        )

    @property
    def ok(self) -> bool:
        return not self


def parse_map_lines(lines: Iterable[str]) -> list[tuple[str, str]]:
    """Parse ``source -> target`` lines; ``#`` starts a comment."""
    entries = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise InvalidMap(f"line {lineno}: expected 'source -> target', got {raw.strip()!r}")
        src, dst = (part.strip() for part in line.split("->", 1))
        if not src or not dst:
            raise InvalidMap(f"line {lineno}: empty joint name")
        entries.append((src, dst))
    return entries


def validate_map(
    entries: HarmonizationMap | Sequence[tuple[str, str]],
    source: JointSet | Sequence[str],
    required: Sequence[str] = REQUIRED_JOINTS,
) -> MapReport:
    """Check a map against a source joint set without raising.

    Accepts raw entry pairs so maps that would fail HarmonizationMap
    construction (duplicate or unknown targets) can still be reported on.
    """
    pairs = entries.entries if isinstance(entries, HarmonizationMap) else list(entries)
    source_names = set(source)
    report = MapReport()
    seen: dict[str, int] = {}
    for src, dst in pairs:
        if src not in source_names and src not in report.unknown_sources:
            report.unknown_sources.append(src)
        if dst not in _CANONICAL and dst not in report.unknown_targets:
            report.unknown_targets.append(dst)
        seen[dst] = seen.get(dst, 0) + 1
    report.duplicate_targets = [t for t, c in seen.items() if c > 1]
    mapped = {dst for src, dst in pairs if src in source_names}
    report.unmapped_required = [j for j in required if j not in mapped]
    return report


def harmonize(
    seq: PoseSequence,
    hmap: HarmonizationMap,
    required: Sequence[str] = REQUIRED_JOINTS,
) -> PoseSequence:
    """Rename and select joints onto the canonical skeleton.

    Output joints are the map's targets in canonical order. Coordinates and
    validity are copied without arithmetic, so retained values are bit-exact.
    """
    for src, _ in hmap.entries:
        if src not in seq.joint_set:
            raise MissingSourceJoint(src)
    targets = set(hmap.targets)
    for name in required:
        if name not in targets:
            raise MissingRequiredTarget(name)
    src_of = {dst: src for src, dst in hmap.entries}
    out_names = [j for j in CANONICAL_JOINTS if j in targets]
    idx = [seq.joint_set.index(src_of[j]) for j in out_names]
    return PoseSequence(
        joint_set=JointSet(tuple(out_names)),
        frames=seq.frames[:, idx, :],
        frame_rate_hz=seq.frame_rate_hz,
        validity=seq.validity[:, idx],
    )


def resolve_map(entries: Sequence[tuple[str, str]], source: JointSet | Sequence[str], name: str = "") -> HarmonizationMap:
    """Collapse an alias table against the joints actually present.

    Map files may list several candidate sources for one target (for example
    both ``neck`` and ``neck_base``); the first candidate present in
    ``source`` wins and the rest are dropped.
    """
    present = set(source)
    chosen: dict[str, str] = {}
    for src, dst in entries:
        if src in present and dst not in chosen:
            chosen[dst] = src
    ordered = tuple((chosen[t], t) for t in CANONICAL_JOINTS if t in chosen)
    unknown = [dst for _, dst in entries if dst not in _CANONICAL]
    if unknown:
        raise InvalidMap(f"targets outside canonical joint set: {unknown}")
    return HarmonizationMap(ordered, name=name)


def load_map(path: str | Path) -> HarmonizationMap:
    """Strict single-candidate map file."""
    path = Path(path)
    return HarmonizationMap(tuple(load_map_entries(path)), name=path.stem)


def load_map_entries(path: str | Path) -> list[tuple[str, str]]:
    return parse_map_lines(Path(path).read_text(encoding="utf-8").splitlines())


def builtin_map_kinds() -> list[str]:
    root = resources.files("kinebench") / "data" / "maps"
    return sorted(p.name[: -len(".map")] for p in root.iterdir() if p.name.endswith(".map"))


def builtin_map_entries(kind: str) -> list[tuple[str, str]]:
    """Alias table shipped for a model kind (see data/maps/)."""
    from .errors import UnknownModelKind

    res = resources.files("kinebench") / "data" / "maps" / f"{kind}.map"
    if not res.is_file():
        raise UnknownModelKind(kind)
    return parse_map_lines(res.read_text(encoding="utf-8").splitlines())
