"""File readers and writers: canonical pose CSV, OpenSim .mot, run manifests."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .align import AlignmentConfig
from .dsp import FilterConfig
from .errors import (
    ColumnCountMismatch,
    MalformedHeader,
    MissingEndHeader,
    NoFrames,
    NonMonotonicTime,
    NonNumericCell,
    RaggedRow,
    RowCountMismatch,
    SchemaError,
    UnknownColumn,
    UnresolvablePath,
)
from .kinematics import IMU, ActivityAngleMap, AngleSeries, builtin_activity_angle_map, load_angle_config
from .skeleton import (
    JointSet,
    PoseSequence,
    builtin_map_entries,
    harmonize,
    load_map_entries,
    resolve_map,
)

DEFAULT_VIDEO_RATE_HZ = 30.0
DEFAULT_IMU_RATE_HZ = 50.0

_AXES = ("x", "y", "z")


# --------------------------------------------------------------------------
# pose CSV
# --------------------------------------------------------------------------


def _parse_cell(token: str) -> float:
    """NaN for anything that is not a finite number."""
    try:
        v = float(token)
    except ValueError:
        return math.nan
    return v if math.isfinite(v) else math.nan


def _header_joints(cells: list[str]) -> tuple[list[str], dict[tuple[str, str], int]]:
    order: list[str] = []
    where: dict[tuple[str, str], int] = {}
    for col, cell in enumerate(cells):
        name, sep, axis = cell.rpartition("_")
        if not sep or not name or axis not in _AXES:
            raise MalformedHeader(f"column {col}: {cell!r} is not <joint>_x|y|z")
        if (name, axis) in where:
            raise MalformedHeader(f"duplicate column {cell!r}")
        if name not in order:
            order.append(name)
        where[(name, axis)] = col
    for name in order:
        missing = [a for a in _AXES if (name, a) not in where]
        if missing:
            raise MalformedHeader(f"joint {name!r} lacks axes {missing}")
    return order, where


def read_pose_csv(
    path: str | Path,
    expected_joint_set: JointSet | None = None,
    frame_rate_hz: float = DEFAULT_VIDEO_RATE_HZ,
) -> PoseSequence:
    """Read ``frame,<j>_x,<j>_y,<j>_z,...`` into a PoseSequence.

    The leading ``frame`` column is optional. Empty or non-numeric cells mark
    that joint-sample invalid rather than failing the file. With
    ``expected_joint_set`` the output follows its joint order and any joint
    missing from the file is a MalformedHeader.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise MalformedHeader(f"{path}: empty file") from None
        offset = 1 if header and header[0].lower() == "frame" else 0
        names, where = _header_joints(header[offset:])
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise RaggedRow(reader.line_num, f"{len(row)} cells, header has {len(header)}")
            rows.append([_parse_cell(c.strip()) for c in row[offset:]])
    if not rows:
        raise NoFrames(f"{path}: no data rows")

    if expected_joint_set is not None:
        absent = [j for j in expected_joint_set if j not in names]
        if absent:
            raise MalformedHeader(f"{path}: missing joints {absent}")
        names = list(expected_joint_set)
    data = np.asarray(rows, dtype=np.float64)
    cols = [where[(j, a)] for j in names for a in _AXES]
    frames = data[:, cols].reshape(len(rows), len(names), 3)
    validity = np.isfinite(frames).all(axis=2)
    return PoseSequence(JointSet(tuple(names)), frames, frame_rate_hz, validity)


def _fmt(v: float) -> str:
    # repr is the shortest string that round-trips, and never locale-dependent
    return repr(float(v))


def write_pose_csv(seq: PoseSequence, path: str | Path) -> Path:
    path = Path(path)
    header = ["frame"] + [f"{j}_{a}" for j in seq.joint_set for a in _AXES]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(seq.n_frames):
            row = [str(t)]
            for j in range(len(seq.joint_set)):
                if seq.validity[t, j]:
                    row.extend(_fmt(v) for v in seq.frames[t, j])
                else:
                    row.extend(("", "", ""))
            w.writerow(row)
    return path


# --------------------------------------------------------------------------
# OpenSim .mot
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MotTable:
    column_names: tuple[str, ...]
    data: np.ndarray
    in_degrees: bool = True
    header: dict = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.column_names.index(name)]
        except ValueError:
            raise UnknownColumn(name) from None

    @property
    def time(self) -> np.ndarray:
        return self.column("time")


def _split(line: str) -> list[str]:
    if "\t" in line:
        return [c.strip() for c in line.strip().split("\t") if c.strip() != ""]
    return line.split()


def read_mot(path: str | Path) -> MotTable:
    """Parse an OpenSim motion (.mot/.sto) file.

    Header lines run up to ``endheader``; ``key=value`` lines are kept, and
    ``nRows``, ``nColumns`` and ``inDegrees`` are checked or honoured. Data
    cells may be tab- or space-delimited. ``nan`` cells parse as NaN.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    end = next((i for i, ln in enumerate(lines) if ln.strip().lower() == "endheader"), None)
    if end is None:
        raise MissingEndHeader(f"{path}: no 'endheader' line")
    header = {}
    for ln in lines[:end]:
        key, sep, val = ln.partition("=")
        if sep:
            header[key.strip()] = val.strip()
    in_degrees = header.get("inDegrees", "yes").strip().lower() not in ("no", "false", "0")

    body = [(i + 1, ln) for i, ln in enumerate(lines[end + 1 :], start=end + 1) if ln.strip()]
    if not body:
        raise ColumnCountMismatch(f"{path}: no column-name row after endheader")
    names = tuple(_split(body[0][1]))
    if "time" not in names:
        raise ColumnCountMismatch(f"{path}: no 'time' column in {names}")
    if "nColumns" in header and int(header["nColumns"]) != len(names):
        raise ColumnCountMismatch(f"{path}: header says {header['nColumns']} columns, found {len(names)}")

    rows = []
    for lineno, ln in body[1:]:
        cells = ln.split()
        if len(cells) != len(names):
            raise ColumnCountMismatch(f"{path}:{lineno}: {len(cells)} cells for {len(names)} columns")
        row = []
        for col, tok in enumerate(cells, start=1):
            try:
                row.append(float(tok))
            except ValueError:
                raise NonNumericCell(lineno, col, tok) from None
        rows.append(row)
    if "nRows" in header and int(header["nRows"]) != len(rows):
        raise RowCountMismatch(f"{path}: header says {header['nRows']} rows, found {len(rows)}")
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names))
    t = data[:, names.index("time")]
    if np.any(np.diff(t) <= 0):
        raise NonMonotonicTime(f"{path}: time column is not strictly increasing")
    data.setflags(write=False)
    return MotTable(names, data, in_degrees, header)


def extract_imu_angle(table: MotTable, column: str, rate_hz: float = DEFAULT_IMU_RATE_HZ) -> AngleSeries:
    values = np.array(table.column(column))
    if not table.in_degrees:
        values = np.degrees(values)
    return AngleSeries(values, rate_hz, np.isfinite(values), label=column, provenance=IMU)


# --------------------------------------------------------------------------
# model output conversion
# --------------------------------------------------------------------------


def convert_model_output(
    path: str | Path,
    model_kind: str,
    output: str | Path | None = None,
    map_path: str | Path | None = None,
    frame_rate_hz: float = DEFAULT_VIDEO_RATE_HZ,
) -> PoseSequence:
    """Rename a model's native CSV joints onto the canonical skeleton.

    Native files use the same ``<joint>_x,<joint>_y,<joint>_z`` layout with
    the model's own joint names. The kind selects a shipped alias table under
    ``data/maps``; ``map_path`` overrides it (and then any kind name is
    accepted). Writes a canonical pose CSV when ``output`` is given.
    """
    entries = load_map_entries(map_path) if map_path is not None else builtin_map_entries(model_kind)
    native = read_pose_csv(path, frame_rate_hz=frame_rate_hz)
    hmap = resolve_map(entries, native.joint_set, name=model_kind)
    seq = harmonize(native, hmap)
    if output is not None:
        write_pose_csv(seq, output)
    return seq


# --------------------------------------------------------------------------
# manifest
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Trial:
    subject_id: str
    activity_id: str
    model_name: str
    pose_file_path: Path
    imu_file_path: Path
    imu_column_name: str
    video_rate_hz: float = DEFAULT_VIDEO_RATE_HZ
    imu_rate_hz: float = DEFAULT_IMU_RATE_HZ
    harmonization_map_path: Optional[Path] = None
    model_kind: Optional[str] = None


@dataclass(frozen=True)
class TrialManifest:
    trials: tuple[Trial, ...]
    filter_config: FilterConfig = FilterConfig()
    alignment_config: AlignmentConfig = AlignmentConfig()
    output_dir: Path = Path("results")
    angle_config_path: Optional[Path] = None
    std_ddof: int = 0

    def activity_map(self) -> ActivityAngleMap:
        if self.angle_config_path is not None:
            return load_angle_config(self.angle_config_path)
        return builtin_activity_angle_map()

    def snapshot(self) -> dict:
        """JSON-ready copy with every default filled in."""

        def conv(o):
            if isinstance(o, Path):
                return str(o)
            if isinstance(o, dict):
                return {k: conv(v) for k, v in o.items()}
            if isinstance(o, (list, tuple)):
                return [conv(v) for v in o]
            return o

        return conv(asdict(self))


def manifest_schema() -> dict:
    res = resources.files("kinebench") / "data" / "manifest.schema.json"
    return json.loads(res.read_text(encoding="utf-8"))


def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    q = q if q.is_absolute() else base / q
    if not q.exists():
        raise UnresolvablePath(q)
    return q


def load_manifest(path: str | Path, check_paths: bool = True) -> TrialManifest:
    """Load and validate a JSON run manifest.

    Relative paths resolve against the manifest's directory. Defaults: video
    30 Hz, IMU 50 Hz, median and moving-average windows 5, fit window 180,
    max offset 15, output under ``<manifest dir>/results``. A trial without
    ``imu_column_name`` reads the column named after its activity's angle.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from None
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(manifest_schema()).iter_errors(doc))
    if err is not None:
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(where, err.message)

    base = path.parent
    angle_cfg = _resolve(base, doc["angle_config_path"]) if "angle_config_path" in doc else None
    amap = load_angle_config(angle_cfg) if angle_cfg else builtin_activity_angle_map()
    resolve = _resolve if check_paths else (lambda b, p: Path(p) if Path(p).is_absolute() else b / p)

    trials = []
    for i, t in enumerate(doc["trials"]):
        angle = amap[t["activity_id"]]  # UnknownActivity
        hmap = t.get("harmonization_map_path")
        trials.append(
            Trial(
                subject_id=t["subject_id"],
                activity_id=t["activity_id"],
                model_name=t["model_name"],
                pose_file_path=resolve(base, t["pose_file_path"]),
                imu_file_path=resolve(base, t["imu_file_path"]),
                imu_column_name=t.get("imu_column_name", angle),
                video_rate_hz=float(t.get("video_rate_hz", DEFAULT_VIDEO_RATE_HZ)),
                imu_rate_hz=float(t.get("imu_rate_hz", DEFAULT_IMU_RATE_HZ)),
                harmonization_map_path=resolve(base, hmap) if hmap else None,
                model_kind=t.get("model_kind"),
            )
        )
    try:
        fcfg = FilterConfig(**doc.get("filter_config", {}))
    except ValueError as exc:
        raise SchemaError("filter_config", str(exc)) from None
    acfg = AlignmentConfig(**doc.get("alignment_config", {}))
    out = Path(doc.get("output_dir", "results"))
    return TrialManifest(
        trials=tuple(trials),
        filter_config=fcfg,
        alignment_config=acfg,
        output_dir=out if out.is_absolute() else base / out,
        angle_config_path=angle_cfg,
        std_ddof=int(doc.get("std_ddof", 0)),
    )
