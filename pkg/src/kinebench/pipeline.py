"""Per-trial processing and batch runs over a manifest."""

from __future__ import annotations

import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .align import AlignmentResult, apply_offset_and_trim, best_offset, overlap_bounds
from .dsp import condition_imu, condition_video
from .ingest import Trial, TrialManifest, convert_model_output, extract_imu_angle, read_mot, read_pose_csv
from .kinematics import AngleSeries, joint_angle, video_provenance
from .metrics import MetricsRecord, evaluate_trial
from .report import PlotSpec, plot_overlay, summary_outputs, write_records_csv
from .skeleton import harmonize, load_map_entries, resolve_map

log = logging.getLogger(__name__)


@dataclass
class TrialOutcome:
    trial: Trial
    status: str  # ok | failed
    record: Optional[MetricsRecord] = None
    alignment: Optional[AlignmentResult] = None
    reference: Optional[AngleSeries] = None  # conditioned IMU, untrimmed
    estimate: Optional[AngleSeries] = None  # conditioned video, untrimmed
    error: str = ""
    elapsed_s: float = 0.0


def video_angle(trial: Trial, manifest: TrialManifest) -> AngleSeries:
    """Raw (unfiltered) video joint angle for the trial's activity."""
    if trial.model_kind is not None:
        pose = convert_model_output(
            trial.pose_file_path, trial.model_kind, map_path=trial.harmonization_map_path, frame_rate_hz=trial.video_rate_hz
        )
    else:
        pose = read_pose_csv(trial.pose_file_path, frame_rate_hz=trial.video_rate_hz)
        if trial.harmonization_map_path is not None:
            entries = load_map_entries(trial.harmonization_map_path)
            pose = harmonize(pose, resolve_map(entries, pose.joint_set, name=Path(trial.harmonization_map_path).stem))
    definition = manifest.activity_map().definition_for(trial.activity_id)
    return joint_angle(pose, definition, provenance=video_provenance(trial.model_name))


def imu_angle(trial: Trial) -> AngleSeries:
    return extract_imu_angle(read_mot(trial.imu_file_path), trial.imu_column_name, trial.imu_rate_hz)


def process_trial(trial: Trial, manifest: TrialManifest) -> TrialOutcome:
    """Video and IMU branches, synchronization and metrics for one trial."""
    t0 = time.perf_counter()
    try:
        video = condition_video(video_angle(trial, manifest), manifest.filter_config)
        imu = condition_imu(imu_angle(trial), manifest.filter_config)
        res = best_offset(imu, video, manifest.alignment_config)
        ref, est = apply_offset_and_trim(imu, video, res.offset)
        record = evaluate_trial(
            ref,
            est,
            subject_id=trial.subject_id,
            activity_id=trial.activity_id,
            model=trial.model_name,
            offset=res.offset,
            fit_rmse=res.fit_rmse,
        )
        return TrialOutcome(trial, "ok", record, res, imu, video, elapsed_s=time.perf_counter() - t0)
    except Exception as exc:  # noqa: BLE001 - one bad trial must not stop the batch
        log.debug("trial failed:\n%s", traceback.format_exc())
        return TrialOutcome(trial, "failed", error=f"{type(exc).__name__}: {exc}", elapsed_s=time.perf_counter() - t0)


def _process(args):
    return process_trial(*args)


def run_trials(manifest: TrialManifest, jobs: int = 1) -> list[TrialOutcome]:
    """Outcomes in manifest order whatever the completion order."""
    work = [(t, manifest) for t in manifest.trials]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_process, work))
    return [_process(w) for w in work]


def _overlay_groups(outcomes: list[TrialOutcome]) -> dict[tuple[str, str], list[TrialOutcome]]:
    groups: dict[tuple[str, str], list[TrialOutcome]] = {}
    for o in outcomes:
        if o.status == "ok":
            groups.setdefault((o.trial.subject_id, o.trial.activity_id), []).append(o)
    return groups


def write_overlays(outcomes: list[TrialOutcome], out_dir: Path) -> list[Path]:
    """One overlay per (subject, activity): IMU plus every model, on the
    reference samples that all aligned models cover."""
    written = []
    for (subject, activity), group in sorted(_overlay_groups(outcomes).items()):
        ref = group[0].reference
        group = [o for o in group if len(o.reference) == len(ref) and (o.reference.values == ref.values).all()]
        bounds = [overlap_bounds(len(ref), len(o.estimate), o.alignment.offset) for o in group]
        lo = max(b[0] for b in bounds)
        hi = min(b[1] for b in bounds)
        if hi - lo < 2:
            continue
        estimates = []
        for o in sorted(group, key=lambda o: o.trial.model_name):
            k = o.alignment.offset
            e = o.estimate
            estimates.append((o.trial.model_name, e.with_values(e.values[lo + k : hi + k])))
        spec = PlotSpec(
            "overlay",
            title=f"{ref.label}, {subject} {activity}",
            x_label="Time (s)",
            y_label="Angle (deg, mean removed)",
        )
        written.append(plot_overlay(ref.with_values(ref.values[lo:hi]), estimates, spec, out_dir / f"overlay_{subject}_{activity}.svg"))
    return written


@dataclass
class RunSummary:
    outcomes: list[TrialOutcome]
    records: list[MetricsRecord]
    output_dir: Path
    files: list[Path] = field(default_factory=list)

    @property
    def n_ok(self) -> int:
        return len(self.records)


def run_manifest(manifest: TrialManifest, jobs: int = 1, output_dir: Path | None = None) -> RunSummary:
    """Process all trials, then write records, summaries, figures and the run log."""
    out = Path(output_dir or manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outcomes = run_trials(manifest, jobs)
    records = [o.record for o in outcomes if o.status == "ok"]
    for o in outcomes:
        if o.status != "ok":
            log.warning("%s %s %s failed: %s", o.trial.subject_id, o.trial.activity_id, o.trial.model_name, o.error)

    files = []
    if records:
        files.append(write_records_csv(records, out / "records.csv"))
        files += summary_outputs(records, out, ddof=manifest.std_ddof)
        files += write_overlays(outcomes, out)

    run_log = {
        "tool": "kinebench",
        "version": __version__,
        "config": manifest.snapshot(),
        "jobs": jobs,
        "elapsed_s": time.perf_counter() - t0,
        "trials": [
            {
                "subject_id": o.trial.subject_id,
                "activity_id": o.trial.activity_id,
                "model_name": o.trial.model_name,
                "status": o.status,
                "error": o.error or None,
                "offset": o.alignment.offset if o.alignment else None,
                "elapsed_s": o.elapsed_s,
            }
            for o in outcomes
        ],
    }
    log_path = out / "run_log.json"
    log_path.write_text(json.dumps(run_log, indent=2) + "\n", encoding="utf-8")
    files.append(log_path)
    return RunSummary(outcomes, records, out, files)
