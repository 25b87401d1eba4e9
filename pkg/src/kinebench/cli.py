"""kinebench command line.

Subcommands:
  convert  model-native pose CSV -> canonical pose CSV
  angles   canonical pose CSV -> raw joint-angle CSV for one activity
  run      full benchmark from a JSON manifest
  report   rebuild tables and bar charts from a records.csv
  synth    write a synthetic fixture (pose CSVs, .mot, manifest)

Outputs of `run` (and `report`, minus overlays and records):
  records.csv                          one row per trial
  summary_overall_per_model.{csv,md}   overall mean ± std per model
  summary_per_activity_per_model.{csv,md}
  <activity>_<metric>.svg              per-subject bars per model
  summary_normalized.svg               min-max scaled overall metrics
  overlay_<subject>_<activity>.svg     aligned IMU and model trajectories
  run_log.json                         per-trial status and config snapshot
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import KinebenchError

log = logging.getLogger("kinebench")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--jobs", type=int, default=d if suppress else 1, help="parallel trials (run)")
    parser.add_argument("--output-dir", type=Path, default=d, help="where outputs go")
    parser.add_argument("--verbose", "-v", action="store_true", default=d if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kinebench",
        description=__doc__.split("\n\n")[0],
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"kinebench {__version__}")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    c = sub.add_parser("convert", parents=[common], help="harmonize a model-native pose CSV")
    c.add_argument("input", type=Path)
    c.add_argument("output", type=Path)
    c.add_argument("--kind", required=True, help="model kind (h36m17_generic, bodytrack34, ...)")
    c.add_argument("--map", dest="map_path", type=Path, help="override harmonization map file")
    c.add_argument("--rate", type=float, default=30.0)

    a = sub.add_parser("angles", parents=[common], help="raw joint angle for an activity")
    a.add_argument("pose_csv", type=Path)
    a.add_argument("output", type=Path)
    a.add_argument("--activity", required=True)
    a.add_argument("--rate", type=float, default=30.0, help="video frame rate in Hz")
    a.add_argument("--angle-config", type=Path, help="angle/activity override file")

    r = sub.add_parser("run", parents=[common], help="run a benchmark manifest")
    r.add_argument("manifest", type=Path)

    rp = sub.add_parser("report", parents=[common], help="rebuild aggregates from records.csv")
    rp.add_argument("records_csv", type=Path)
    rp.add_argument("out_dir", type=Path, nargs="?")
    rp.add_argument("--sample-std", action="store_true", help="use sample (N-1) standard deviation")

    s = sub.add_parser("synth", parents=[common], help="write a synthetic fixture")
    s.add_argument("out_dir", type=Path)
    s.add_argument("--preset", choices=("single", "standard"), default="single",
                   help="standard = clean, noisy, lagged and noisy+lagged trials")
    s.add_argument("--motion", default="sinusoid_knee", choices=("sinusoid_knee", "sinusoid_elbow", "constant_pose"))
    s.add_argument("--amplitude", type=float, default=30.0, help="degrees")
    s.add_argument("--frequency", type=float, default=0.5, help="Hz")
    s.add_argument("--duration", type=float, default=10.0, help="seconds")
    s.add_argument("--rate", type=float, default=30.0, help="video rate, Hz")
    s.add_argument("--imu-rate", type=float, default=50.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise", type=float, default=0.0, help="angle noise std, degrees")
    s.add_argument("--dropout", type=float, default=0.0, help="per-sample pose dropout probability")
    s.add_argument("--lag", type=int, default=0, help="video lag in samples, |lag| <= 15")
    s.add_argument("--corrupt-seed", type=int, default=0)
    s.add_argument("--model-name", default="synthetic")
    s.add_argument("--subject", default="S01")
    s.add_argument("--activity", default=None, help="defaults to A01 (knee) or A05 (elbow)")
    s.add_argument("--radians", action="store_true", help="write the .mot with inDegrees=no")
    return p


def cmd_convert(args) -> int:
    from .ingest import convert_model_output

    seq = convert_model_output(args.input, args.kind, args.output, map_path=args.map_path, frame_rate_hz=args.rate)
    log.info("wrote %s (%d frames, %d joints)", args.output, seq.n_frames, len(seq.joint_set))
    return 0


def cmd_angles(args) -> int:
    from .ingest import read_pose_csv
    from .kinematics import builtin_activity_angle_map, frames_to_time, joint_angle, load_angle_config

    amap = load_angle_config(args.angle_config) if args.angle_config else builtin_activity_angle_map()
    definition = amap.definition_for(args.activity)
    series = joint_angle(read_pose_csv(args.pose_csv, frame_rate_hz=args.rate), definition)
    t, values = frames_to_time(series)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "angle_deg"])
        for ti, v, ok in zip(t, values, series.validity):
            w.writerow([repr(float(ti)), repr(float(v)) if ok else ""])
    log.info("wrote %s (%s, %d samples)", args.output, definition.angle_name, len(series))
    return 0


def cmd_run(args) -> int:
    from .ingest import load_manifest
    from .pipeline import run_manifest

    manifest = load_manifest(args.manifest)
    if not manifest.trials:
        print("error: manifest has no trials", file=sys.stderr)
        return 1
    summary = run_manifest(manifest, jobs=args.jobs, output_dir=args.output_dir)
    n = len(summary.outcomes)
    print(f"{summary.n_ok}/{n} trials ok; outputs in {summary.output_dir}")
    if summary.n_ok == 0:
        print("error: no trial succeeded", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    from .report import read_records_csv, summary_outputs

    out = args.out_dir or args.output_dir
    if out is None:
        print("error: give an output directory", file=sys.stderr)
        return 2
    records = read_records_csv(args.records_csv)
    if not records:
        print("error: no records", file=sys.stderr)
        return 1
    files = summary_outputs(records, out, ddof=1 if args.sample_std else 0)
    print(f"wrote {len(files)} files to {out}")
    return 0


def cmd_synth(args) -> int:
    from .testkit import CorruptionSpec, FixtureBundle, FixtureTrial, SynthSpec, emit_fixture, standard_bundle

    if args.preset == "standard":
        bundle = standard_bundle(args.seed)
    else:
        synth = SynthSpec(args.motion, args.amplitude, args.frequency, args.duration, args.rate, args.seed)
        corruption = CorruptionSpec(args.noise, args.dropout, args.lag, args.corrupt_seed)
        activity = args.activity or ("A05" if args.motion == "sinusoid_elbow" else "A01")
        bundle = FixtureBundle(
            synth=synth,
            trials=(FixtureTrial(args.model_name, corruption),),
            subject_id=args.subject,
            activity_id=activity,
            imu_rate_hz=args.imu_rate,
            imu_in_degrees=not args.radians,
        )
    path = emit_fixture(bundle, args.out_dir)
    print(f"wrote fixture manifest {path}")
    return 0


COMMANDS = {
    "convert": cmd_convert,
    "angles": cmd_angles,
    "run": cmd_run,
    "report": cmd_report,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (KinebenchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
