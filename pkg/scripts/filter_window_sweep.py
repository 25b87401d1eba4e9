"""Effect of median and moving-average window lengths on final agreement.

Runs the standard four-trial fixture under each (median, mavg) pair and
prints RMSE and Pearson for the noisy trials. Both branches are smoothed
with the same windows, so attenuation of the true motion largely cancels
and wider windows mostly remove noise; real data with a different
reference spectrum will not be that forgiving.

    python scripts/filter_window_sweep.py --median 1 3 5 7 --mavg 1 5 9 15
"""

import argparse
import json
import tempfile
from dataclasses import replace
from pathlib import Path

from kinebench.dsp import FilterConfig
from kinebench.ingest import load_manifest
from kinebench.pipeline import run_trials
from kinebench.testkit import CorruptionSpec, FixtureBundle, FixtureTrial, SynthSpec, emit_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--median", type=int, nargs="+", default=[1, 3, 5, 7])
    ap.add_argument("--mavg", type=int, nargs="+", default=[1, 3, 5, 9, 15])
    ap.add_argument("--noise", type=float, default=2.0)
    ap.add_argument("--frequency", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        bundle = FixtureBundle(
            synth=SynthSpec("sinusoid_knee", 30.0, args.frequency, 10.0, 30.0, args.seed),
            trials=(
                FixtureTrial("noisy", CorruptionSpec(noise_std_deg=args.noise, seed=args.seed + 1)),
                FixtureTrial("noisy_dropout", CorruptionSpec(noise_std_deg=args.noise, dropout_prob=0.1, seed=args.seed + 2)),
            ),
        )
        base = load_manifest(emit_fixture(bundle, Path(tmp)))
        print(f"noise {args.noise} deg, motion {args.frequency} Hz")
        print("median  mavg   " + "  ".join(f"{t.model_name:>24s}" for t in base.trials))
        results = {}
        for mw in args.median:
            for aw in args.mavg:
                m = replace(base, filter_config=FilterConfig(mw, aw, 30.0))
                outs = run_trials(m)
                cells = []
                for o in outs:
                    if o.status != "ok":
                        cells.append(f"{'failed':>24s}")
                        continue
                    cells.append(f"rmse {o.record.rmse:6.3f} r {o.record.pearson:.4f}".rjust(24))
                    results.setdefault(o.trial.model_name, []).append((o.record.rmse, mw, aw))
                print(f"{mw:6d}  {aw:4d}   " + "  ".join(cells))
        print("\nbest (median, mavg) per trial:")
        print(json.dumps({k: min(v)[1:] for k, v in results.items()}))


if __name__ == "__main__":
    main()
