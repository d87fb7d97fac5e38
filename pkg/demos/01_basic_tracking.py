"""A first tour: simulate a scene, track it, and score the result.

Run:  python3 demos/01_basic_tracking.py

The simulator renders a small synthetic sequence into a temporary
directory — ground truth, noisy detections, depth maps, masks, and
embeddings, exactly the files a real perception stack would hand the
tracker.  We then load that bundle, run the association pipeline, and
evaluate the output against ground truth.
"""

import tempfile
from pathlib import Path

from depthtrack.io_formats import load_bundle, read_mot
from depthtrack.metrics import evaluate
from depthtrack.simulator import builtin_scenarios, render
from depthtrack.tracker import run_sequence


def main() -> None:
    seq = Path(tempfile.mkdtemp(prefix="depthtrack-demo-"))
    scenario = builtin_scenarios(seed=1)["dropout-storm"]
    print(f"Rendering 'dropout-storm' ({scenario.frames} frames, "
          f"{len(scenario.objects)} objects) into {seq}")
    render(scenario, seq)

    bundle = load_bundle(seq)
    print(f"Bundle: {bundle.frames} frames, "
          f"embeddings={bundle.has_embeddings}, depth={bundle.has_depth}, "
          f"masks={bundle.has_masks}")

    rows = run_sequence(bundle)  # default configuration: all cues on
    ids = sorted({r.track_id for r in rows})
    print(f"Tracker emitted {len(rows)} boxes across {len(ids)} identities")

    report = evaluate(read_mot(seq / "gt.txt"), rows)
    print(f"MOTA {report.mota:.3f}  IDF1 {report.idf1:.3f}  "
          f"switches {report.idsw}  FP {report.fp}  FN {report.fn}")
    print("Despite 30% dropout and box jitter, the multi-cue score keeps")
    print("the three identities stable; try editing the scenario noise in")
    print("depthtrack.simulator.builtin_scenarios and re-running.")


if __name__ == "__main__":
    main()
