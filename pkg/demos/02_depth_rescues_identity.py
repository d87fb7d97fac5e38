"""Why depth: two identical twins swap directions while fully hidden.

Run:  python3 demos/02_depth_rescues_identity.py

In the 'cross-depth' scene, two objects with identical appearance and
size approach a near pillar, reverse direction while completely hidden
behind it, and reappear on their original sides.  A constant-velocity
motion model votes for the swap — each coasting prediction points at
the *other* object's reappearance point.  Their depth planes (3 m vs
12 m) are the only cue that tells them apart.

We track the same sequence twice: once with the depth-histogram cue
enabled and once with its weight zeroed, and compare identity metrics.
"""

import tempfile
from pathlib import Path

from depthtrack.io_formats import load_bundle, read_mot
from depthtrack.metrics import evaluate
from depthtrack.scoring import ScoreWeights
from depthtrack.simulator import builtin_scenarios, render
from depthtrack.tracker import TrackerConfig, run_sequence


def main() -> None:
    seq = Path(tempfile.mkdtemp(prefix="depthtrack-demo-"))
    render(builtin_scenarios(seed=1)["cross-depth"], seq)
    bundle = load_bundle(seq)
    gt = read_mot(seq / "gt.txt")

    for label, w_depth in (("with depth cue", 1.0), ("depth cue off", 0.0)):
        config = TrackerConfig(weights=ScoreWeights(w_depth=w_depth))
        report = evaluate(gt, run_sequence(bundle, config))
        print(f"{label:15s}  IDF1 {report.idf1:.3f}  switches {report.idsw}")

    print()
    print("Without depth the tracker swaps the two identities at the")
    print("pillar; with depth the per-box depth histograms keep them")
    print("apart even though boxes, masks, and embeddings all agree.")


if __name__ == "__main__":
    main()
