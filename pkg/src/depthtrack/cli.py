"""Command-line entry point: track, simulate, eval, ablate.

Every command writes a JSON run manifest next to its main output
(config snapshot, input paths, tool version, per-stage timings) so any
result file can be reproduced byte-for-byte from the manifest alone.
Timings live only in the manifest; all other outputs depend exclusively
on the declared inputs.

Exit codes: 0 success, 1 input/validation error, 2 internal invariant
violation.  Diagnostics go to stderr with "error:"/"warn:" prefixes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .io_formats import FormatError, load_bundle, read_keyvalues, read_mot, write_mot
from .metrics import REPORT_CSV_HEADER, evaluate, report_csv_row
from .scoring import ScoreWeights
from .simulator import builtin_scenarios, parse_scenario, render
from .tracker import TrackerConfig, run_sequence

# The five cue configurations of the location/depth ablation, in the
# order their rows appear in the results table.
ABLATION_PRESETS: tuple[tuple[str, dict[str, str]], ...] = (
    ("mask-iou-only", {"location_cue": "mask", "w_depth": "0.0", "w_emb": "0.0"}),
    ("bbox-iou-only", {"location_cue": "bbox", "w_depth": "0.0", "w_emb": "0.0"}),
    ("has-only", {"location_cue": "has", "w_depth": "0.0", "w_emb": "0.0"}),
    ("bbox+depth", {"location_cue": "bbox", "w_depth": "1.0", "w_emb": "0.0"}),
    ("has+depth", {"location_cue": "has", "w_depth": "1.0", "w_emb": "0.0"}),
)

ABLATION_CSV_HEADER = "config,MOTA,IDF1,IDSW,FP,FN,status"


def warn(message: str) -> None:
    print(f"warn: {message}", file=sys.stderr)


def _write_manifest(out_path: Path, *, command: str, inputs: dict[str, str],
                    config: dict[str, str], timings: dict[str, float]) -> None:
    manifest = {
        "tool": "depthtrack",
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "config": config,
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
    }
    path = out_path.with_name(out_path.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_config(path: str | None) -> TrackerConfig:
    if path is None:
        return TrackerConfig()
    mapping = read_keyvalues(Path(path))
    return TrackerConfig.from_mapping(mapping)


def cmd_track(args: argparse.Namespace) -> int:
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    config = _load_config(args.config)
    bundle = load_bundle(Path(args.seq))
    for notice in bundle.notices:
        warn(notice)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rows = run_sequence(bundle, config)
    timings["track"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    out = Path(args.out)
    write_mot(out, rows)
    timings["write"] = time.perf_counter() - t0
    _write_manifest(out, command="track",
                    inputs={"seq": str(args.seq),
                            "config": str(args.config or "<defaults>")},
                    config=config.to_mapping(), timings=timings)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    timings: dict[str, float] = {}
    builtins = builtin_scenarios(seed=args.seed)
    if args.scenario in builtins:
        scenario = builtins[args.scenario]
    elif Path(args.scenario).is_file():
        scenario = parse_scenario(Path(args.scenario))
        scenario = dataclasses.replace(scenario, seed=args.seed)
    else:
        names = ", ".join(sorted(builtins))
        raise FormatError(
            f"unknown scenario {args.scenario!r}; builtins: {names}")
    t0 = time.perf_counter()
    out = Path(args.out)
    render(scenario, out)
    timings["render"] = time.perf_counter() - t0
    _write_manifest(out / "seqinfo.txt", command="simulate",
                    inputs={"scenario": str(args.scenario)},
                    config={"seed": str(args.seed),
                            "frames": str(scenario.frames)},
                    timings=timings)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    gt_path = Path(args.gt)
    gt = read_mot(gt_path)
    pred = read_mot(Path(args.pred))
    report = evaluate(gt, pred)
    timings["eval"] = time.perf_counter() - t0
    name = gt_path.parent.name or gt_path.stem
    out = Path(args.out)
    out.write_text(REPORT_CSV_HEADER + "\n" + report_csv_row(name, report) + "\n")
    _write_manifest(out, command="eval",
                    inputs={"gt": str(args.gt), "pred": str(args.pred)},
                    config={}, timings=timings)
    return 0


def _read_grid(path: str | None) -> list[tuple[str, dict[str, str]]]:
    """One configuration per non-empty line: `name: key=value key=value ...`
    (the `name:` part is optional).  `#` starts a comment."""
    if path is None:
        return []
    rows: list[tuple[str, dict[str, str]]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name = f"grid-{len(rows) + 1}"
        if ":" in line.split("=", 1)[0]:
            name, line = line.split(":", 1)
            name = name.strip()
        overrides: dict[str, str] = {}
        for token in line.split():
            if "=" not in token:
                raise FormatError("grid entries must be key=value",
                                  path=Path(path), line=lineno)
            key, value = token.split("=", 1)
            overrides[key.strip()] = value.strip()
        rows.append((name, overrides))
    return rows


def _missing_sidecar(bundle_flags: tuple[bool, bool, bool],
                     config: TrackerConfig) -> str | None:
    has_emb, has_depth, has_masks = bundle_flags
    if config.weights.w_emb > 0 and not has_emb:
        return "needs embeddings (emb.dte missing)"
    if config.weights.w_depth > 0 and not has_depth:
        return "needs depth maps (depth/ missing)"
    if config.location_cue in ("mask", "has") and not has_masks:
        return "needs masks (masks.txt missing)"
    return None


def _ablate_one(seq_dir: str, mapping: dict[str, str]) -> tuple[float, float, int, int, int]:
    """Worker: track one sequence under one configuration and evaluate."""
    config = TrackerConfig.from_mapping(mapping)
    bundle = load_bundle(Path(seq_dir))
    pred = run_sequence(bundle, config)
    gt = read_mot(Path(seq_dir) / "gt.txt")
    report = evaluate(gt, pred)
    return report.mota, report.idf1, report.idsw, report.fp, report.fn


def cmd_ablate(args: argparse.Namespace) -> int:
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    seq_dirs = [Path(s) for s in args.seq]
    bundles_flags = []
    for seq_dir in seq_dirs:
        bundle = load_bundle(seq_dir)
        if not (seq_dir / "gt.txt").is_file():
            raise FormatError("ablation needs ground truth", path=seq_dir / "gt.txt")
        bundles_flags.append(
            (bundle.has_embeddings, bundle.has_depth, bundle.has_masks))
    configs = list(ABLATION_PRESETS) + _read_grid(args.grid)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rows: list[str] = []
    jobs: list[tuple[int, str, dict[str, str]]] = []  # (config idx, seq, mapping)
    skipped: dict[int, str] = {}
    for ci, (name, overrides) in enumerate(configs):
        config = TrackerConfig.from_mapping(overrides)
        reasons = [_missing_sidecar(flags, config) for flags in bundles_flags]
        bad = next((r for r in reasons if r), None)
        if bad:
            skipped[ci] = bad
            continue
        for seq_dir in seq_dirs:
            jobs.append((ci, str(seq_dir), overrides))

    if args.jobs > 1 and jobs:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_ablate_one,
                                    [j[1] for j in jobs], [j[2] for j in jobs]))
    else:
        results = [_ablate_one(seq, mapping) for _, seq, mapping in jobs]

    per_config: dict[int, list[tuple[float, float, int, int, int]]] = {}
    for (ci, _, _), res in zip(jobs, results):
        per_config.setdefault(ci, []).append(res)
    for ci, (name, _) in enumerate(configs):
        if ci in skipped:
            rows.append(f"{name},,,,,,skipped: {skipped[ci]}")
            warn(f"config {name} skipped: {skipped[ci]}")
            continue
        group = per_config[ci]
        mota = sum(r[0] for r in group) / len(group)
        idf1 = sum(r[1] for r in group) / len(group)
        idsw = sum(r[2] for r in group)
        fp = sum(r[3] for r in group)
        fn = sum(r[4] for r in group)
        rows.append(f"{name},{mota:.6f},{idf1:.6f},{idsw},{fp},{fn},ok")
    timings["ablate"] = time.perf_counter() - t0

    out = Path(args.out)
    out.write_text(ABLATION_CSV_HEADER + "\n" + "\n".join(rows) + "\n")
    _write_manifest(out, command="ablate",
                    inputs={"seq": ";".join(str(s) for s in seq_dirs),
                            "grid": str(args.grid or "<none>")},
                    config={"jobs": str(args.jobs)}, timings=timings)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depthtrack",
        description="Depth-aware multi-object tracking over file-based inputs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="associate detections into tracks")
    p.add_argument("--seq", required=True, help="sequence bundle directory")
    p.add_argument("--config", help="key=value tracker config file")
    p.add_argument("--out", required=True, help="output MOT file")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("simulate", help="render a synthetic sequence")
    p.add_argument("--scenario", required=True,
                   help="builtin scenario name or scenario file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=1, help="RNG seed (default 1)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth MOT file")
    p.add_argument("--pred", required=True, help="predicted MOT file")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the cue-ablation presets")
    p.add_argument("--seq", required=True, action="append",
                   help="sequence bundle directory (repeatable)")
    p.add_argument("--grid", help="extra configurations, one per line")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers across sequences/configurations")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - invariant violations
        print(f"error: internal: {e!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
