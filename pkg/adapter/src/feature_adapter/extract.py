"""The three extraction passes: depth maps, embeddings, masks."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .backends import (
    DEPTH_BACKENDS,
    REID_BACKENDS,
    SEG_BACKENDS,
    get_backend,
)
from .config import AdapterConfig
from .io import (
    find_frames,
    load_frame,
    read_detections,
    rle_encode,
    write_depth_pgm,
    write_embeddings,
    write_masks,
)


def warn(message: str) -> None:
    print(f"warn: {message}", file=sys.stderr)


def _out_dir(seq_dir: Path, config: AdapterConfig) -> Path:
    return Path(config.out_dir) if config.out_dir else seq_dir


def extract_depth(seq_dir: Path, config: AdapterConfig) -> int:
    """One 16-bit millimeter PGM per frame; returns frames written."""
    backend = get_backend(DEPTH_BACKENDS, config.depth_backend)
    frames = find_frames(seq_dir)
    out = _out_dir(seq_dir, config) / "depth"
    clamped = 0
    for idx in sorted(frames):
        depth_m = backend(load_frame(frames[idx]))
        clamped += write_depth_pgm(out / f"{idx:06d}.pgm", depth_m)
    if clamped:
        warn(f"clamped {clamped} depth samples beyond 65.535 m")
    return len(frames)


def extract_embeddings(seq_dir: Path, config: AdapterConfig) -> int:
    """One unit-norm vector per detection; returns record count."""
    backend = get_backend(REID_BACKENDS, config.reid_backend)
    frames = find_frames(seq_dir)
    detections = read_detections(seq_dir / "det.txt")
    records = []
    outside = 0
    for frame in sorted(detections):
        if frame not in frames:
            raise ValueError(f"det.txt references frame {frame} "
                             f"with no image")
        rgb = load_frame(frames[frame])
        for det_index, box in enumerate(detections[frame]):
            vec = backend(rgb, box, config.emb_dim)
            if vec is None:
                vec = np.zeros(config.emb_dim)
                outside += 1
            records.append((frame, det_index, vec))
    if outside:
        warn(f"{outside} crops outside the image: zero embeddings emitted")
    write_embeddings(_out_dir(seq_dir, config) / "emb.dte",
                     config.emb_dim, records)
    return len(records)


def extract_masks(seq_dir: Path, config: AdapterConfig) -> int:
    """Self mask per detection plus a backward-propagated mask for
    frames after the first; returns the number of lines written."""
    backend = get_backend(SEG_BACKENDS, config.seg_backend)
    frames = find_frames(seq_dir)
    detections = read_detections(seq_dir / "det.txt")
    first_frame = min(frames)
    records = []
    failures = 0
    for frame in sorted(detections):
        if frame not in frames:
            raise ValueError(f"det.txt references frame {frame} "
                             f"with no image")
        rgb = load_frame(frames[frame])
        prev = load_frame(frames[frame - 1]) if frame - 1 in frames else None
        height, width = rgb.shape[:2]
        for det_index, box in enumerate(detections[frame]):
            grid = backend(rgb, box)
            if grid is None:
                grid = np.zeros((height, width), dtype=bool)
            records.append((frame, det_index, "self", width, height,
                            rle_encode(grid)))
            if frame == first_frame:
                continue
            if prev is None:
                failures += 1
                continue
            back = backend(prev, box)  # same box, previous frame
            if back is None:
                failures += 1
                continue
            ph, pw = prev.shape[:2]
            records.append((frame, det_index, "back", pw, ph,
                            rle_encode(back)))
    if failures:
        warn(f"backward propagation failed for {failures} detections")
    write_masks(_out_dir(seq_dir, config) / "masks.txt", records)
    return len(records)
