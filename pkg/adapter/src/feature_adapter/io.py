"""Frame loading and sidecar writers.

The writers mirror the tracker's file contracts:

- emb.dte: magic "DTE1", u32 little-endian dim, u32 record count, then
  (u32 frame, u32 det_index, dim x f32 little-endian) per record.
- depth/%06d.pgm: binary P5, maxval 65535, big-endian samples in
  millimeters, 0 = invalid.
- masks.txt: lines "frame,det,kind,width,height,run,run,...", kind in
  {self, back}, column-major runs starting with the background.

All outputs are written atomically (temp file + rename).
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

DEPTH_SCALE = 1000.0  # meters -> millimeters
DEPTH_MAX_M = 65.535


@dataclass(frozen=True)
class DetBox:
    frame: int
    left: float
    top: float
    width: float
    height: float


def read_detections(path: str | Path) -> dict[int, list[DetBox]]:
    """MOT CSV detections grouped by frame, in file order per frame."""
    out: dict[int, list[DetBox]] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 10:
            raise ValueError(
                f"{path}:{lineno}: expected 10 fields, got {len(parts)}")
        frame = int(parts[0])
        left, top, width, height = (float(p) for p in parts[2:6])
        out.setdefault(frame, []).append(
            DetBox(frame, left, top, width, height))
    return out


def find_frames(seq_dir: str | Path) -> dict[int, Path]:
    """Locate frame images: img1/, frames/, or the directory itself.

    File stems must be integers (e.g. 000001.png); any format Pillow
    reads is accepted.
    """
    seq_dir = Path(seq_dir)
    for sub in ("img1", "frames", "."):
        root = seq_dir / sub
        if not root.is_dir():
            continue
        frames: dict[int, Path] = {}
        for p in root.iterdir():
            if not p.is_file():
                continue
            try:
                idx = int(p.stem)
            except ValueError:
                continue
            if idx in frames:
                raise ValueError(f"duplicate frame number {idx} in {root}")
            frames[idx] = p
        if frames:
            return frames
    raise FileNotFoundError(f"no frame images found under {seq_dir}")


def load_frame(path: Path) -> np.ndarray:
    """RGB float array in [0, 1], shape (height, width, 3)."""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=float) / 255.0
    return rgb


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_depth_pgm(path: Path, depth_m: np.ndarray) -> int:
    """16-bit millimeter PGM; returns how many samples were clamped."""
    height, width = depth_m.shape
    mm = np.round(depth_m * DEPTH_SCALE)
    clamped = int((mm > 65535).sum())
    samples = np.clip(mm, 0, 65535).astype(">u2")
    header = f"P5\n{width} {height}\n65535\n".encode()
    _atomic_write(path, header + samples.tobytes())
    return clamped


def write_embeddings(path: Path, dim: int,
                     records: list[tuple[int, int, np.ndarray]]) -> None:
    parts = [b"DTE1", struct.pack("<II", dim, len(records))]
    for frame, det_index, vec in records:
        vec = np.asarray(vec, dtype="<f4")
        if vec.shape != (dim,):
            raise ValueError(f"embedding dim {vec.shape} != header dim {dim}")
        parts.append(struct.pack("<II", frame, det_index))
        parts.append(vec.tobytes())
    _atomic_write(path, b"".join(parts))


def rle_encode(grid: np.ndarray) -> list[int]:
    """Column-major run lengths, starting with a (possibly zero)
    background run."""
    flat = np.asarray(grid, dtype=bool).T.ravel()
    runs: list[int] = []
    value = False
    count = 0
    for bit in flat:
        if bit == value:
            count += 1
        else:
            runs.append(count)
            value = bit
            count = 1
    runs.append(count)
    return runs


def write_masks(path: Path,
                records: list[tuple[int, int, str, int, int, list[int]]]) -> None:
    """records: (frame, det_index, kind, width, height, runs)."""
    lines = []
    for frame, det_index, kind, width, height, runs in records:
        run_text = ",".join(str(r) for r in runs)
        lines.append(f"{frame},{det_index},{kind},{width},{height},{run_text}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode())
