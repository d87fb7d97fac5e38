"""Readers and writers for MOT tables and perception sidecar files.

A sequence lives in one directory:

    det.txt          MOT detections (id = -1)
    gt.txt           optional ground truth
    seqinfo.txt      key=value: width, height, frames
    emb.dte          optional embedding sidecar (binary, little-endian)
    depth/000001.pgm optional per-frame 16-bit depth maps (millimeters)
    masks.txt        optional RLE mask sidecar (text)

All writers emit canonical formatting (2 decimals for geometry, 6 for
confidence) so outputs are byte-diffable across platforms.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import DepthMap, normalize
from .geometry import Mask, MaskError

EMB_MAGIC = b"DTE1"
DEPTH_SCALE = 1000.0  # PGM samples are millimeters
DEPTH_MAX_M = 65.535


class FormatError(ValueError):
    """Malformed input file; message carries file and line/offset context."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class MotRow:
    frame: int
    track_id: int
    left: float
    top: float
    width: float
    height: float
    conf: float
    x: float = -1.0
    y: float = -1.0
    z: float = -1.0

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")


def format_mot_row(row: MotRow) -> str:
    return (f"{row.frame},{row.track_id},"
            f"{row.left:.2f},{row.top:.2f},{row.width:.2f},{row.height:.2f},"
            f"{row.conf:.6f},{row.x:g},{row.y:g},{row.z:g}")


def write_mot(path, rows: list[MotRow]) -> None:
    with open(path, "w") as f:
        for row in rows:
            f.write(format_mot_row(row) + "\n")


def read_mot(path) -> list[MotRow]:
    rows = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 10:
                raise FormatError(f"expected 10 fields, got {len(parts)}",
                                  path, lineno)
            try:
                frame = int(parts[0])
                track_id = int(parts[1])
                vals = [float(p) for p in parts[2:]]
            except ValueError as e:
                raise FormatError(f"bad field: {e}", path, lineno) from None
            if frame < 1:
                raise FormatError(f"frame must be >= 1, got {frame}", path, lineno)
            if vals[2] < 0 or vals[3] < 0:
                raise FormatError("negative box size", path, lineno)
            rows.append(MotRow(frame, track_id, *vals))
    return rows


# --- embedding sidecar -------------------------------------------------------

def write_embeddings(path, dim: int,
                     records: list[tuple[int, int, np.ndarray]]) -> None:
    """records: (frame, det_index, vector) triples."""
    with open(path, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(struct.pack("<II", dim, len(records)))
        for frame, det_index, vec in records:
            vec = np.asarray(vec, dtype="<f4")
            if vec.shape != (dim,):
                raise ValueError(f"vector dim {vec.shape} != {dim}")
            f.write(struct.pack("<II", frame, det_index))
            f.write(vec.tobytes())


def read_embeddings(path):
    """Returns (dim, records, renorm_warnings)."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != EMB_MAGIC:
        raise FormatError("bad magic, not an embedding sidecar", path)
    dim, count = struct.unpack_from("<II", data, 4)
    rec_size = 8 + 4 * dim
    if len(data) != 12 + count * rec_size:
        raise FormatError(
            f"truncated: expected {12 + count * rec_size} bytes, got {len(data)}",
            path)
    records = []
    warnings = 0
    off = 12
    for _ in range(count):
        frame, det_index = struct.unpack_from("<II", data, off)
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off + 8).astype(float)
        n = np.linalg.norm(vec)
        if abs(n - 1.0) > 1e-4:
            vec = normalize(vec)
            warnings += 1
        records.append((frame, det_index, vec))
        off += rec_size
    return dim, records, warnings


# --- depth maps (16-bit binary PGM, millimeters) -----------------------------

def write_depth_pgm(path, dmap: DepthMap) -> int:
    """Writes meters as 16-bit millimeter samples; returns clamp count."""
    mm = np.round(dmap.depth * DEPTH_SCALE)
    clamped = int((mm > 65535).sum())
    mm = np.clip(mm, 0, 65535).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{dmap.width} {dmap.height}\n65535\n".encode())
        f.write(mm.tobytes())
    return clamped


def read_depth_pgm(path) -> DepthMap:
    data = Path(path).read_bytes()
    # Header: magic, width, height, maxval as whitespace-separated tokens.
    tokens = []
    off = 0
    while len(tokens) < 4:
        while off < len(data) and data[off:off + 1].isspace():
            off += 1
        if off < len(data) and data[off:off + 1] == b"#":
            while off < len(data) and data[off:off + 1] != b"\n":
                off += 1
            continue
        start = off
        while off < len(data) and not data[off:off + 1].isspace():
            off += 1
        if off == start:
            raise FormatError("truncated PGM header", path)
        tokens.append(data[start:off])
    off += 1  # single whitespace after maxval
    if tokens[0] != b"P5":
        raise FormatError(f"not a binary PGM (magic {tokens[0]!r})", path)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("non-numeric PGM header field", path) from None
    if maxval != 65535:
        raise FormatError(f"maxval must be 65535, got {maxval}", path)
    if width <= 0 or height <= 0:
        raise FormatError("PGM dimensions must be positive", path)
    expected = width * height * 2
    payload = data[off:]
    if len(payload) != expected:
        raise FormatError(
            f"pixel payload {len(payload)} bytes, expected {expected}", path)
    samples = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    return DepthMap(width=width, height=height,
                    depth=samples.astype(float) / DEPTH_SCALE)


# --- mask sidecar ------------------------------------------------------------

def format_mask_line(frame: int, det_index: int, kind: str, mask: Mask) -> str:
    runs = ",".join(str(r) for r in mask.runs)
    return f"{frame},{det_index},{kind},{mask.width},{mask.height},{runs}"


def write_masks(path, records: list[tuple[int, int, str, Mask]]) -> None:
    with open(path, "w") as f:
        for frame, det_index, kind, mask in records:
            f.write(format_mask_line(frame, det_index, kind, mask) + "\n")


def read_masks(path) -> list[tuple[int, int, str, Mask]]:
    records = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            # Runs may be comma- or space-separated.
            parts = line.replace(" ", ",").split(",")
            if len(parts) < 6:
                raise FormatError("expected frame,det,kind,w,h,runs...",
                                  path, lineno)
            kind = parts[2]
            if kind not in ("self", "back"):
                raise FormatError(f"mask kind must be self|back, got {kind!r}",
                                  path, lineno)
            try:
                frame = int(parts[0])
                det_index = int(parts[1])
                width = int(parts[3])
                height = int(parts[4])
                runs = tuple(int(p) for p in parts[5:] if p != "")
            except ValueError as e:
                raise FormatError(f"bad field: {e}", path, lineno) from None
            try:
                mask = Mask(width=width, height=height, runs=runs)
            except (MaskError, ValueError) as e:
                raise FormatError(str(e), path, lineno) from None
            records.append((frame, det_index, kind, mask))
    return records


# --- seqinfo and run configuration (flat key=value) --------------------------

def read_keyvalues(path) -> dict[str, str]:
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError("expected key=value", path, lineno)
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def write_keyvalues(path, items: dict) -> None:
    with open(path, "w") as f:
        for key, value in items.items():
            f.write(f"{key}={value}\n")


def read_seqinfo(path) -> tuple[int, int, int]:
    kv = read_keyvalues(path)
    try:
        width = int(kv["width"])
        height = int(kv["height"])
        frames = int(kv["frames"])
    except KeyError as e:
        raise FormatError(f"seqinfo missing key {e}", path) from None
    except ValueError as e:
        raise FormatError(f"seqinfo bad value: {e}", path) from None
    if width <= 0 or height <= 0 or frames < 0:
        raise FormatError("seqinfo values out of range", path)
    return width, height, frames


# --- sequence bundle ---------------------------------------------------------

@dataclass
class SequenceBundle:
    width: int
    height: int
    frames: int
    detections: dict[int, list[MotRow]]
    embeddings: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    embedding_dim: int | None = None
    depth_maps: dict[int, DepthMap] = field(default_factory=dict)
    self_masks: dict[tuple[int, int], Mask] = field(default_factory=dict)
    back_masks: dict[tuple[int, int], Mask] = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)

    @property
    def has_embeddings(self) -> bool:
        return self.embedding_dim is not None

    @property
    def has_depth(self) -> bool:
        return bool(self.depth_maps)

    @property
    def has_masks(self) -> bool:
        return bool(self.self_masks or self.back_masks)


def depth_frame_path(seq_dir, frame: int) -> Path:
    return Path(seq_dir) / "depth" / f"{frame:06d}.pgm"


def load_bundle(seq_dir) -> SequenceBundle:
    seq_dir = Path(seq_dir)
    det_path = seq_dir / "det.txt"
    info_path = seq_dir / "seqinfo.txt"
    if not info_path.exists():
        raise FormatError("missing seqinfo.txt", seq_dir)
    if not det_path.exists():
        raise FormatError("missing det.txt", seq_dir)
    width, height, frames = read_seqinfo(info_path)

    detections: dict[int, list[MotRow]] = {}
    for row in read_mot(det_path):
        if row.frame > frames:
            raise FormatError(f"detection frame {row.frame} > frames={frames}",
                              det_path)
        detections.setdefault(row.frame, []).append(row)

    bundle = SequenceBundle(width=width, height=height, frames=frames,
                            detections=detections)

    def det_exists(frame: int, idx: int) -> bool:
        return 0 <= idx < len(detections.get(frame, ()))

    emb_path = seq_dir / "emb.dte"
    if emb_path.exists():
        dim, records, warnings = read_embeddings(emb_path)
        bad = [(f, i) for f, i, _ in records if not det_exists(f, i)]
        if bad:
            raise FormatError(
                f"embedding records reference missing detections: {bad[:5]}",
                emb_path)
        bundle.embedding_dim = dim
        bundle.embeddings = {(f, i): v for f, i, v in records}
        if warnings:
            bundle.notices.append(f"renormalized {warnings} off-unit embeddings")
    else:
        bundle.notices.append("no emb.dte: appearance cue disabled")

    depth_dir = seq_dir / "depth"
    if depth_dir.is_dir():
        for frame in range(1, frames + 1):
            p = depth_frame_path(seq_dir, frame)
            if not p.exists():
                raise FormatError(f"missing depth map for frame {frame}", p)
            dmap = read_depth_pgm(p)
            if (dmap.width, dmap.height) != (width, height):
                raise FormatError(
                    f"depth map {dmap.width}x{dmap.height} != sequence "
                    f"{width}x{height}", p)
            bundle.depth_maps[frame] = dmap
        extra = sorted(depth_dir.glob("*.pgm"))
        if len(extra) != frames:
            raise FormatError(
                f"depth/ holds {len(extra)} maps, sequence has {frames} frames",
                depth_dir)
    else:
        bundle.notices.append("no depth/: depth cue disabled")

    masks_path = seq_dir / "masks.txt"
    if masks_path.exists():
        for frame, idx, kind, mask in read_masks(masks_path):
            if not det_exists(frame, idx):
                raise FormatError(
                    f"mask references missing detection ({frame}, {idx})",
                    masks_path)
            if kind == "self":
                bundle.self_masks[(frame, idx)] = mask
            else:
                bundle.back_masks[(frame, idx)] = mask
    else:
        bundle.notices.append("no masks.txt: mask cue disabled")

    return bundle
