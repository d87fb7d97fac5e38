"""Adapter tests: backends, writers, CLI, and core-validator conformance."""

import numpy as np
import pytest
from PIL import Image

from feature_adapter.cli import main
from feature_adapter.config import AdapterConfig, load_config
from feature_adapter.extract import (
    extract_depth,
    extract_embeddings,
    extract_masks,
)
from feature_adapter.io import read_detections, rle_encode

# The tracker's readers are the reference validators for every format
# the adapter emits.
from depthtrack.geometry import rle_decode
from depthtrack.io_formats import (
    load_bundle,
    read_depth_pgm,
    read_embeddings,
    read_masks,
)

WIDTH, HEIGHT, FRAMES = 64, 48, 10


def _box_at(frame, which):
    """Two rectangles drifting right/left across the 10-frame clip."""
    if which == 0:
        return (4.0 + 3.0 * (frame - 1), 8.0, 12.0, 16.0)
    return (44.0 - 2.0 * (frame - 1), 26.0, 10.0, 14.0)


@pytest.fixture(scope="module")
def clip(tmp_path_factory):
    """A 10-frame synthetic clip: bright objects on a dark textured
    background, plus det.txt and seqinfo.txt."""
    seq = tmp_path_factory.mktemp("clip")
    rng = np.random.default_rng(11)
    det_lines = []
    for frame in range(1, FRAMES + 1):
        img = (rng.uniform(0.05, 0.2, (HEIGHT, WIDTH, 3)) * 255)
        for which, color in ((0, (250, 120, 60)), (1, (70, 160, 250))):
            left, top, w, h = _box_at(frame, which)
            x0, y0 = int(left), int(top)
            img[y0:y0 + int(h), x0:x0 + int(w)] = color
            det_lines.append(
                f"{frame},-1,{left:.2f},{top:.2f},{w:.2f},{h:.2f},"
                f"0.900000,-1,-1,-1")
        Image.fromarray(img.astype(np.uint8)).save(seq / f"{frame:06d}.png")
    (seq / "det.txt").write_text("\n".join(det_lines) + "\n")
    (seq / "seqinfo.txt").write_text(
        f"width={WIDTH}\nheight={HEIGHT}\nframes={FRAMES}\n")
    return seq


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None)
        assert cfg.emb_dim == 16 and cfg.depth_backend == "luminance"

    def test_unknown_key_named(self, tmp_path):
        p = tmp_path / "a.cfg"
        p.write_text("bogus=1\n")
        with pytest.raises(ValueError, match="bogus"):
            load_config(p)

    def test_file_overrides(self, tmp_path):
        p = tmp_path / "a.cfg"
        p.write_text("emb_dim=9\nreid_backend=colorhist\n")
        assert load_config(p).emb_dim == 9


class TestRle:
    def test_round_trip_against_core_decoder(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            grid = rng.random((6, 9)) < 0.4
            runs = rle_encode(grid)
            from depthtrack.geometry import Mask
            decoded = rle_decode(Mask(width=9, height=6, runs=tuple(runs)))
            assert np.array_equal(decoded, grid)


class TestDepth:
    def test_frame_count_matches(self, clip):
        n = extract_depth(clip, AdapterConfig())
        assert n == FRAMES
        for frame in range(1, FRAMES + 1):
            dmap = read_depth_pgm(clip / "depth" / f"{frame:06d}.pgm")
            assert (dmap.width, dmap.height) == (WIDTH, HEIGHT)

    def test_constant_image_still_valid(self, tmp_path):
        Image.new("RGB", (8, 6), (128, 128, 128)).save(tmp_path / "000001.png")
        (tmp_path / "det.txt").write_text("")
        assert extract_depth(tmp_path, AdapterConfig()) == 1
        dmap = read_depth_pgm(tmp_path / "depth" / "000001.pgm")
        assert (dmap.depth > 0).all()


class TestEmbeddings:
    def test_record_count_and_unit_norm(self, clip):
        count = extract_embeddings(clip, AdapterConfig())
        dets = read_detections(clip / "det.txt")
        assert count == sum(len(v) for v in dets.values())
        dim, records, warnings = read_embeddings(clip / "emb.dte")
        assert dim == 16 and len(records) == count and warnings == 0
        for _, _, vec in records:
            assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-4)

    def test_crop_outside_gives_zero_and_warning(self, clip, tmp_path, capsys):
        det = tmp_path / "seq"
        det.mkdir()
        for p in clip.glob("0000*.png"):
            (det / p.name).write_bytes(p.read_bytes())
        (det / "det.txt").write_text(
            "1,-1,500.00,500.00,10.00,10.00,0.900000,-1,-1,-1\n")
        extract_embeddings(det, AdapterConfig())
        assert "warn:" in capsys.readouterr().err
        _, records, _ = read_embeddings(det / "emb.dte")
        assert np.allclose(records[0][2], 0.0)


class TestMasks:
    def test_self_lines_and_back_lines(self, clip):
        extract_masks(clip, AdapterConfig())
        records = read_masks(clip / "masks.txt")
        dets = read_detections(clip / "det.txt")
        selfs = {(f, i) for f, i, kind, _ in records if kind == "self"}
        backs = {(f, i) for f, i, kind, _ in records if kind == "back"}
        expected = {(f, i) for f, rows in dets.items()
                    for i in range(len(rows))}
        assert selfs == expected  # every detection yields a self line
        assert backs == {(f, i) for f, i in expected if f > 1}

    def test_containment_rate(self, clip):
        extract_masks(clip, AdapterConfig())
        records = read_masks(clip / "masks.txt")
        dets = read_detections(clip / "det.txt")
        contained = total = 0
        for frame, idx, kind, mask in records:
            if kind != "self":
                continue
            total += 1
            box = dets[frame][idx]
            grid = rle_decode(mask)
            ys, xs = np.nonzero(grid)
            if ys.size == 0:
                continue
            if (xs.min() >= int(box.left) and ys.min() >= int(box.top)
                    and xs.max() < box.left + box.width
                    and ys.max() < box.top + box.height):
                contained += 1
        assert contained / total >= 0.95


class TestCli:
    def test_extract_all(self, clip, capsys):
        assert main(["extract", "--seq", str(clip), "--what", "all"]) == 0
        out = capsys.readouterr().out
        assert "depth: 10 frames" in out

    def test_unknown_backend_exit_1(self, clip, tmp_path, capsys):
        cfg = tmp_path / "a.cfg"
        cfg.write_text("depth_backend=resnet\n")
        code = main(["extract", "--seq", str(clip), "--what", "depth",
                     "--config", str(cfg)])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_frames_exit_1(self, tmp_path, capsys):
        code = main(["extract", "--seq", str(tmp_path), "--what", "depth"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestConformance:
    """[acceptance] All three sidecars pass the tracker's validators on
    a 10-frame clip."""

    def test_full_bundle_loads(self, clip):
        config = AdapterConfig()
        assert extract_depth(clip, config) == FRAMES
        extract_embeddings(clip, config)
        extract_masks(clip, config)
        bundle = load_bundle(clip)
        assert bundle.has_embeddings and bundle.has_depth and bundle.has_masks
        assert bundle.embedding_dim == config.emb_dim
        assert set(bundle.depth_maps) == set(range(1, FRAMES + 1))
        assert not any("renormalized" in n for n in bundle.notices)
