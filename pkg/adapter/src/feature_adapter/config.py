"""Adapter configuration: backend choices, device, embedding dimension."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class AdapterConfig:
    depth_backend: str = "luminance"
    seg_backend: str = "otsu"
    reid_backend: str = "colorhist"
    device: str = "cpu"
    emb_dim: int = 16
    out_dir: str | None = None  # defaults to the sequence directory

    def __post_init__(self):
        if self.emb_dim < 3:
            raise ValueError("emb_dim must be >= 3")


def load_config(path: str | Path | None) -> AdapterConfig:
    """Flat key=value file; unknown keys are rejected by name."""
    if path is None:
        return AdapterConfig()
    fields = {f for f in AdapterConfig.__dataclass_fields__}
    kwargs: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in fields:
            raise ValueError(f"{path}:{lineno}: unknown config key: {key}")
        kwargs[key] = int(value) if key == "emb_dim" else value.strip()
    return AdapterConfig(**kwargs)
