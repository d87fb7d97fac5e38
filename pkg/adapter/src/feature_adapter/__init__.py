"""Offline perception adapter.

Reads a frame directory plus a detection table and emits the sidecar
files a file-based tracker consumes: dense depth maps, per-detection
segmentation masks (with backward propagation), and re-identification
embeddings.  Backends are pluggable; the builtin ones are classical
(no ML runtime), chosen so the adapter runs anywhere.
"""

__version__ = "0.1.0"
