"""Versioned parameter checkpoints.

A checkpoint is a flat name -> tensor map stored as an uncompressed .npz
archive with a JSON metadata header under a reserved key. Arrays round-trip
losslessly (binary float64); the header carries the format version plus any
caller metadata.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
_META_KEY = "__checkpoint_meta__"


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    if _META_KEY in arrays:
        raise ValueError(f"{_META_KEY!r} is reserved")
    header = {"format_version": FORMAT_VERSION, "meta": meta or {}}
    payload = {k: np.asarray(v) for k, v in arrays.items()}
    payload[_META_KEY] = np.array(json.dumps(header))
    np.savez(str(path), **payload)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(str(path), allow_pickle=False) as data:
        if _META_KEY not in data:
            raise ValueError(f"{path}: not a checkpoint (missing header)")
        header = json.loads(str(data[_META_KEY]))
        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        arrays = {k: data[k] for k in data.files if k != _META_KEY}
    return arrays, header.get("meta", {})
