"""Minimal plain-text (P2) PGM reading and writing for score maps and masks."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_pgm16(path, values: np.ndarray) -> None:
    """Write a float array as a 16-bit P2 PGM, min-max scaled to [0, 65535]."""
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        scaled = np.round((arr - lo) / (hi - lo) * 65535).astype(np.int64)
    else:
        scaled = np.zeros(arr.shape, dtype=np.int64)
    _write_p2(path, scaled, 65535)


def write_pgm_mask(path, mask: np.ndarray) -> None:
    """Write a boolean mask as a P2 PGM with maxval 1."""
    _write_p2(path, np.asarray(mask).astype(np.int64), 1)


def _write_p2(path, pixels: np.ndarray, maxval: int) -> None:
    h, w = pixels.shape
    lines = [f"P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(v) for v in row) for row in pixels]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    """Read a plain (P2) PGM into an integer array of shape (h, w)."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        body = line.split("#", 1)[0]
        tokens.extend(body.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain P2 PGM")
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    w, h, _maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = tokens[4:]
    if len(data) != w * h:
        raise ValueError(f"{path}: expected {w * h} pixels, got {len(data)}")
    return np.array([int(t) for t in data], dtype=np.int64).reshape(h, w)


def read_pgm_mask(path) -> np.ndarray:
    """Read a PGM and threshold at > 0 into a boolean mask."""
    return read_pgm(path) > 0
