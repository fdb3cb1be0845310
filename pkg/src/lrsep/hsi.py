"""Cube and matrix containers plus the pixel-ordering conventions shared package-wide.

A scene is an (h, w, p) float64 array: h rows, w columns, p spectral bands.
The 2-D working matrix has one row per pixel with the pixels taken in
column-major spatial order, i.e. pixel (r, c) sits at row c*h + r.  Every
module in this package relies on this single ordering.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HCUBE_MAGIC = b"HCUB"
HCUBE_VERSION = 1
_HCUBE_HEADER = struct.Struct("<HIII")  # version, h, w, p (after the 4 magic bytes)


@dataclass(frozen=True)
class HsiCube:
    """Immutable (h, w, p) reflectance cube.

    ``band_mask`` records which original 1-based band indices remain after
    band removal; ``None`` means no removal has been applied.
    """

    data: np.ndarray
    band_mask: tuple[int, ...] | None = None

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3:
            raise ValueError(f"cube data must be 3-D (h, w, p), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"all cube dimensions must be >= 1, got {arr.shape}")
        if self.band_mask is not None:
            mask = tuple(int(i) for i in self.band_mask)
            if len(mask) != arr.shape[2]:
                raise ValueError("band_mask length must equal the band count")
            object.__setattr__(self, "band_mask", mask)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def p(self) -> int:
        return self.data.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.h * self.w


def flatten(cube: HsiCube) -> np.ndarray:
    """Rearrange a cube into its (h*w, p) pixel-by-band matrix.

    Pixel (r, c) maps to row c*h + r (column-major spatial order).
    """
    h, w, p = cube.data.shape
    return np.ascontiguousarray(cube.data.transpose(1, 0, 2).reshape(w * h, p))


def unflatten(m: np.ndarray, h: int, w: int, band_mask=None) -> HsiCube:
    """Inverse of :func:`flatten`: rebuild the (h, w, p) cube from an (h*w, p) matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if m.shape[0] != h * w:
        raise ValueError(f"matrix has {m.shape[0]} rows, expected h*w = {h * w}")
    data = m.reshape(w, h, m.shape[1]).transpose(1, 0, 2)
    return HsiCube(data, band_mask=band_mask)


def normalize(cube: HsiCube) -> HsiCube:
    """Scale the whole cube affinely onto [0, 1] with one global min and max.

    A constant cube maps to all zeros.  Non-finite values are rejected.
    """
    if not np.all(np.isfinite(cube.data)):
        raise ValueError("cube contains NaN or Inf values")
    lo = float(cube.data.min())
    hi = float(cube.data.max())
    if hi == lo:
        return HsiCube(np.zeros_like(cube.data), band_mask=cube.band_mask)
    return HsiCube((cube.data - lo) / (hi - lo), band_mask=cube.band_mask)


def parse_band_ranges(text: str) -> list[int]:
    """Parse a band-removal string like ``"1-4,104-113,148-167"`` into 1-based indices."""
    indices: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk:
            lo_s, hi_s = chunk.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError(f"empty band range {chunk!r}")
            indices.extend(range(lo, hi + 1))
        else:
            indices.append(int(chunk))
    return indices


def apply_band_mask(cube: HsiCube, removed) -> HsiCube:
    """Delete the listed 1-based band indices from the cube.

    ``removed`` is an iterable of 1-based indices (duplicates allowed).
    Removing every band is an error.  The surviving original band numbers
    are recorded on the returned cube.
    """
    removed = sorted({int(i) for i in removed})
    p = cube.p
    for i in removed:
        if not 1 <= i <= p:
            raise ValueError(f"band index {i} outside [1, {p}]")
    if len(removed) == p:
        raise ValueError("cannot remove every band")
    keep = [i for i in range(1, p + 1) if i not in set(removed)]
    prior = cube.band_mask if cube.band_mask is not None else tuple(range(1, p + 1))
    new_mask = tuple(prior[i - 1] for i in keep)
    keep0 = [i - 1 for i in keep]
    return HsiCube(cube.data[:, :, keep0], band_mask=new_mask)


def write_hcube(path, cube: HsiCube) -> None:
    """Write a cube as an HCUBE binary file (magic, version, dims, float64 payload)."""
    flat = flatten(cube)
    with open(path, "wb") as fh:
        fh.write(HCUBE_MAGIC)
        fh.write(_HCUBE_HEADER.pack(HCUBE_VERSION, cube.h, cube.w, cube.p))
        fh.write(flat.astype("<f8").tobytes())


def read_hcube(path) -> HsiCube:
    """Read an HCUBE binary file, rejecting wrong magic, version, or payload size."""
    raw = Path(path).read_bytes()
    header_len = 4 + _HCUBE_HEADER.size
    if len(raw) < header_len or raw[:4] != HCUBE_MAGIC:
        raise ValueError(f"{path}: not an HCUBE file")
    version, h, w, p = _HCUBE_HEADER.unpack_from(raw, 4)
    if version != HCUBE_VERSION:
        raise ValueError(f"{path}: unsupported HCUBE version {version}")
    expect = header_len + h * w * p * 8
    if len(raw) != expect:
        raise ValueError(f"{path}: payload is {len(raw) - header_len} bytes, expected {expect - header_len}")
    flat = np.frombuffer(raw, dtype="<f8", offset=header_len, count=h * w * p)
    return unflatten(flat.reshape(h * w, p), h, w)
