"""Target and locally adaptive background dictionaries.

Target spectra come from a CSV file (p rows, one column per sample, no
header).  Background atoms are sampled from the recovered background cube
inside a concentric window around the test pixel, center excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hsi import HsiCube


@dataclass(frozen=True)
class TargetDictionary:
    """p x Nt matrix whose columns are reference spectra of the sought material."""

    atoms: np.ndarray

    def __post_init__(self):
        arr = np.array(self.atoms, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"dictionary must be a p x Nt matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dictionary contains non-finite entries")
        col_norms = np.linalg.norm(arr, axis=0)
        if np.any(col_norms == 0.0):
            raise ValueError("dictionary contains an all-zero column")
        arr.setflags(write=False)
        object.__setattr__(self, "atoms", arr)

    @property
    def p(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class BackgroundDictionary:
    """Background atoms drawn from one spatial window, center pixel excluded."""

    atoms: np.ndarray  # (p, n); n == 0 allowed for a fully degenerate window
    window_size: int
    center: tuple[int, int]

    @property
    def p(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


def load_target_dictionary(path) -> TargetDictionary:
    """Load a CSV spectral library: p rows, Nt columns, no header."""
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except Exception as exc:
        raise ValueError(f"{path}: cannot parse dictionary CSV ({exc})") from exc
    if arr.size == 0:
        raise ValueError(f"{path}: empty dictionary file")
    return TargetDictionary(arr)


def save_spectra_csv(path, spectra: np.ndarray) -> None:
    """Write spectra as dictionary-format CSV (p rows, one column per spectrum)."""
    arr = np.asarray(spectra, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    np.savetxt(path, arr, delimiter=",", fmt="%.17g")


def mean_spectrum(samples) -> np.ndarray:
    """Elementwise arithmetic mean of a non-empty list of equal-length spectra."""
    samples = [np.asarray(s, dtype=np.float64) for s in samples]
    if not samples:
        raise ValueError("mean_spectrum needs at least one sample")
    n = samples[0].shape
    if any(s.shape != n for s in samples):
        raise ValueError("samples have mismatched lengths")
    return np.mean(np.stack(samples), axis=0)


def build_background_dictionary(background: HsiCube, center: tuple[int, int], m: int) -> BackgroundDictionary:
    """Collect the spectra of an m x m window around ``center``, center excluded.

    Windows overhanging the image edge are clipped, so edge pixels yield
    fewer than m*m - 1 atoms.  Atom order follows the package pixel order
    (column-major within the window).
    """
    if m % 2 == 0 or m < 3:
        raise ValueError(f"window size must be odd and >= 3, got {m}")
    h, w = background.h, background.w
    r0, c0 = int(center[0]), int(center[1])
    if not (0 <= r0 < h and 0 <= c0 < w):
        raise ValueError(f"center {center} outside image of shape {(h, w)}")
    half = m // 2
    rows = range(max(0, r0 - half), min(h, r0 + half + 1))
    cols = range(max(0, c0 - half), min(w, c0 + half + 1))
    atoms = [background.data[r, c, :] for c in cols for r in rows if (r, c) != (r0, c0)]
    if atoms:
        mat = np.stack(atoms, axis=1)
    else:
        mat = np.empty((background.p, 0))
    return BackgroundDictionary(mat, window_size=m, center=(r0, c0))
