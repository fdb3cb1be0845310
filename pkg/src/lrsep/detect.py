"""Per-pixel target detection and ROC/AUC evaluation.

Two detectors are provided.  The direct detector scores each pixel by the l2
norm of its row in the recovered sparse component, so the exact nonzero
support carries the detection but the map stays threshold-able.  The
window-based detector runs a binary hypothesis test per pixel: reconstruct
the spectrum with a background-only dictionary (sampled from a concentric
window of the recovered background, center excluded) and with the background
plus target union dictionary, and score by the drop in reconstruction
residual.  Sparse coding uses orthogonal matching pursuit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dictionaries import BackgroundDictionary, TargetDictionary, build_background_dictionary
from .hsi import HsiCube
from .pgm import write_pgm16

DB_FLOOR = -120.0


@dataclass(frozen=True)
class DetectionMap:
    """Per-pixel detection scores, higher = more target-like."""

    scores: np.ndarray  # (h, w)

    def __post_init__(self):
        arr = np.array(self.scores, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"scores must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("scores contain non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    @property
    def h(self) -> int:
        return self.scores.shape[0]

    @property
    def w(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class RocCurve:
    points: np.ndarray  # (n, 2) rows of (fpr, tpr), from (0,0) to (1,1)
    auc: float


@dataclass(frozen=True)
class OmpResult:
    coeffs: np.ndarray
    residual: np.ndarray
    support: tuple[int, ...]
    rank_deficient: bool


def strategy_two_scores(s: np.ndarray, h: int, w: int) -> DetectionMap:
    """Score each pixel by the l2 norm of its row of the sparse component."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != h * w:
        raise ValueError(f"sparse matrix has shape {s.shape}, expected ({h * w}, p)")
    row_norms = np.linalg.norm(s, axis=1)
    return DetectionMap(row_norms.reshape(w, h).T)


def omp(y: np.ndarray, dictionary: np.ndarray, sparsity: int) -> OmpResult:
    """Greedy orthogonal matching pursuit with atoms correlated as-is.

    Each round picks the atom with the largest absolute correlation to the
    current residual, re-solves least squares on the selected set, and updates
    the residual.  A rank-deficient selected set falls back to the
    minimum-norm solution and is flagged.
    """
    y = np.asarray(y, dtype=np.float64)
    dictionary = np.asarray(dictionary, dtype=np.float64)
    n = dictionary.shape[1]
    if sparsity < 1 or sparsity > n:
        raise ValueError(f"sparsity must be in [1, {n}], got {sparsity}")
    support: list[int] = []
    residual = y.copy()
    sol = np.zeros(0)
    rank_deficient = False
    for _ in range(sparsity):
        corr = dictionary.T @ residual
        j = int(np.argmax(np.abs(corr)))
        if corr[j] == 0.0 or j in support:
            break
        support.append(j)
        sub = dictionary[:, support]
        sol, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < len(support):
            rank_deficient = True
        residual = y - sub @ sol
    coeffs = np.zeros(n)
    if support:
        coeffs[support] = sol
    return OmpResult(coeffs=coeffs, residual=residual, support=tuple(support),
                     rank_deficient=rank_deficient)


def srbbh_score(x: np.ndarray, ab: BackgroundDictionary, at: TargetDictionary,
                kb: int = 4, kbt: int = 6) -> float:
    """Residual-difference binary hypothesis score for one pixel.

    H0 reconstructs x from background atoms only, H1 from the background plus
    target union; the score is the H0 residual norm minus the H1 residual
    norm, large when the target atoms explain x better.  Sparsity levels are
    clamped to the available atom counts (edge windows carry fewer atoms).
    """
    x = np.asarray(x, dtype=np.float64)
    if ab.n_atoms == 0:
        r0 = float(np.linalg.norm(x))
        union = at.atoms
    else:
        if ab.p != x.shape[0]:
            raise ValueError("background dictionary band count does not match pixel")
        r0 = float(np.linalg.norm(omp(x, ab.atoms, min(kb, ab.n_atoms)).residual))
        union = np.hstack([ab.atoms, at.atoms])
    r1 = float(np.linalg.norm(omp(x, union, min(kbt, union.shape[1])).residual))
    return r0 - r1


def strategy_one_detect(d_cube: HsiCube, background_cube: HsiCube, at: TargetDictionary,
                        m: int = 5, kb: int = 4, kbt: int = 6) -> DetectionMap:
    """Score every pixel of ``d_cube`` with the binary hypothesis test.

    The background dictionary is rebuilt per pixel from ``background_cube``
    (the recovered background, or the original cube in baseline mode); the
    test spectrum always comes from ``d_cube``.
    """
    if d_cube.data.shape != background_cube.data.shape:
        raise ValueError("cube shapes differ")
    if at.p != d_cube.p:
        raise ValueError("dictionary band count does not match the cube")
    h, w = d_cube.h, d_cube.w
    scores = np.empty((h, w))
    for r in range(h):
        for c in range(w):
            ab = build_background_dictionary(background_cube, (r, c), m)
            scores[r, c] = srbbh_score(d_cube.data[r, c, :], ab, at, kb, kbt)
    return DetectionMap(scores)


def roc(scores, truth) -> RocCurve:
    """ROC curve and trapezoidal AUC, sweeping thresholds over distinct scores.

    Tied scores share one threshold and are never split.  The truth mask must
    contain at least one positive and one negative.
    """
    s = scores.scores if isinstance(scores, DetectionMap) else np.asarray(scores, dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if s.shape != t.shape:
        raise ValueError("scores and truth shapes differ")
    s, t = s.ravel(), t.ravel()
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("truth mask needs at least one positive and one negative")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    tp = np.cumsum(t[order])
    fp = np.cumsum(~t[order])
    # keep only the last index of each tie group
    last = np.nonzero(np.diff(s_sorted) != 0)[0]
    idx = np.concatenate([last, [s.size - 1]])
    fpr = np.concatenate([[0.0], fp[idx] / n_neg])
    tpr = np.concatenate([[0.0], tp[idx] / n_pos])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(points=np.column_stack([fpr, tpr]), auc=auc)


def mean_power_db(cube: HsiCube, floor: float = DB_FLOOR) -> np.ndarray:
    """Per-pixel mean power over bands in dB, floored for all-zero pixels."""
    power = np.mean(cube.data ** 2, axis=2)
    out = np.full(power.shape, floor)
    nz = power > 0
    out[nz] = np.maximum(10.0 * np.log10(power[nz]), floor)
    return out


def write_detection_pgm(path, dmap: DetectionMap) -> None:
    write_pgm16(path, dmap.scores)


def write_detection_csv(path, dmap: DetectionMap) -> None:
    np.savetxt(path, dmap.scores, delimiter=",", fmt="%.17g")


def write_roc_csv(path, curve: RocCurve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in curve.points:
            writer.writerow([repr(float(fpr)), repr(float(tpr))])
        fh.write(f"# auc={curve.auc!r}\n")
