"""Synthetic scene generation with ground truth.

Backgrounds are nonnegative low-rank matrices plus Gaussian noise, scaled
into [0, 1]; targets are implanted as convex blends alpha*t + (1-alpha)*b on
rectangular blocks.  All randomness comes from the counter-based Philox4x64-10
generator keyed by the scene seed, so scenes regenerate bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .hsi import HsiCube, flatten, unflatten

# Philox stream offsets: background matrices, noise, and target spectrum each
# draw from their own keyed stream so layout changes never reshuffle values.
_BG_STREAM = 0
_TARGET_STREAM = 1

PAPER_ALPHA_SWEEP = (0.01, 0.02, 0.05, 0.1, 0.3, 0.5, 0.8, 1.0)


@dataclass(frozen=True)
class SyntheticSpec:
    h: int
    w: int
    p: int
    rank: int
    sigma: float
    seed: int
    target: np.ndarray            # p-vector
    alpha: float
    blocks: tuple[tuple[int, int, int, int], ...]  # (top, left, height, width)

    def __post_init__(self):
        t = np.array(self.target, dtype=np.float64, copy=True)
        if t.shape != (self.p,):
            raise ValueError(f"target spectrum must have length p={self.p}")
        t.setflags(write=False)
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "blocks", tuple(tuple(int(v) for v in b) for b in self.blocks))
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.rank < 1 or self.rank > min(self.h * self.w, self.p):
            raise ValueError(f"rank {self.rank} invalid for a {self.h}x{self.w}x{self.p} scene")
        _check_blocks(self.blocks, self.h, self.w)


@dataclass(frozen=True)
class GroundTruth:
    mask: np.ndarray              # (h, w) bool
    alpha: float
    blocks: tuple[tuple[int, int, int, int], ...]

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool, copy=True)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def n_targets(self) -> int:
        return int(self.mask.sum())


def _check_blocks(blocks, h, w):
    covered = set()
    for top, left, bh, bw in blocks:
        if bh < 1 or bw < 1 or top < 0 or left < 0 or top + bh > h or left + bw > w:
            raise ValueError(f"block {(top, left, bh, bw)} outside {h}x{w} image")
        cells = {(r, c) for r in range(top, top + bh) for c in range(left, left + bw)}
        if covered & cells:
            raise ValueError(f"block {(top, left, bh, bw)} overlaps another block")
        covered |= cells


def generate_background(h: int, w: int, p: int, rank: int, sigma: float, seed: int) -> HsiCube:
    """Seeded nonnegative low-rank background, scaled into [0, 1] by its max.

    Scaling by the global max (rather than min-max) keeps the flattened matrix
    at numerical rank <= rank when sigma = 0.
    """
    if rank < 1 or rank > min(h * w, p):
        raise ValueError(f"invalid rank {rank}")
    rng = np.random.Generator(np.random.Philox(key=seed + (_BG_STREAM << 64)))
    e = h * w
    g = rng.random((e, rank))
    hh = rng.random((rank, p))
    mat = np.abs(g @ hh)
    if sigma > 0:
        mat = mat + sigma * rng.standard_normal((e, p))
        mat = np.abs(mat)
    peak = float(mat.max())
    if peak > 0:
        mat = mat / peak
    return unflatten(mat, h, w)


def implant_targets(cube: HsiCube, target: np.ndarray, alpha: float, blocks):
    """Replace block pixels with alpha*target + (1-alpha)*background."""
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (cube.p,):
        raise ValueError(f"target spectrum length {target.shape} does not match p={cube.p}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    blocks = tuple(tuple(int(v) for v in b) for b in blocks)
    _check_blocks(blocks, cube.h, cube.w)
    data = cube.data.copy()
    mask = np.zeros((cube.h, cube.w), dtype=bool)
    for top, left, bh, bw in blocks:
        patch = data[top:top + bh, left:left + bw, :]
        data[top:top + bh, left:left + bw, :] = alpha * target + (1.0 - alpha) * patch
        mask[top:top + bh, left:left + bw] = True
    return HsiCube(data, band_mask=cube.band_mask), GroundTruth(mask=mask, alpha=alpha, blocks=blocks)


def _seeded_target(p: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=seed + (_TARGET_STREAM << 64)))
    return rng.random(p)


def _convoy_blocks(h, w, n_blocks, bh, bw, gap):
    total_w = n_blocks * bw + (n_blocks - 1) * gap
    if total_w > w or bh > h:
        raise ValueError("convoy blocks exceed the image")
    top = (h - bh) // 2
    left0 = (w - total_w) // 2
    return tuple((top, left0 + i * (bw + gap), bh, bw) for i in range(n_blocks))


def paper_convoy_spec(scale: float = 1.0, alpha: float = 0.1, p: int = 186,
                      rank: int = 5, sigma: float = 0.01, seed: int = 0) -> SyntheticSpec:
    """Convoy layout: 7 blocks of 6x3 in a single row with 3-pixel gaps.

    ``scale`` >= 1 grows the 101x101 canvas; the blocks keep their size.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1; use desk_spec for smaller scenes")
    h = w = int(round(101 * scale))
    blocks = _convoy_blocks(h, w, n_blocks=7, bh=6, bw=3, gap=3)
    return SyntheticSpec(h=h, w=w, p=p, rank=rank, sigma=sigma, seed=seed,
                         target=_seeded_target(p, seed), alpha=alpha, blocks=blocks)


def desk_spec(alpha: float = 0.5, seed: int = 0) -> SyntheticSpec:
    """Desk-scale preset: 40x40x20 scene, rank-3 background, 4 blocks of 2x2."""
    h = w = 40
    p = 20
    blocks = _convoy_blocks(h, w, n_blocks=4, bh=2, bw=2, gap=6)
    return SyntheticSpec(h=h, w=w, p=p, rank=3, sigma=0.01, seed=seed,
                         target=_seeded_target(p, seed), alpha=alpha, blocks=blocks)


def generate_scene(spec: SyntheticSpec):
    """Background plus implanted targets; returns (cube, ground_truth)."""
    bg = generate_background(spec.h, spec.w, spec.p, spec.rank, spec.sigma, spec.seed)
    return implant_targets(bg, spec.target, spec.alpha, spec.blocks)


def with_alpha(spec: SyntheticSpec, alpha: float) -> SyntheticSpec:
    return replace(spec, alpha=alpha)


def save_spec(path, spec: SyntheticSpec) -> None:
    """Serialize a spec as a flat key=value manifest."""
    lines = [
        f"h={spec.h}", f"w={spec.w}", f"p={spec.p}", f"rank={spec.rank}",
        f"sigma={spec.sigma!r}", f"seed={spec.seed}", f"alpha={spec.alpha!r}",
        "blocks=" + ";".join(":".join(str(v) for v in b) for b in spec.blocks),
        "target=" + ",".join(repr(float(v)) for v in spec.target),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_spec(path) -> SyntheticSpec:
    kv = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        kv[key] = value
    blocks = tuple(tuple(int(v) for v in b.split(":")) for b in kv["blocks"].split(";") if b)
    target = np.array([float(v) for v in kv["target"].split(",")])
    return SyntheticSpec(h=int(kv["h"]), w=int(kv["w"]), p=int(kv["p"]),
                         rank=int(kv["rank"]), sigma=float(kv["sigma"]),
                         seed=int(kv["seed"]), target=target,
                         alpha=float(kv["alpha"]), blocks=blocks)
