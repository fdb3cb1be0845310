"""Alternating convex minimization splitting a pixel-by-band matrix D into a
low-rank background L and a dictionary-constrained sparse component (At C)^T.

The objective is

    tau * ||L||_*  +  lam * ||C||_{2,1}  +  ||D - L - (At C)^T||_F^2

minimized by alternating an exact singular-value-thresholding step for L with
an ADMM group-lasso step for C.  Because the data term carries no 1/2 factor,
the SVT threshold is tau/2 (not tau); misreading this halves the effective
regularization.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dictionaries import TargetDictionary


@dataclass(frozen=True)
class SolverConfig:
    tau: float
    lam: float
    epsilon: float = 1e-4          # outer tolerance on both relative change norms
    rho0: float = 1e-4             # initial ADMM penalty
    rho_growth: float = 1.1        # per-inner-iteration penalty growth
    inner_tol: float = 1e-6        # on ||C - F||_F^2
    max_outer: int = 200
    max_inner: int = 500
    warm_start: bool = False       # carry F, Z, rho across outer iterations

    def __post_init__(self):
        if self.tau <= 0 or self.lam < 0:
            raise ValueError("tau must be positive and lam non-negative")
        if self.epsilon <= 0 or self.rho0 <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances and rho0 must be strictly positive")
        if self.rho_growth <= 1:
            raise ValueError("rho_growth must exceed 1")


@dataclass
class AdmmState:
    C: np.ndarray
    F: np.ndarray
    Z: np.ndarray
    rho: float


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    nuclear_norm: float
    l21_norm: float
    dL_rel: float
    dS_rel: float
    inner_iters: int


@dataclass
class SeparationResult:
    """Outcome of one separation run; D = L + S + residual holds by construction."""

    L: np.ndarray
    C: np.ndarray
    S: np.ndarray
    residual: np.ndarray
    trace: list[TraceRow]
    iterations: int
    converged: bool


def _atoms(at) -> np.ndarray:
    if isinstance(at, TargetDictionary):
        return at.atoms
    arr = np.asarray(at, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def objective(d, l_mat, c_mat, at, tau: float, lam: float) -> float:
    """Evaluate the composite objective at (L, C)."""
    at = _atoms(at)
    d = np.asarray(d, dtype=np.float64)
    l_mat = np.asarray(l_mat, dtype=np.float64)
    c_mat = np.asarray(c_mat, dtype=np.float64)
    if l_mat.shape != d.shape or at.shape[1] != c_mat.shape[0] or c_mat.shape[1] != d.shape[0]:
        raise ValueError("objective: shape mismatch between D, L, At, C")
    fit = d - l_mat - (at @ c_mat).T
    nuc = float(np.linalg.svd(l_mat, compute_uv=False).sum())
    l21 = float(np.linalg.norm(c_mat, axis=0).sum())
    return tau * nuc + lam * l21 + float(np.sum(fit * fit))


def svt(m: np.ndarray, threshold: float) -> np.ndarray:
    """Singular value thresholding: soft-threshold the spectrum of ``m``.

    Exact minimizer of ||L - m||_F^2 + 2*threshold*||L||_*.
    """
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("svt: non-finite input")
    if threshold < 0:
        raise ValueError("svt: threshold must be >= 0")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - threshold, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vt[keep, :]


def group_shrink_columns(v: np.ndarray, kappa: float) -> np.ndarray:
    """Columnwise group soft-thresholding: v_j -> max(0, 1 - kappa/||v_j||) v_j."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("group_shrink_columns: non-finite input")
    if kappa < 0:
        raise ValueError("group_shrink_columns: kappa must be >= 0")
    norms = np.linalg.norm(v, axis=0)
    scale = np.zeros_like(norms)
    nz = norms > kappa
    scale[nz] = 1.0 - kappa / norms[nz]
    return v * scale


def solve_c_subproblem(y: np.ndarray, at, lam: float, config: SolverConfig,
                       warm: AdmmState | None = None):
    """ADMM on  min_C ||y - At C||_F^2 + lam ||C||_{2,1}  with splitting C = F.

    Returns ``(C, state, inner_iters, converged)`` where the reported C is the
    auxiliary F (it carries exact column sparsity).  The penalty rho grows by
    ``rho_growth`` every inner iteration; the loop stops once
    ||C - F||_F^2 <= inner_tol.
    """
    at = _atoms(at)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != at.shape[0]:
        raise ValueError("solve_c_subproblem: y must be p x e with p matching the dictionary")
    nt, e = at.shape[1], y.shape[1]
    if warm is None:
        f = np.zeros((nt, e))
        z = np.zeros((nt, e))
        rho = config.rho0
    else:
        f, z, rho = warm.F.copy(), warm.Z.copy(), warm.rho
    ata2 = 2.0 * (at.T @ at)
    aty2 = 2.0 * (at.T @ y)
    eye = np.eye(nt)
    c = np.zeros((nt, e))
    converged = False
    it = 0
    for it in range(1, config.max_inner + 1):
        c = np.linalg.solve(ata2 + rho * eye, aty2 + rho * f - z)
        f = group_shrink_columns(c + z / rho, lam / rho)
        z = z + rho * (c - f)
        gap = float(np.sum((c - f) ** 2))
        if gap <= config.inner_tol:
            converged = True
            break
        rho *= config.rho_growth
    return f.copy(), AdmmState(C=c, F=f, Z=z, rho=rho), it, converged


def separate(d: np.ndarray, at, config: SolverConfig) -> SeparationResult:
    """Alternating minimization: SVT step for L, ADMM group-lasso step for C.

    Starts from L = C = F = Z = 0 and stops when both relative change norms
    ||dL||_F/||D||_F and ||dS||_F/||D||_F drop to ``config.epsilon``, or after
    ``max_outer`` iterations.
    """
    at = _atoms(at)
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError("separate: D must be a 2-D pixel-by-band matrix")
    if d.shape[1] != at.shape[0]:
        raise ValueError(f"separate: D has {d.shape[1]} bands but dictionary has {at.shape[0]}")
    e, p = d.shape
    nt = at.shape[1]

    if not np.any(d):
        zc = np.zeros((nt, e))
        row = TraceRow(1, 0.0, 0.0, 0.0, 0.0, 0.0, 0)
        return SeparationResult(L=np.zeros((e, p)), C=zc, S=np.zeros((e, p)),
                                residual=np.zeros((e, p)), trace=[row],
                                iterations=1, converged=True)

    d_norm = float(np.linalg.norm(d))
    l_mat = np.zeros((e, p))
    c_mat = np.zeros((nt, e))
    s_mat = np.zeros((e, p))
    state: AdmmState | None = None
    trace: list[TraceRow] = []
    converged = False
    k = 0
    for k in range(1, config.max_outer + 1):
        l_new = svt(d - s_mat, config.tau / 2.0)
        warm = state if config.warm_start else None
        c_new, state, inner_iters, _ = solve_c_subproblem((d - l_new).T, at, config.lam, config, warm)
        s_new = (at @ c_new).T
        dl_rel = float(np.linalg.norm(l_new - l_mat)) / d_norm
        ds_rel = float(np.linalg.norm(s_new - s_mat)) / d_norm
        l_mat, c_mat, s_mat = l_new, c_new, s_new
        obj = objective(d, l_mat, c_mat, at, config.tau, config.lam)
        nuc = float(np.linalg.svd(l_mat, compute_uv=False).sum())
        l21 = float(np.linalg.norm(c_mat, axis=0).sum())
        trace.append(TraceRow(k, obj, nuc, l21, dl_rel, ds_rel, inner_iters))
        if dl_rel <= config.epsilon and ds_rel <= config.epsilon:
            converged = True
            break
    return SeparationResult(L=l_mat, C=c_mat, S=s_mat, residual=d - l_mat - s_mat,
                            trace=trace, iterations=k, converged=converged)


def write_trace_csv(path, trace: list[TraceRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "nuclear_norm", "l21_norm", "dL_rel", "dS_rel", "inner_iters"])
        for row in trace:
            writer.writerow([row.iteration, repr(row.objective), repr(row.nuclear_norm),
                             repr(row.l21_norm), repr(row.dL_rel), repr(row.dS_rel), row.inner_iters])
