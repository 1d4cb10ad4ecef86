"""OLS and ridge closed forms, and the coordinate-descent Lasso.

Lambda convention: the criterion is mean-square loss (1/n)||Y - X b||^2 plus
lambda * ||b||_1, so the coordinate soft-threshold is lambda/2 ("eq7-halflambda").
Reported lambda values live in this convention, not the common one with
threshold lambda.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    _HAVE_NUMBA = False

from .expansion import ExpandedDesign

LAMBDA_CONVENTION = "eq7-halflambda"
COND_WARN_THRESHOLD = 1e12


class SolverError(Exception):
    pass


class SingularDesignError(SolverError):
    def __init__(self, pivot: int):
        super().__init__(
            f"X'X is rank deficient: Cholesky failed at pivot {pivot} "
            "(leading minor not positive definite)"
        )
        self.pivot = pivot


@dataclass
class LassoConfig:
    lam: float
    tol: float = 1e-7
    max_sweeps: int = 10_000
    strategy: str = "active-set"  # or "full-sweep"
    kkt_tol_factor: float = 10.0

    def __post_init__(self):
        if self.lam < 0:
            raise SolverError("lambda must be >= 0")
        if self.tol <= 0 or self.max_sweeps < 1:
            raise SolverError("tol must be > 0 and max_sweeps >= 1")
        if self.strategy not in ("active-set", "full-sweep"):
            raise SolverError(f"unknown strategy {self.strategy!r}")

    @property
    def kkt_tol(self) -> float:
        return self.kkt_tol_factor * self.tol


@dataclass
class ModelFit:
    method: str
    lam: float
    beta0: float
    beta: np.ndarray
    residuals: np.ndarray
    sweeps_used: int = 0
    converged: bool = True
    condition: float | None = None
    kkt_zero_violation: float | None = None
    kkt_active_violation: float | None = None
    objective_trace: list[float] = field(default_factory=list)

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.beta)


# --- design adapters (plain ndarray or ExpandedDesign) ---

def design_shape(design) -> tuple[int, int]:
    return design.shape


def design_block(design, j0: int, j1: int) -> np.ndarray:
    if isinstance(design, ExpandedDesign):
        return design.block(j0, j1)
    return design[:, j0:j1]


def design_take_rows(design, idx: np.ndarray):
    if isinstance(design, ExpandedDesign):
        return design.take_rows(idx)
    return design[idx]


def design_column(design, j: int) -> np.ndarray:
    return design_block(design, j, j + 1)[:, 0]


def design_diag(design, chunk: int = 4096) -> np.ndarray:
    """Sigma_jj = X_j'X_j / n for every column.

    Blocks are forced contiguous so the result is bitwise independent of
    whether the design is streamed or materialized.
    """
    n, p = design_shape(design)
    diag = np.empty(p)
    for j0 in range(0, p, chunk):
        j1 = min(j0 + chunk, p)
        block = np.ascontiguousarray(design_block(design, j0, j1))
        diag[j0:j1] = np.einsum("ij,ij->j", block, block) / n
    return diag


def design_predict(design, beta: np.ndarray) -> np.ndarray:
    """X @ beta streamed over the nonzero coordinates."""
    n, _ = design_shape(design)
    out = np.zeros(n)
    active = np.flatnonzero(beta)
    for j in active:
        out += beta[j] * np.ascontiguousarray(design_column(design, int(j)))
    return out


def soft_threshold(z: float, theta: float) -> float:
    """sign(z) * max(|z| - theta, 0)."""
    return float(np.sign(z) * max(abs(z) - theta, 0.0))


# --- closed-form solvers ---

def _spd_solve(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve A x = b for symmetric positive definite A via Cholesky.

    Returns (x, condition estimate). Raises SingularDesignError naming the
    failing pivot; no pseudo-inverse fallback.
    """
    factor, info = lapack.dpotrf(A, lower=1)
    if info != 0:
        raise SingularDesignError(pivot=int(info))
    anorm = float(np.abs(A).sum(axis=0).max())
    rcond, _ = lapack.dpocon(factor, anorm, uplo=b"L")
    cond = np.inf if rcond == 0 else 1.0 / float(rcond)
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(
            f"ill-conditioned normal equations (condition ~ {cond:.3e})",
            RuntimeWarning,
            stacklevel=3,
        )
    x, info = lapack.dpotrs(factor, b if b.ndim > 1 else b[:, None], lower=1)
    return x[:, 0], cond


def _center(y: np.ndarray, fit_intercept: bool) -> tuple[np.ndarray, float]:
    if fit_intercept:
        beta0 = float(y.mean())
        return y - beta0, beta0
    return y, 0.0


def fit_ols(X: np.ndarray, y: np.ndarray, fit_intercept: bool = True) -> ModelFit:
    """Normal-equation solution; intercept is the response mean."""
    yc, beta0 = _center(y, fit_intercept)
    n = X.shape[0]
    beta, cond = _spd_solve(X.T @ X, X.T @ yc)
    residuals = yc - X @ beta
    return ModelFit("ols", 0.0, beta0, beta, residuals, condition=cond)


def fit_ridge(
    X: np.ndarray, y: np.ndarray, lam: float, fit_intercept: bool = True
) -> ModelFit:
    """beta = (X'X + n*lambda*I)^-1 X'y, the n-scaled penalty as printed."""
    if lam < 0:
        raise SolverError("lambda must be >= 0")
    yc, beta0 = _center(y, fit_intercept)
    n, p = X.shape
    A = X.T @ X + n * lam * np.eye(p)
    beta, cond = _spd_solve(A, X.T @ yc)
    residuals = yc - X @ beta
    return ModelFit("ridge", lam, beta0, beta, residuals, condition=cond)


# --- coordinate-descent Lasso ---

_CD_CHUNK = 2048


def lasso_objective(design, yc: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """(1/n)||yc - X beta||^2 + lam * ||beta||_1."""
    n = len(yc)
    r = yc - design_predict(design, beta)
    return float(r @ r / n + lam * np.abs(beta).sum())


def _cd_update(xj, beta, r, j, half_lam, sjj, n) -> float:
    """One coordinate update through the maintained residual; returns |delta|."""
    bj = beta[j]
    zj = xj @ r / n + sjj * bj
    bnew = soft_threshold(zj, half_lam) / sjj
    if bnew != bj:
        r -= (bnew - bj) * xj
        beta[j] = bnew
        return abs(bnew - bj)
    return 0.0


def _full_sweep(design, beta, r, half_lam, diag, n, p, trace, lam) -> float:
    max_delta = 0.0
    for j0 in range(0, p, _CD_CHUNK):
        j1 = min(j0 + _CD_CHUNK, p)
        # column-major copy with contiguous columns: the per-coordinate dot is
        # then bitwise independent of streamed vs materialized storage
        block_t = np.ascontiguousarray(design_block(design, j0, j1).T)
        # screening: a zero coordinate can only move if its correlation beats
        # the threshold at chunk entry; anything it misses (activations enabled
        # by in-chunk updates) is caught on the next sweep, and a sweep that
        # changes nothing screens exactly
        corr = block_t @ r / n
        b_chunk = beta[j0:j1]
        candidates = np.flatnonzero((b_chunk != 0.0) | (np.abs(corr) > half_lam))
        for t in candidates:
            j = j0 + int(t)
            if diag[j] <= 0:
                continue
            delta = _cd_update(block_t[t], beta, r, j, half_lam, diag[j], n)
            if delta > max_delta:
                max_delta = delta
            if trace is not None and delta > 0:
                trace.append(float(r @ r / n + lam * np.abs(beta).sum()))
    return max_delta


def _active_cd_python(A, beta_a, r, diag_a, n, half_lam, tol, max_sweeps):
    sweeps = 0
    while sweeps < max_sweeps:
        max_delta = 0.0
        for t in range(A.shape[0]):
            sjj = diag_a[t]
            if sjj <= 0.0:
                continue
            z = float(A[t] @ r) / n + sjj * beta_a[t]
            shrunk = abs(z) - half_lam
            bnew = 0.0 if shrunk <= 0.0 else (shrunk / sjj if z > 0 else -shrunk / sjj)
            d = bnew - beta_a[t]
            if d != 0.0:
                r -= d * A[t]
                beta_a[t] = bnew
                if abs(d) > max_delta:
                    max_delta = abs(d)
        sweeps += 1
        if max_delta < tol:
            break
    return sweeps


if _HAVE_NUMBA:

    @njit(cache=True)
    def _active_cd_kernel(A, beta_a, r, diag_a, n, half_lam, tol, max_sweeps):
        sweeps = 0
        a, m = A.shape
        while sweeps < max_sweeps:
            max_delta = 0.0
            for t in range(a):
                sjj = diag_a[t]
                if sjj <= 0.0:
                    continue
                z = 0.0
                for i in range(m):
                    z += A[t, i] * r[i]
                z = z / n + sjj * beta_a[t]
                shrunk = abs(z) - half_lam
                bnew = 0.0
                if shrunk > 0.0:
                    bnew = shrunk / sjj if z > 0.0 else -shrunk / sjj
                d = bnew - beta_a[t]
                if d != 0.0:
                    for i in range(m):
                        r[i] -= d * A[t, i]
                    beta_a[t] = bnew
                    ad = d if d > 0.0 else -d
                    if ad > max_delta:
                        max_delta = ad
            sweeps += 1
            if max_delta < tol:
                break
        return sweeps

else:
    _active_cd_kernel = _active_cd_python


def _active_sweep(columns, indices, beta, r, half_lam, diag, n, trace, lam) -> float:
    max_delta = 0.0
    for xj, j in zip(columns, indices):
        delta = _cd_update(xj, beta, r, j, half_lam, diag[j], n)
        if delta > max_delta:
            max_delta = delta
        if trace is not None and delta > 0:
            trace.append(float(r @ r / n + lam * np.abs(beta).sum()))
    return max_delta


def _kkt_violations(design, r, beta, half_lam, n, p) -> tuple[float, float]:
    zero_v = 0.0
    active_v = 0.0
    for j0 in range(0, p, _CD_CHUNK):
        j1 = min(j0 + _CD_CHUNK, p)
        block = design_block(design, j0, j1)
        corr = block.T @ r / n
        b = beta[j0:j1]
        zero_mask = b == 0
        if zero_mask.any():
            zero_v = max(zero_v, float(np.abs(corr[zero_mask]).max() - half_lam))
        if (~zero_mask).any():
            gap = np.abs(corr[~zero_mask] - half_lam * np.sign(b[~zero_mask]))
            active_v = max(active_v, float(gap.max()))
    return max(zero_v, 0.0), active_v


def fit_lasso(
    design,
    y: np.ndarray,
    config: LassoConfig,
    beta_init: np.ndarray | None = None,
    diag: np.ndarray | None = None,
    fit_intercept: bool = True,
    track_objective: bool = False,
) -> ModelFit:
    """Coordinate descent (shooting) for the L1-penalized criterion.

    Columns are streamed from the design in chunks, never materialized in
    full. Coordinate order is fixed ascending within a sweep. The fit carries
    a KKT optimality certificate; non-convergence at max_sweeps returns the
    fit with converged=False.
    """
    n, p = design_shape(design)
    yc, beta0 = _center(np.asarray(y, dtype=float), fit_intercept)
    half_lam = config.lam / 2.0
    if diag is None:
        diag = design_diag(design)
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=float)
    if beta_init is None:
        r = yc.copy()
    else:
        r = yc - design_predict(design, beta)
    trace = [] if track_objective else None
    if trace is not None:
        trace.append(float(r @ r / n + config.lam * np.abs(beta).sum()))

    sweeps = 0
    converged = False
    while sweeps < config.max_sweeps:
        delta = _full_sweep(design, beta, r, half_lam, diag, n, p, trace, config.lam)
        sweeps += 1
        if delta < config.tol:
            converged = True
            break
        if config.strategy == "active-set":
            indices = [int(j) for j in np.flatnonzero(beta)]
            columns = [np.ascontiguousarray(design_column(design, j)) for j in indices]
            if trace is not None:
                while sweeps < config.max_sweeps:
                    delta = _active_sweep(
                        columns, indices, beta, r, half_lam, diag, n, trace, config.lam
                    )
                    sweeps += 1
                    if delta < config.tol:
                        break
            elif indices:
                A = np.stack(columns)
                beta_a = beta[indices].copy()
                diag_a = diag[indices].copy()
                sweeps += int(
                    _active_cd_kernel(
                        A, beta_a, r, diag_a, float(n), half_lam,
                        config.tol, config.max_sweeps - sweeps,
                    )
                )
                beta[indices] = beta_a

    zero_v, active_v = _kkt_violations(design, r, beta, half_lam, n, p)
    fit = ModelFit(
        method="lasso",
        lam=config.lam,
        beta0=beta0,
        beta=beta,
        residuals=r,
        sweeps_used=sweeps,
        converged=converged,
        kkt_zero_violation=zero_v,
        kkt_active_violation=active_v,
    )
    if trace is not None:
        fit.objective_trace = trace
    return fit


def lasso_path(
    design,
    y: np.ndarray,
    grid: np.ndarray,
    tol: float = 1e-7,
    max_sweeps: int = 10_000,
    strategy: str = "active-set",
    fit_intercept: bool = True,
) -> list[ModelFit]:
    """Warm-started fits along a descending lambda grid."""
    diag = design_diag(design)
    fits: list[ModelFit] = []
    beta = None
    for lam in grid:
        config = LassoConfig(lam=float(lam), tol=tol, max_sweeps=max_sweeps, strategy=strategy)
        fit = fit_lasso(
            design, y, config, beta_init=beta, diag=diag, fit_intercept=fit_intercept
        )
        fits.append(fit)
        beta = fit.beta
    return fits


def kkt_satisfied(fit: ModelFit, tol: float) -> bool:
    return (
        fit.kkt_zero_violation is not None
        and fit.kkt_zero_violation <= tol
        and fit.kkt_active_violation <= tol
    )
