"""Non-robust reference methods: SSA reconstruction and Cadzow iterations."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .structure import forecast_mask, hankel_build, hankel_extract_series, hankel_project

log = logging.getLogger(__name__)


@dataclass
class BaselineConfig:
    max_iters: int = 500
    tol: float = 1e-8  # relative to ||X||_F

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class CadzowResult:
    series: np.ndarray
    X: np.ndarray
    iterations: int
    converged: bool
    changes: list


def svd_truncate(X: np.ndarray, k: int) -> np.ndarray:
    """Best rank-``k`` approximation in Frobenius norm."""
    X = np.asarray(X, dtype=float)
    if not 0 <= k <= min(X.shape):
        raise ValueError(f"rank {k} exceeds matrix dimensions {X.shape}")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return (U[:, :k] * s[:k]) @ Vt[:k]


def _check(d, m, k):
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or len(d) < m:
        raise ValueError(f"need a series of length at least m={m}")
    if not 1 <= k <= min(m, len(d) - m + 1):
        raise ValueError(f"rank k={k} too large for a {m}x{len(d) - m + 1} Hankel matrix")
    return d


def ssa_denoise(d, m: int, k: int) -> np.ndarray:
    """One rank-``k`` truncation of the trajectory matrix, then diagonal averaging."""
    d = _check(d, m, k)
    return hankel_extract_series(hankel_project(svd_truncate(hankel_build(d, m), k)))


def _cadzow(X, k, cfg, observed=None, values=None) -> CadzowResult:
    scale = max(np.linalg.norm(X), np.finfo(float).tiny)
    changes = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        X_new = hankel_project(svd_truncate(X, k))
        if observed is not None:
            # observed set is a union of anti-diagonals, so this stays Hankel
            X_new = np.where(observed, values, X_new)
        change = float(np.linalg.norm(X_new - X))
        changes.append(change)
        X = X_new
        if change <= cfg.tol * scale:
            converged = True
            break
    if not converged:
        log.warning("cadzow did not converge in %d iterations", cfg.max_iters)
    return CadzowResult(hankel_extract_series(X), X, it, converged, changes)


def cadzow(d, m: int, k: int, cfg: BaselineConfig | None = None) -> CadzowResult:
    """Alternate rank-``k`` truncation and Hankel projection to a fixed point.

    Every iteration ends on a projection, so ``result.X`` is exactly Hankel.
    ``result.converged`` is False if ``cfg.max_iters`` ran out first.
    """
    cfg = cfg or BaselineConfig()
    d = _check(d, m, k)
    return _cadzow(hankel_build(d, m), k, cfg)


def cadzow_forecast(d, m: int, k: int, r: int, cfg: BaselineConfig | None = None) -> np.ndarray:
    """l2 completion analogue of the robust forecaster for one window.

    ``d`` is the observed history (its last ``2m - 1`` samples are used); it
    is padded with ``r`` zeros, and Cadzow iterations run with the observed
    anti-diagonals reset to the data after every projection.
    """
    cfg = cfg or BaselineConfig()
    d = np.asarray(d, dtype=float)
    w = 2 * m - 1
    if len(d) < w:
        raise ValueError(f"need at least {w} samples of history")
    if r < 1:
        raise ValueError("forecast range r must be at least 1")
    x = np.concatenate([d[-w:], np.zeros(r)])
    X = hankel_build(x, m)
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    mask = forecast_mask(m, m + r, r).observed
    res = _cadzow(X, k, cfg, observed=mask, values=X)
    return res.series[-r:]


def cadzow_forecast_stream(d, m: int, k: int, r: int, start: int | None = None, cfg: BaselineConfig | None = None) -> list:
    """Run ``cadzow_forecast`` at every position ``j`` from ``start`` (1-based) to ``len(d)``."""
    d = np.asarray(d, dtype=float)
    N = len(d)
    w = 2 * m - 1
    first = max(w, min(2 * m if start is None else start, N))
    return [(j, cadzow_forecast(d[:j], m, k, r, cfg)) for j in range(first, N + 1)]


def ssa_forecast(d, m: int, k: int, r: int) -> np.ndarray:
    """Recurrent SSA forecast from the last ``2m - 1`` samples.

    The last coordinate of the leading left singular vectors gives the
    linear recurrence used to extend the reconstructed series.
    """
    d = np.asarray(d, dtype=float)
    w = 2 * m - 1
    if len(d) < w:
        raise ValueError(f"need at least {w} samples of history")
    x = d[-w:]
    U, _, _ = np.linalg.svd(hankel_build(x, m), full_matrices=False)
    U = U[:, :k]
    pi = U[-1]
    nu2 = float(pi @ pi)
    if nu2 >= 1.0:
        raise ValueError("verticality coefficient >= 1; recurrence undefined")
    coef = (U[:-1] @ pi) / (1.0 - nu2)
    y = list(ssa_denoise(x, m, k))
    for _ in range(r):
        y.append(float(np.dot(coef, y[-(m - 1) :])))
    return np.array(y[-r:])
