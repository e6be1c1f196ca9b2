"""Hankel matrix structure: build, orthogonal projection, series readout, masking.

Indices are 0-based throughout; entry ``X[i, j]`` of a Hankel matrix holds
``d[i + j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

HANKEL_TOL = 1e-8


@lru_cache(maxsize=64)
def _antidiag_index(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.add.outer(np.arange(m), np.arange(n)).ravel()
    counts = np.bincount(idx, minlength=m + n - 1).astype(float)
    idx.setflags(write=False)
    counts.setflags(write=False)
    return idx, counts


def _antidiag_means(X: np.ndarray) -> np.ndarray:
    # averaging offsets from one entry per anti-diagonal keeps constant
    # anti-diagonals bit-exact, which makes the projection exactly idempotent
    m, n = X.shape
    idx, counts = _antidiag_index(m, n)
    ref = np.concatenate([X[0, :], X[1:, -1]])
    dev = X.ravel() - ref[idx]
    return ref + np.bincount(idx, weights=dev, minlength=m + n - 1) / counts


@dataclass(frozen=True)
class HankelStructure:
    """An ``m x n`` Hankel structure over series of length ``m + n - 1``."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"Hankel dimensions must be positive, got {self.m}x{self.n}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def series_len(self) -> int:
        return self.m + self.n - 1

    def build(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if d.shape != (self.series_len,):
            raise ValueError(f"expected a series of length {self.series_len}, got shape {d.shape}")
        return hankel_build(d, self.m)

    def project(self, X: np.ndarray) -> np.ndarray:
        self._check(X)
        return hankel_project(X)

    def extract(self, X: np.ndarray, tol: float = HANKEL_TOL) -> np.ndarray:
        self._check(X)
        return hankel_extract_series(X, tol)

    def _check(self, X):
        if np.shape(X) != self.shape:
            raise ValueError(f"matrix shape {np.shape(X)} does not match structure {self.shape}")


@dataclass(frozen=True)
class ObservationMask:
    """Boolean matrix marking observed entries. At least one entry must be observed."""

    observed: np.ndarray
    count_observed: int = field(init=False)

    def __post_init__(self):
        obs = np.array(self.observed, dtype=bool)
        if obs.ndim != 2:
            raise ValueError("observation mask must be a 2-D boolean matrix")
        count = int(obs.sum())
        if count < 1:
            raise ValueError("observation mask has no observed entries")
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "count_observed", count)

    @classmethod
    def full(cls, m: int, n: int) -> "ObservationMask":
        return cls(np.ones((m, n), dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.observed.shape

    @property
    def is_full(self) -> bool:
        return self.count_observed == self.observed.size


def hankel_build(d, m: int) -> np.ndarray:
    """Stack ``d`` into an ``m x (len(d) - m + 1)`` Hankel matrix.

    >>> hankel_build([1, 2, 3], 2)
    array([[1., 2.],
           [2., 3.]])
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if m < 1 or len(d) < m:
        raise ValueError(f"series of length {len(d)} is too short for {m} rows")
    n = len(d) - m + 1
    return d[np.add.outer(np.arange(m), np.arange(n))]


def hankel_project(X: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto Hankel matrices (diagonal averaging)."""
    X = np.asarray(X, dtype=float)
    m, n = X.shape
    idx, _ = _antidiag_index(m, n)
    return _antidiag_means(X)[idx].reshape(m, n)


def hankel_extract_series(X: np.ndarray, tol: float = HANKEL_TOL) -> np.ndarray:
    """Read the series back out of a Hankel matrix.

    Raises ``ValueError`` if some anti-diagonal spreads by more than ``tol``
    relative to the largest entry of ``X``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a matrix")
    m, n = X.shape
    means = _antidiag_means(X)
    idx, _ = _antidiag_index(m, n)
    spread = np.max(np.abs(X.ravel() - means[idx]))
    scale = max(np.max(np.abs(X)), 1.0) if X.size else 1.0
    if spread > tol * scale:
        raise ValueError(f"matrix is not Hankel: anti-diagonal spread {spread:.3g} exceeds tolerance")
    # first row then last column
    return np.concatenate([X[0, :], X[1:, -1]])


def structure_residual(X: np.ndarray) -> tuple[np.ndarray, float]:
    """Return ``R = X - P(X)`` and ``eps = ||R||_F / (m n)``."""
    X = np.asarray(X, dtype=float)
    R = X - hankel_project(X)
    return R, float(np.linalg.norm(R) / X.size)


def mask_residual(Xhat: np.ndarray, mask: ObservationMask, L: np.ndarray) -> np.ndarray:
    """``Xhat - L`` on observed entries, exactly 0 elsewhere."""
    Xhat = np.asarray(Xhat, dtype=float)
    L = np.asarray(L, dtype=float)
    if Xhat.shape != L.shape or Xhat.shape != mask.shape:
        raise ValueError(f"shape mismatch: Xhat {Xhat.shape}, L {L.shape}, mask {mask.shape}")
    return np.where(mask.observed, Xhat - L, 0.0)


def forecast_mask(m: int, n: int, r: int) -> ObservationMask:
    """Mask hiding the last ``r`` anti-diagonals (the lower-right corner).

    ``r = 0`` yields a fully observed mask.
    """
    if not 0 <= r <= n:
        raise ValueError(f"forecast range r={r} must lie in [0, {n}]")
    s = np.add.outer(np.arange(m), np.arange(n))
    return ObservationMask(s < m + n - 1 - r)
