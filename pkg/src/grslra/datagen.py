"""Synthetic series: time-varying SISO impulse responses and exact LTI series."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import expm


@dataclass
class LTVSpec:
    k: int = 5
    N: int = 300
    drift: float = 0.001
    sigma: float = 0.01
    sp_rate: float = 0.05
    sp_amp: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.N < 1:
            raise ValueError("k and N must be at least 1")
        if not 0 <= self.sp_rate <= 1:
            raise ValueError("salt-and-pepper rate must lie in [0, 1]")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LTVSeries:
    clean: np.ndarray
    noisy: np.ndarray
    outliers: np.ndarray
    states: np.ndarray


def random_skew_symmetric(k: int, seed) -> np.ndarray:
    """``Z`` with i.i.d. standard normal entries above the diagonal and ``Z.T == -Z``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)
    Z = np.zeros((k, k))
    iu = np.triu_indices(k, 1)
    Z[iu] = rng.standard_normal(len(iu[0]))
    return Z - Z.T


def ltv_impulse_response(spec: LTVSpec) -> LTVSeries:
    """Impulse response of ``x(t+1) = expm(drift*t*Z) x(t)``, ``y = c^T x + noise``.

    The impulse enters through ``b`` so ``x(1) = b``. ``b`` and ``c`` are
    uniform on [0, 1]. Noise is Gaussian (``sigma``) plus salt-and-pepper
    samples of value ``+-sp_amp`` at rate ``sp_rate``.
    """
    rng = np.random.default_rng(spec.seed)
    Z = random_skew_symmetric(spec.k, rng)
    b = rng.uniform(size=spec.k)
    c = rng.uniform(size=spec.k)

    states = np.empty((spec.N, spec.k))
    x = b
    for t in range(spec.N):
        states[t] = x
        # t is 0-based here; the 1-based time index is t + 1
        x = expm(spec.drift * (t + 1) * Z) @ x
    clean = states @ c

    gauss = spec.sigma * rng.standard_normal(spec.N)
    outliers = rng.uniform(size=spec.N) < spec.sp_rate
    signs = np.where(rng.uniform(size=spec.N) < 0.5, -1.0, 1.0)
    noisy = clean + gauss + np.where(outliers, spec.sp_amp * signs, 0.0)
    return LTVSeries(clean, noisy, outliers, states)


def lti_series(k: int, N: int, seed) -> np.ndarray:
    """Series obeying an exact order-``k`` linear recurrence.

    Sum of ``k // 2`` damped sinusoids with well-separated frequencies, plus a
    real exponential when ``k`` is odd. Any Hankel matrix of it with both
    sides larger than ``k`` has rank ``k``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)
    t = np.arange(N, dtype=float)
    out = np.zeros(N)
    pairs = k // 2
    if pairs:
        strata = (np.arange(pairs) + rng.uniform(0.2, 0.8, pairs)) / pairs
        freqs = 0.3 + (np.pi - 0.6) * strata
        radii = rng.uniform(0.97, 1.0, pairs)
        amps = rng.uniform(0.5, 1.5, pairs)
        phases = rng.uniform(0, 2 * np.pi, pairs)
        for f, r, a, ph in zip(freqs, radii, amps, phases):
            out += a * r**t * np.cos(f * t + ph)
    if k % 2:
        r = rng.uniform(0.9, 1.0)
        out += rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5) * r**t
    return out
