"""Sliding-window robust Hankel completion for r-step-ahead forecasting.

Every window holds the last ``2m - 1`` samples followed by ``r`` zero
placeholders, arranged as an ``m x (m + r)`` Hankel matrix whose last ``r``
anti-diagonals are unobserved. The subspace found for one window seeds the
next; ``mu`` is held fixed and ``rho`` sweeps geometrically within each
window. Positions ``j`` are 1-based sample counts: window ``j`` ends with
``d[j - 1]`` and predicts ``d[j], ..., d[j + r - 1]``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .batch_solver import iterate, schedule_factor, state_from_basis, subspace_fill, zero_fill
from .manifold import CGOptions, DivergenceError, SubspaceBasis
from .structure import HankelStructure, ObservationMask, forecast_mask, hankel_build, hankel_extract_series, hankel_project

log = logging.getLogger(__name__)


@dataclass
class ForecastConfig:
    k: int
    m: int
    r: int
    mu: float = 0.005
    p: float = 0.5
    rho0: float = 1e-6
    rhoI: float = 10.0
    Imin: int = 16
    Imax: int = 128
    eps_ref: float = 5e-4
    start: int | None = None
    warm_start: bool = True
    fill: str = "subspace"
    seed: int = 0
    cg: CGOptions = field(default_factory=CGOptions)
    gtol_rel: float = 1e-8

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("forecast range r must be at least 1")
        if self.k < 1 or self.m < self.k + 1:
            raise ValueError(f"need 1 <= k < m, got k={self.k}, m={self.m}")
        if not 2 <= self.Imin <= self.Imax:
            raise ValueError("need 2 <= Imin <= Imax")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 0 < self.rho0 <= self.rhoI:
            raise ValueError("need 0 < rho0 <= rhoI")
        if not self.eps_ref > 0:
            raise ValueError("eps_ref must be positive")
        if self.fill not in ("subspace", "zeros"):
            raise ValueError(f"unknown fill {self.fill!r}; use 'subspace' or 'zeros'")

    @property
    def first_position(self) -> int:
        return 2 * self.m if self.start is None else self.start

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.first_position
        return d


@dataclass
class StreamState:
    U_prev: SubspaceBasis
    eps_prev: float
    j: int


@dataclass(frozen=True)
class ForecastRecord:
    j: int
    predictions: tuple
    eps_final: float
    iterations: int
    inner_iterations: int
    elapsed: float
    diverged: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["predictions"] = list(self.predictions)
        return d


def make_window(d, j: int, m: int, r: int) -> tuple[np.ndarray, ObservationMask]:
    """Hankel matrix of ``d[j-2m+1 .. j]`` (1-based) padded with ``r`` zeros."""
    if r < 1:
        raise ValueError("forecast range r must be at least 1")
    d = np.asarray(d, dtype=float)
    w = 2 * m - 1
    if j < w or j > len(d):
        raise ValueError(f"position j={j} needs {w} samples of history within a series of length {len(d)}")
    x = np.concatenate([d[j - w : j], np.zeros(r)])
    return hankel_build(x, m), forecast_mask(m, m + r, r)


def choose_iterations(eps_prev: float, cfg: ForecastConfig) -> int:
    """Doubling ladder from ``Imin``, one rung per doubling of ``eps_prev / eps_ref``."""
    if not eps_prev >= 0:
        raise ValueError("eps_prev must be non-negative")
    ratio = eps_prev / cfg.eps_ref
    if ratio <= 1:
        return cfg.Imin
    if not math.isfinite(ratio):
        return cfg.Imax
    rungs = math.ceil(math.log2(ratio))
    return int(min(cfg.Imax, cfg.Imin * 2 ** min(rungs, 62)))


def forecast_step(stream: StreamState, window: np.ndarray, mask: ObservationMask, cfg: ForecastConfig):
    """Complete one window from the previous subspace and read out ``r`` predictions.

    Returns ``(record, new_stream)``. On divergence the record is flagged with
    NaN predictions and the stream state carries over unchanged.
    """
    t0 = time.perf_counter()
    I = choose_iterations(stream.eps_prev, cfg)
    if cfg.fill == "subspace":
        X0 = subspace_fill(window, mask, stream.U_prev)
    else:
        X0 = zero_fill(window, mask)
    structure = HankelStructure(*X0.shape)
    cg = CGOptions(**{**asdict(cfg.cg), "gtol": cfg.gtol_rel * max(1.0, float(np.linalg.norm(X0)))})
    state = state_from_basis(
        stream.U_prev,
        X0,
        mu=cfg.mu,
        rho=cfg.rho0,
        c_mu=1.0,
        c_rho=schedule_factor(cfg.rho0, cfg.rhoI, I),
        p=cfg.p,
        cg=cg,
    )
    inner = 0
    try:
        for _ in range(I):
            state, rec = iterate(state, window, mask, structure)
            inner += rec["inner_subspace"] + rec["inner_coordinate"]
    except DivergenceError as exc:
        log.warning("window j=%d diverged: %s", stream.j, exc)
        record = ForecastRecord(stream.j, (math.nan,) * cfg.r, math.nan, state.iter, inner, time.perf_counter() - t0, True)
        return record, StreamState(stream.U_prev, stream.eps_prev, stream.j + 1)
    series = hankel_extract_series(hankel_project(state.L))
    preds = tuple(float(v) for v in series[-cfg.r :])
    record = ForecastRecord(stream.j, preds, state.eps, I, inner, time.perf_counter() - t0)
    return record, StreamState(state.U, state.eps, stream.j + 1)


def run_stream(d, cfg: ForecastConfig) -> list[ForecastRecord]:
    """Forecast from every position ``j`` in ``[start, N]``.

    The first window's subspace comes from an SVD of its fully observed
    leading ``m x m`` block. If the series is too short to reach ``start``, the single
    available window ``j = N`` is still forecast.
    """
    d = np.asarray(d, dtype=float)
    N = len(d)
    w = 2 * cfg.m - 1
    if N < w:
        raise ValueError(f"series of length {N} is shorter than one window ({w} samples)")
    first = max(w, min(cfg.first_position, N))
    rng = np.random.default_rng(cfg.seed)

    window, _ = make_window(d, first, cfg.m, cfg.r)
    # the leading m x m block is fully observed; zero placeholders would bias the basis
    stream = StreamState(SubspaceBasis.from_svd(window[:, : cfg.m], cfg.k), math.inf, first)
    records = []
    for j in range(first, N + 1):
        window, mask = make_window(d, j, cfg.m, cfg.r)
        if not cfg.warm_start and j > first:
            stream = StreamState(SubspaceBasis.random(cfg.m, cfg.k, rng), stream.eps_prev, j)
        record, stream = forecast_step(stream, window, mask, cfg)
        records.append(record)
    return records


def forecast_errors(d, records: list[ForecastRecord]) -> np.ndarray:
    """``|prediction - truth|`` per record and horizon; NaN where truth is missing."""
    d = np.asarray(d, dtype=float)
    N = len(d)
    if not records:
        return np.empty((0, 0))
    r = len(records[0].predictions)
    err = np.full((len(records), r), np.nan)
    for i, rec in enumerate(records):
        for h in range(r):
            t = rec.j + h  # 0-based index of d(j + h + 1)
            if t < N:
                err[i, h] = abs(rec.predictions[h] - d[t])
    return err


def summarize(d, records: list[ForecastRecord]) -> dict:
    err = forecast_errors(d, records)
    valid = err[np.isfinite(err)]
    iters = [rec.iterations for rec in records]
    return {
        "mad_overall": float(valid.mean()) if valid.size else math.nan,
        "mad_per_horizon": [float(np.nanmean(col)) if np.isfinite(col).any() else math.nan for col in err.T],
        "n_records": len(records),
        "n_diverged": sum(rec.diverged for rec in records),
        "mean_iterations": float(np.mean(iters)) if iters else math.nan,
        "total_inner_iterations": int(sum(rec.inner_iterations for rec in records)),
    }
