"""Alternating augmented-Lagrangian solver for robust Hankel low-rank approximation.

Each outer iteration runs a subspace step (CG on the Grassmannian), a
coordinate step (Euclidean CG on ``Y``) and a multiplier update, then moves
``mu`` and ``rho`` one step along their geometric schedules.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .manifold import CGOptions, DivergenceError, SubspaceBasis, cg_minimize_euclidean, cg_minimize_stiefel
from .objective import (
    LagrangianParams,
    SmoothingParams,
    coordinate_cost,
    coordinate_cost_grad,
    subspace_cost,
    subspace_cost_grad,
)
from .structure import HankelStructure, ObservationMask, hankel_project, structure_residual

log = logging.getLogger(__name__)


class SolverDivergence(DivergenceError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass
class BatchConfig:
    k: int
    p: float = 0.5
    mu0: float = 0.05
    muI: float = 0.005
    rho0: float = 1e-6
    rhoI: float = 10.0
    I: int = 128
    tau: float = 5e-4
    init: str = "svd"
    fill: str = "zeros"
    seed: int | None = None
    cg: CGOptions = field(default_factory=CGOptions)
    # absolute CG gradient tolerance = gtol_rel * max(1, ||X_0||_F)
    gtol_rel: float = 1e-8

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("rank bound k must be at least 1")
        if not self.mu0 >= self.muI > 0:
            raise ValueError("need mu0 >= muI > 0")
        if not 0 < self.rho0 <= self.rhoI:
            raise ValueError("need 0 < rho0 <= rhoI")
        if self.I < 2:
            raise ValueError("need at least I = 2 outer iterations")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.init not in ("svd", "random"):
            raise ValueError(f"unknown init {self.init!r}; use 'svd' or 'random'")
        if self.fill not in ("zeros", "subspace"):
            raise ValueError(f"unknown fill {self.fill!r}; use 'zeros' or 'subspace'")
        if self.init == "random" and self.seed is None:
            raise ValueError("random initialization needs an explicit seed")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverState:
    U: SubspaceBasis
    Y: np.ndarray
    L: np.ndarray
    Lambda: np.ndarray
    mu: float
    rho: float
    c_mu: float
    c_rho: float
    p: float
    cg: CGOptions
    eps: float = float("inf")
    iter: int = 0
    inner_subspace: int = 0
    inner_coordinate: int = 0

    @property
    def smoothing(self) -> SmoothingParams:
        return SmoothingParams(self.mu, self.p)

    @property
    def lagrangian(self) -> LagrangianParams:
        return LagrangianParams(self.Lambda, self.rho)


@dataclass
class BatchResult:
    Lhat: np.ndarray
    Shat: np.ndarray
    history: list[dict]
    iterations_used: int
    U: SubspaceBasis
    eps: float

    @property
    def inner_iterations(self) -> int:
        return sum(h["inner_subspace"] + h["inner_coordinate"] for h in self.history)


def schedule_factor(v0: float, vI: float, I: int) -> float:
    """Geometric factor taking ``v0`` to ``vI`` in ``I - 1`` multiplications."""
    if I < 2:
        raise ValueError("schedule needs I >= 2")
    if not (v0 > 0 and vI > 0):
        raise ValueError("schedule endpoints must be positive")
    return (vI / v0) ** (1.0 / (I - 1))


def zero_fill(Xhat: np.ndarray, mask: ObservationMask) -> np.ndarray:
    Xhat = np.asarray(Xhat, dtype=float)
    if Xhat.shape != mask.shape:
        raise ValueError(f"data shape {Xhat.shape} does not match mask shape {mask.shape}")
    if not np.all(np.isfinite(Xhat[mask.observed])):
        raise ValueError("observed entries must be finite")
    return np.where(mask.observed, Xhat, 0.0)


def subspace_fill(Xhat: np.ndarray, mask: ObservationMask, U: SubspaceBasis, rcond: float = 0.1) -> np.ndarray:
    """Complete ``Xhat`` from the span of ``U``.

    Each column's coordinates are fit by least squares on its observed rows;
    the completed matrix is diagonally averaged and its unobserved entries
    are taken as the fill. Observed entries are returned unchanged.

    Directions of ``U`` that are nearly invisible on a column's observed rows
    (singular values below ``rcond`` times the largest) get no weight, so a
    basis vector concentrated on the hidden rows cannot blow up the fill.
    """
    X = zero_fill(Xhat, mask)
    if mask.is_full:
        return X
    Ue = U.entries
    obs = mask.observed
    Y = Ue.T @ X
    for c in np.flatnonzero(~obs.all(axis=0)):
        rows = obs[:, c]
        Y[:, c] = np.linalg.lstsq(Ue[rows], X[rows, c], rcond=rcond)[0]
    return np.where(obs, X, hankel_project(np.where(obs, X, Ue @ Y)))


def state_from_basis(U: SubspaceBasis, X0: np.ndarray, *, mu, rho, c_mu, c_rho, p, cg) -> SolverState:
    Y = U.entries.T @ X0
    return SolverState(
        U=U,
        Y=Y,
        L=U.entries @ Y,
        Lambda=np.zeros_like(X0),
        mu=mu,
        rho=rho,
        c_mu=c_mu,
        c_rho=c_rho,
        p=p,
        cg=cg,
    )


def init_state(Xhat: np.ndarray, mask: ObservationMask, cfg: BatchConfig) -> SolverState:
    X0 = zero_fill(Xhat, mask)
    m, n = X0.shape
    if cfg.k >= min(m, n):
        raise ValueError(f"rank bound k={cfg.k} must be below min(m, n)={min(m, n)}")
    if cfg.init == "svd":
        U = SubspaceBasis.from_svd(X0, cfg.k)
    else:
        U = SubspaceBasis.random(m, cfg.k, cfg.seed)
    if cfg.fill == "subspace":
        X0 = subspace_fill(Xhat, mask, U)
    cg = replace(cfg.cg, gtol=cfg.gtol_rel * max(1.0, float(np.linalg.norm(X0))))
    return state_from_basis(
        U,
        X0,
        mu=cfg.mu0,
        rho=cfg.rho0,
        c_mu=schedule_factor(cfg.mu0, cfg.muI, cfg.I),
        c_rho=schedule_factor(cfg.rho0, cfg.rhoI, cfg.I),
        p=cfg.p,
        cg=cg,
    )


def subspace_step(state: SolverState, Xhat: np.ndarray, mask: ObservationMask) -> SolverState:
    L, lp, sp = state.L, state.lagrangian, state.smoothing
    res = cg_minimize_stiefel(
        lambda U: subspace_cost(U, L, Xhat, mask, lp, sp),
        lambda U: subspace_cost_grad(U, L, Xhat, mask, lp, sp),
        state.U,
        state.cg,
    )
    return replace(state, U=res.x, inner_subspace=res.iterations)


def coordinate_step(state: SolverState, Xhat: np.ndarray, mask: ObservationMask) -> SolverState:
    """Minimize over ``Y`` starting from the coordinates of ``U U^T L``."""
    U, lp, sp = state.U.entries, state.lagrangian, state.smoothing
    res = cg_minimize_euclidean(
        lambda Y: coordinate_cost(Y, U, Xhat, mask, lp, sp),
        lambda Y: coordinate_cost_grad(Y, U, Xhat, mask, lp, sp),
        U.T @ state.L,
        state.cg,
    )
    Y = res.x
    return replace(state, Y=Y, L=U @ Y, inner_coordinate=res.iterations)


def multiplier_update(state: SolverState, structure: HankelStructure | None = None) -> SolverState:
    if structure is not None and structure.shape != state.L.shape:
        raise ValueError("structure does not match the iterate shape")
    R, eps = structure_residual(state.L)
    return replace(
        state,
        Lambda=state.Lambda - state.rho * R,
        eps=eps,
        mu=state.c_mu * state.mu,
        rho=state.c_rho * state.rho,
        iter=state.iter + 1,
    )


def iterate(state: SolverState, Xhat, mask, structure=None) -> tuple[SolverState, dict]:
    """One outer iteration; returns the new state and its log record."""
    mu, rho = state.mu, state.rho
    state = subspace_step(state, Xhat, mask)
    state = coordinate_step(state, Xhat, mask)
    cost = coordinate_cost(state.Y, state.U.entries, Xhat, mask, state.lagrangian, state.smoothing)
    state = multiplier_update(state, structure)
    record = {
        "iter": state.iter,
        "cost": cost,
        "eps": state.eps,
        "mu": mu,
        "rho": rho,
        "inner_subspace": state.inner_subspace,
        "inner_coordinate": state.inner_coordinate,
    }
    return state, record


def run_batch(Xhat: np.ndarray, mask: ObservationMask, cfg: BatchConfig, state: SolverState | None = None) -> BatchResult:
    """Solve for a Hankel low-rank estimate ``Lhat`` and sparse part ``Shat``.

    Stops after ``cfg.I`` outer iterations or as soon as the residual Hankel
    penalty drops below ``cfg.tau``. ``Shat`` is zero on unobserved entries.
    """
    Xhat = np.asarray(Xhat, dtype=float)
    structure = HankelStructure(*Xhat.shape)
    if state is None:
        state = init_state(Xhat, mask, cfg)
    history: list[dict] = []
    for _ in range(cfg.I):
        try:
            state, record = iterate(state, Xhat, mask, structure)
        except DivergenceError as exc:
            raise SolverDivergence(f"solver diverged at iteration {state.iter + 1}: {exc}", history) from exc
        history.append(record)
        log.debug("iter %(iter)d cost %(cost).6g eps %(eps).3g mu %(mu).3g rho %(rho).3g", record)
        if state.eps < cfg.tau:
            break
    Lhat = hankel_project(state.L)
    Shat = np.where(mask.observed, Xhat - Lhat, 0.0)
    return BatchResult(Lhat, Shat, history, len(history), state.U, state.eps)
