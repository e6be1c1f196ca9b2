"""Smoothed l_p sparsifier and the augmented-Lagrangian step objectives.

Both step objectives share the form, for a candidate low-rank matrix Z,

    h_mu(mask * (Xhat - Z)) - <Lambda, Z - P(Z)> + rho/2 * ||Z - P(Z)||_F^2

where ``P`` is the Hankel projection. The subspace step uses
``Z = U U^T L`` with ``L`` held fixed; the coordinate step uses ``Z = U Y``.
Unobserved entries contribute the constant ``mu^(p/2)`` each to the data
term; the structural terms run over the whole matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .structure import HankelStructure, ObservationMask, hankel_project, mask_residual


@dataclass(frozen=True)
class SmoothingParams:
    mu: float
    p: float = 0.5

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"smoothing mu must be positive, got {self.mu}")
        if not 0 < self.p < 1:
            raise ValueError(f"exponent p must lie in (0, 1), got {self.p}")


@dataclass(frozen=True)
class LagrangianParams:
    Lambda: np.ndarray
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"penalty rho must be positive, got {self.rho}")
        if not np.all(np.isfinite(self.Lambda)):
            raise ValueError("multiplier contains non-finite entries")


def smoothed_lp(X: np.ndarray, sp: SmoothingParams) -> float:
    """``sum((x**2 + mu) ** (p/2))`` over all entries."""
    X = np.asarray(X, dtype=float)
    return float(np.sum((X * X + sp.mu) ** (0.5 * sp.p)))


def smoothed_lp_grad(X: np.ndarray, sp: SmoothingParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return sp.p * X * (X * X + sp.mu) ** (0.5 * sp.p - 1.0)


def _check_structure(structure, shape):
    if structure is not None and structure.shape != shape:
        raise ValueError(f"structure {structure.shape} does not match data shape {shape}")


def _lowrank_cost(Z, Xhat, mask, lp, sp):
    res = mask_residual(Xhat, mask, Z)
    R = Z - hankel_project(Z)
    return smoothed_lp(res, sp) - float(np.vdot(lp.Lambda, R)) + 0.5 * lp.rho * float(np.vdot(R, R))


def _lowrank_grad(Z, Xhat, mask, lp, sp):
    """Euclidean gradient of the shared objective with respect to Z.

    ``I - P`` is self-adjoint and idempotent, so the multiplier term
    differentiates to ``-(Lambda - P(Lambda))`` and the penalty to
    ``rho * (Z - P(Z))``.
    """
    res = mask_residual(Xhat, mask, Z)
    Lam = lp.Lambda
    return -smoothed_lp_grad(res, sp) - (Lam - hankel_project(Lam)) + lp.rho * (Z - hankel_project(Z))


def subspace_cost(
    U: np.ndarray,
    L: np.ndarray,
    Xhat: np.ndarray,
    mask: ObservationMask,
    lp: LagrangianParams,
    sp: SmoothingParams,
    structure: HankelStructure | None = None,
) -> float:
    U = np.asarray(U, dtype=float)
    _check_structure(structure, np.shape(L))
    Z = U @ (U.T @ L)
    return _lowrank_cost(Z, Xhat, mask, lp, sp)


def subspace_cost_grad(
    U: np.ndarray,
    L: np.ndarray,
    Xhat: np.ndarray,
    mask: ObservationMask,
    lp: LagrangianParams,
    sp: SmoothingParams,
    structure: HankelStructure | None = None,
) -> np.ndarray:
    """Euclidean gradient in ``U`` through ``Z = U U^T L``.

    With ``G`` the gradient in ``Z``: ``G L^T U + L G^T U``.
    """
    U = np.asarray(U, dtype=float)
    _check_structure(structure, np.shape(L))
    Z = U @ (U.T @ L)
    G = _lowrank_grad(Z, Xhat, mask, lp, sp)
    return G @ (L.T @ U) + L @ (G.T @ U)


def coordinate_cost(
    Y: np.ndarray,
    U: np.ndarray,
    Xhat: np.ndarray,
    mask: ObservationMask,
    lp: LagrangianParams,
    sp: SmoothingParams,
    structure: HankelStructure | None = None,
) -> float:
    U = np.asarray(U, dtype=float)
    Z = U @ Y
    _check_structure(structure, Z.shape)
    return _lowrank_cost(Z, Xhat, mask, lp, sp)


def coordinate_cost_grad(
    Y: np.ndarray,
    U: np.ndarray,
    Xhat: np.ndarray,
    mask: ObservationMask,
    lp: LagrangianParams,
    sp: SmoothingParams,
    structure: HankelStructure | None = None,
) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    Z = U @ Y
    _check_structure(structure, Z.shape)
    return U.T @ _lowrank_grad(Z, Xhat, mask, lp, sp)
