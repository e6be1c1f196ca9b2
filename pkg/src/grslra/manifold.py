"""Stiefel representatives of Grassmannian points and a Riemannian CG minimizer.

A subspace is stored as an ``m x k`` matrix ``U`` with orthonormal columns; the
projector ``U @ U.T`` is derived on demand. Tangent vectors are horizontal,
i.e. ``U.T @ xi == 0``, and the retraction is the Q factor of a thin QR
decomposition with a positive-diagonal R.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ORTHO_TOL = 1e-10
HORIZONTAL_TOL = 1e-8


class RetractionError(ArithmeticError):
    """``U + t*xi`` lost rank; the caller should shrink the step."""


class DivergenceError(ArithmeticError):
    """Cost or gradient became non-finite during an inner solve."""


def orthonormality_error(U: np.ndarray) -> float:
    k = U.shape[1]
    return float(np.linalg.norm(U.T @ U - np.eye(k)))


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal ``m x k`` basis; checked on construction."""

    entries: np.ndarray

    def __post_init__(self):
        U = np.array(self.entries, dtype=float)
        if U.ndim != 2:
            raise ValueError("basis must be a 2-D matrix")
        m, k = U.shape
        if not 1 <= k < m:
            raise ValueError(f"need 1 <= k < m, got m={m}, k={k}")
        err = orthonormality_error(U)
        if not err <= ORTHO_TOL:
            raise ValueError(f"columns are not orthonormal: ||U^T U - I||_F = {err:.3g}")
        U.setflags(write=False)
        object.__setattr__(self, "entries", U)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]

    def projector(self) -> np.ndarray:
        return self.entries @ self.entries.T

    @classmethod
    def random(cls, m: int, k: int, seed) -> "SubspaceBasis":
        rng = np.random.default_rng(seed)
        return cls(_qr_positive(rng.standard_normal((m, k))))

    @classmethod
    def from_svd(cls, X: np.ndarray, k: int) -> "SubspaceBasis":
        """Top-``k`` left singular vectors of ``X``."""
        U, _, _ = np.linalg.svd(np.asarray(X, dtype=float), full_matrices=False)
        # re-orthonormalize so the basis passes the 1e-10 check even for tall X
        return cls(_qr_positive(U[:, :k]))


@dataclass(frozen=True)
class TangentVector:
    entries: np.ndarray
    base: SubspaceBasis

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))


def _qr_positive(A: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(A)
    d = np.diag(R)
    scale = np.max(np.abs(d)) if d.size else 0.0
    if scale == 0.0 or np.min(np.abs(d)) <= 1e-12 * scale:
        raise RetractionError("rank-deficient matrix in QR retraction")
    return Q * np.where(d < 0, -1.0, 1.0)


def horizontal_project(U: SubspaceBasis, G: np.ndarray) -> TangentVector:
    """Project ``G`` onto the horizontal space at ``U``: ``(I - U U^T) G``."""
    Ue = U.entries
    G = np.asarray(G, dtype=float)
    if G.shape != Ue.shape:
        raise ValueError(f"gradient shape {G.shape} does not match basis shape {Ue.shape}")
    return TangentVector(G - Ue @ (Ue.T @ G), U)


def qr_retraction(U: SubspaceBasis, xi: TangentVector | np.ndarray, t: float) -> SubspaceBasis:
    if t < 0:
        raise ValueError("retraction step must be non-negative")
    X = xi.entries if isinstance(xi, TangentVector) else np.asarray(xi, dtype=float)
    return SubspaceBasis(_qr_positive(U.entries + t * X))


@dataclass
class CGOptions:
    """Inner CG settings shared by the Stiefel and Euclidean solvers.

    ``gtol`` is an absolute bound on the (Riemannian) gradient norm.
    ``ftol`` stops when an accepted step reduces the cost by less than
    ``ftol * max(1, |f|)``; set it to 0 to rely on ``gtol`` alone.
    """

    max_iter: int = 20
    gtol: float = 1e-8
    ftol: float = 1e-5
    c1: float = 1e-4
    max_halvings: int = 30
    initial_step: float = 1.0


@dataclass
class CGResult:
    x: object
    cost: float
    iterations: int
    costs: list[float] = field(default_factory=list)
    grad_norm: float = float("nan")
    stopped: str = ""


def backtracking_line_search(
    f: Callable,
    x0,
    direction,
    f0: float,
    slope: float,
    opts: CGOptions,
    *,
    step_fn: Callable | None = None,
    t_init: float | None = None,
) -> tuple[float, object, float]:
    """Armijo backtracking by halving.

    ``step_fn(x0, direction, t)`` maps a step length to a trial point; it
    defaults to the QR retraction, so ``x0`` is a ``SubspaceBasis``. Returns
    ``(t, x_t, f(x_t))`` for the accepted step, or ``(0.0, x0, f0)`` when no
    step passes within ``opts.max_halvings`` halvings.
    """
    if not slope < 0:
        raise ValueError(f"line search needs a descent direction, got slope {slope:.3g}")
    step_fn = step_fn or qr_retraction
    t = opts.initial_step if t_init is None else t_init
    for _ in range(opts.max_halvings + 1):
        try:
            x = step_fn(x0, direction, t)
        except RetractionError:
            t *= 0.5
            continue
        ft = f(x)
        if np.isfinite(ft) and ft <= f0 + opts.c1 * t * slope:
            return t, x, ft
        t *= 0.5
    return 0.0, x0, f0


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise DivergenceError(f"non-finite {what} in inner CG solve")


def cg_minimize_stiefel(f: Callable, grad_f: Callable, U0: SubspaceBasis, opts: CGOptions | None = None) -> CGResult:
    """Polak-Ribiere CG on the Grassmannian with QR retraction.

    ``f`` and ``grad_f`` take the raw ``m x k`` array; ``grad_f`` returns the
    Euclidean gradient, which is projected onto the horizontal space here.
    Directions are transported by re-projection onto the new horizontal space.
    """
    opts = opts or CGOptions()

    def cost(U):
        return f(U.entries)

    def rgrad(U):
        G = grad_f(U.entries)
        _check_finite(G, "gradient")
        return horizontal_project(U, G).entries

    def transport(U, V):
        return horizontal_project(U, V).entries

    def step(U, d, t):
        return qr_retraction(U, d, t)

    return _cg(cost, rgrad, U0, opts, step, transport)


def cg_minimize_euclidean(f: Callable, grad_f: Callable, x0: np.ndarray, opts: CGOptions | None = None) -> CGResult:
    """Polak-Ribiere CG in a flat space, same line search and restarts."""
    opts = opts or CGOptions()

    def grad(x):
        g = grad_f(x)
        _check_finite(g, "gradient")
        return g

    return _cg(f, grad, np.asarray(x0, dtype=float), opts, lambda x, d, t: x + t * d, lambda x, v: v)


def _cg(cost, grad, x, opts, step_fn, transport) -> CGResult:
    fx = cost(x)
    _check_finite(fx, "cost")
    g = grad(x)
    gg = float(np.vdot(g, g))
    costs = [fx]
    if np.sqrt(gg) <= opts.gtol:
        return CGResult(x, fx, 0, costs, np.sqrt(gg), "gtol")
    d = -g
    t_prev = None
    it = 0
    stopped = "max_iter"
    while it < opts.max_iter:
        slope = float(np.vdot(g, d))
        if slope >= 0:
            d, slope = -g, -gg
        if t_prev is None:
            t_init = opts.initial_step / np.sqrt(float(np.vdot(d, d)))
        else:
            t_init = 2.0 * t_prev
        t, x_new, f_new = backtracking_line_search(cost, x, d, fx, slope, opts, step_fn=step_fn, t_init=t_init)
        if t == 0.0:
            if slope == -gg:
                stopped = "line_search"
                break
            # conjugate direction failed; retry once along steepest descent
            d, slope = -g, -gg
            t, x_new, f_new = backtracking_line_search(cost, x, d, fx, slope, opts, step_fn=step_fn, t_init=t_init)
            if t == 0.0:
                stopped = "line_search"
                break
        _check_finite(f_new, "cost")
        it += 1
        g_new = grad(x_new)
        g_old = transport(x_new, g)
        d_old = transport(x_new, d)
        gg_new = float(np.vdot(g_new, g_new))
        beta = float(np.vdot(g_new, g_new - g_old)) / gg
        if beta < 0 or float(np.vdot(g_new, g_old)) > 0.5 * gg_new:
            beta = 0.0
        decrease = fx - f_new
        x, fx, g, gg, t_prev = x_new, f_new, g_new, gg_new, t
        d = -g + beta * d_old
        costs.append(fx)
        if np.sqrt(gg) <= opts.gtol:
            stopped = "gtol"
            break
        if decrease <= opts.ftol * max(1.0, abs(fx)):
            stopped = "ftol"
            break
    return CGResult(x, fx, it, costs, float(np.sqrt(gg)), stopped)
