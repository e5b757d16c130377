"""Constrained, regularised empirical risk minimisation.

Solves ``argmin_{||w|| <= R} L_S(w) + (lam/2)||w||^2 (+ <linear, w>)`` to a certified
accuracy ``||w - w*|| <= tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .core import DataError, Dataset, LossFamily, LossSpec
from .losses import validate_labels

_FAMILY_CODE = {LossFamily.SQUARED: _kernels.SQUARED, LossFamily.HINGE: _kernels.HINGE, LossFamily.LOGISTIC: _kernels.LOGISTIC}


class StepRule(str, Enum):
    STRONGLY_CONVEX = "strongly-convex"
    FIXED_SMOOTH = "fixed-smooth"


class SolverError(RuntimeError):
    def __init__(self, msg: str, achieved: float = math.nan):
        super().__init__(f"{msg} (achieved accuracy bound {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 200_000
    tol: float = 1e-6
    step_rule: StepRule | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True, eq=False)
class Solution:
    w: np.ndarray
    iterations: int
    certificate: float
    method: str
    dual: np.ndarray | None = None


def _project(w: np.ndarray, R: float) -> np.ndarray:
    nrm = float(np.linalg.norm(w))
    return w * (R / nrm) if nrm > R else w


def quadratic_ball_min(H: np.ndarray, r: np.ndarray, R: float) -> np.ndarray:
    """Exact ``argmin_{||w|| <= R} (1/2) w'Hw - r'w`` for symmetric PSD ``H``.

    Interior solutions come from the eigen-decomposition; boundary ones solve the
    secular equation ``||(H + mu I)^{-1} r|| = R`` for the multiplier ``mu > 0``.
    """
    e, Q = np.linalg.eigh(H)
    e = np.maximum(e, 0.0)
    c = Q.T @ r
    flat = e <= 1e-13 * max(float(e[-1]), 1e-300)
    # a linear term along a flat direction is unbounded below unless the ball stops it
    if not np.any(flat & (np.abs(c) > 1e-13 * max(float(np.abs(c).max()), 1e-300))):
        w = Q @ np.where(flat, 0.0, c / np.where(flat, 1.0, e))
        if float(np.linalg.norm(w)) <= R:
            return w
    cc = c * c

    def phi(mu):
        return math.sqrt(float(np.sum(cc / (e + mu) ** 2))) - R

    # phi decreases on (0, inf), is positive near 0 here and phi(||c||/R) <= 0
    hi = float(np.linalg.norm(c)) / R
    lo = hi
    for _ in range(4000):
        lo *= 0.5
        if phi(lo) > 0:
            break
    mu = brentq(phi, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _project(Q @ (c / (e + mu)), R)


def ridge_closed_form(S: Dataset, lam: float, linear=None) -> np.ndarray:
    """Solve ``((2/n) X'X + lam I) w = (2/n) X'y (- linear)``: the unconstrained ridge stationarity condition."""
    if not lam > 0:
        raise ValueError("lambda must be positive for the closed form")
    n, d = S.X.shape
    A = (2.0 / n) * (S.X.T @ S.X) + lam * np.eye(d)
    b = (2.0 / n) * (S.X.T @ S.y)
    if linear is not None:
        b = b - np.asarray(linear, dtype=float)
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:  # not reachable for lam > 0
        raise SolverError("singular ridge system") from exc


def _squared_exact(X, y, reg, R, lin) -> np.ndarray:
    n, d = X.shape
    H = (2.0 / n) * (X.T @ X) + reg * np.eye(d)
    r = (2.0 / n) * (X.T @ y) - lin
    return quadratic_ball_min(H, r, R)


def _smoothness(family: LossFamily, X: np.ndarray) -> float:
    """Data-dependent smoothness of the average loss; never above the certified beta."""
    top = float(np.linalg.eigvalsh(X.T @ X / X.shape[0])[-1]) if X.size else 0.0
    return {LossFamily.SQUARED: 2.0, LossFamily.LOGISTIC: 0.25}[family] * top


def solve_arrays(
    family: LossFamily,
    X: np.ndarray,
    y: np.ndarray,
    reg: float,
    R: float,
    cfg: SolverConfig = DEFAULT_SOLVER,
    linear: np.ndarray | None = None,
    w0: np.ndarray | None = None,
    alpha0: np.ndarray | None = None,
    method: str = "auto",
) -> Solution:
    """Array-level entry point; ``reg`` is the total quadratic coefficient (lam + tikhonov)."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n, d = X.shape
    lin = np.zeros(d) if linear is None else np.ascontiguousarray(linear, dtype=float)
    if not R > 0:
        raise ValueError("R must be positive")
    if reg < 0:
        raise ValueError("regularisation must be non-negative")

    if family is LossFamily.SQUARED and method == "auto":
        w = _squared_exact(X, y, reg, R, lin)
        if not np.all(np.isfinite(w)):
            raise SolverError("non-finite solution")
        return Solution(w, 1, 0.0, "exact")

    if reg <= 0:
        raise DataError("a strongly convex objective is required: lambda + lambda_sc must be positive")

    if method == "subgradient" or cfg.step_rule is StepRule.STRONGLY_CONVEX:
        # the literal 1/(mu t) schedule carries no accuracy certificate
        w = _kernels.projected_subgradient(_FAMILY_CODE[family], X, y, reg, R, lin, reg, cfg.max_iters)
        return Solution(w, cfg.max_iters, math.nan, "subgradient")

    start = np.zeros(d) if w0 is None else np.asarray(w0, dtype=float)
    if family is LossFamily.HINGE:
        a0 = np.zeros(n) if alpha0 is None else np.asarray(alpha0, dtype=float)
        w, alpha, iters, cert = _kernels.hinge_dual_cd(X, y, reg, R, lin, cfg.tol, cfg.max_iters, a0)
        if not cert <= cfg.tol:
            raise SolverError(f"hinge dual ascent did not reach tol={cfg.tol} in {iters} epochs", cert)
        return Solution(w, iters, cert, "dual-cd", alpha)

    L = _smoothness(family, X) + reg + 1e-12
    w, iters, cert = _kernels.accelerated_projected_gradient(
        _FAMILY_CODE[family], X, y, reg, R, lin, L, reg, cfg.tol, cfg.max_iters, start
    )
    if not np.all(np.isfinite(w)):
        raise SolverError("non-finite iterate", cert)
    if not cert <= cfg.tol:
        raise SolverError(f"projected gradient did not reach tol={cfg.tol} in {iters} iterations", cert)
    return Solution(w, iters, cert, "projected-gradient")


def solve_erm(
    S: Dataset,
    loss: LossSpec,
    lam: float,
    R: float,
    cfg: SolverConfig = DEFAULT_SOLVER,
    *,
    linear=None,
    w0=None,
    method: str = "auto",
) -> np.ndarray:
    """Minimise ``L_S(w) + (lam/2)||w||^2`` over the ball of radius ``R``.

    ``method="auto"`` uses the exact quadratic route for the squared loss and a
    certified iterative solver otherwise; ``"iterative"`` forces the iterative route.
    """
    return solve(S, loss, lam, R, cfg, linear=linear, w0=w0, method=method).w


def solve(S, loss, lam, R, cfg=DEFAULT_SOLVER, *, linear=None, w0=None, alpha0=None, method="auto") -> Solution:
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    validate_labels(loss, S)
    reg = lam + loss.tikhonov
    return solve_arrays(
        loss.family, S.X, S.y, reg, R, cfg, linear=linear, w0=w0, alpha0=alpha0, method=method
    )
