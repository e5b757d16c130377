"""Instance losses with certified convexity, Lipschitz and smoothness constants.

All constants are certified on the ball ``||w|| <= R`` for data with ``||x|| <= 1``
and ``|y| <= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import DataError, Dataset, Example, LossFamily, LossSpec


@dataclass(frozen=True, eq=False)
class LossEval:
    value: float
    subgradient: np.ndarray


def _check(w, z: Example) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != z.x.shape:
        raise DataError(f"dimension mismatch: w{w.shape} vs x{z.x.shape}")
    return w


def _check_label(y: float) -> None:
    if y not in (-1.0, 1.0):
        raise DataError(f"label must be -1 or +1, got {y}")


def squared_loss(w, z: Example) -> LossEval:
    w = _check(w, z)
    r = float(w @ z.x) - z.y
    return LossEval(r * r, 2.0 * r * z.x)


def hinge_loss(w, z: Example) -> LossEval:
    """``max{0, y(1 - <w,x>)}``; the subgradient at the kink is 0."""
    w = _check(w, z)
    _check_label(z.y)
    a = z.y * (1.0 - float(w @ z.x))
    if a > 0:
        return LossEval(a, -z.y * z.x)
    return LossEval(0.0, np.zeros_like(z.x))


def logistic_loss(w, z: Example) -> LossEval:
    w = _check(w, z)
    _check_label(z.y)
    t = -z.y * float(w @ z.x)
    return LossEval(float(np.logaddexp(0.0, t)), -z.y * z.x * _sigmoid(t))


def _sigmoid(t):
    # scipy.special.expit is the stable form; kept local to avoid an import per call
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(t)))


_INSTANCE = {
    LossFamily.SQUARED: squared_loss,
    LossFamily.HINGE: hinge_loss,
    LossFamily.LOGISTIC: logistic_loss,
}


def evaluate(spec: LossSpec, w, z: Example) -> LossEval:
    """Instance loss of ``spec`` (Tikhonov term included) at ``(w, z)``."""
    ev = _INSTANCE[spec.family](w, z)
    if spec.tikhonov:
        w = np.asarray(w, dtype=float)
        return LossEval(ev.value + 0.5 * spec.tikhonov * float(w @ w), ev.subgradient + spec.tikhonov * w)
    return ev


# -- constructors -----------------------------------------------------------------


def squared_spec(R: float = 1.0) -> LossSpec:
    return LossSpec(LossFamily.SQUARED, rho=2 * R + 2, lambda_sc=0.0, beta=2.0, bound_B=(R + 1) ** 2, radius=R)


def hinge_spec(R: float = 1.0) -> LossSpec:
    return LossSpec(LossFamily.HINGE, rho=1.0, lambda_sc=0.0, beta=None, bound_B=1.0 + R, radius=R)


def logistic_spec(R: float = 1.0) -> LossSpec:
    return LossSpec(
        LossFamily.LOGISTIC, rho=1.0, lambda_sc=0.0, beta=0.25, bound_B=float(np.logaddexp(0.0, R)), radius=R
    )


def make_spec(family: LossFamily | str, R: float = 1.0) -> LossSpec:
    family = LossFamily(family)
    return {LossFamily.SQUARED: squared_spec, LossFamily.HINGE: hinge_spec, LossFamily.LOGISTIC: logistic_spec}[
        family
    ](R)


def with_tikhonov(spec: LossSpec, tau: float) -> LossSpec:
    """Fold ``(tau/2)||w||^2`` into the instance loss, making it ``tau``-strongly convex."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    R = spec.radius
    return replace(
        spec,
        rho=spec.rho + tau * R,
        lambda_sc=spec.lambda_sc + tau,
        beta=None if spec.beta is None else spec.beta + tau,
        bound_B=spec.bound_B + 0.5 * tau * R * R,
        tikhonov=spec.tikhonov + tau,
    )


# -- vectorised evaluation used by solvers and audits -------------------------------


def margin_loss(family: LossFamily, m: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-example values and derivatives w.r.t. the margin ``m = <w, x>``."""
    if family is LossFamily.SQUARED:
        r = m - y
        return r * r, 2.0 * r
    if family is LossFamily.LOGISTIC:
        t = -y * m
        return np.logaddexp(0.0, t), -y * _sigmoid(t)
    a = y * (1.0 - m)
    active = a > 0
    return np.where(active, a, 0.0), np.where(active, -y, 0.0)


def instance_losses(spec: LossSpec, w, X, y) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    vals, _ = margin_loss(spec.family, np.asarray(X) @ w, np.asarray(y))
    if spec.tikhonov:
        vals = vals + 0.5 * spec.tikhonov * float(w @ w)
    return vals


def empirical_risk(spec: LossSpec, w, S: Dataset) -> float:
    """``L_S(w)``: the average instance loss."""
    return float(np.mean(instance_losses(spec, w, S.X, S.y)))


def empirical_gradient(spec: LossSpec, w, S: Dataset) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    _, dm = margin_loss(spec.family, S.X @ w, S.y)
    g = S.X.T @ dm / S.n
    if spec.tikhonov:
        g = g + spec.tikhonov * w
    return g


def regularized_objective(spec: LossSpec, w, S: Dataset, lam: float, linear=None) -> float:
    """``L_S(w) + (lam/2)||w||^2 (+ <linear, w>)``."""
    w = np.asarray(w, dtype=float)
    val = empirical_risk(spec, w, S) + 0.5 * lam * float(w @ w)
    if linear is not None:
        val += float(np.asarray(linear) @ w)
    return val


def validate_labels(spec: LossSpec, S: Dataset) -> None:
    if spec.family in (LossFamily.HINGE, LossFamily.LOGISTIC):
        if not np.all(np.isin(S.y, (-1.0, 1.0))):
            raise DataError(f"{spec.family.value} loss needs labels in {{-1, +1}}")

