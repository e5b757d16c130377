"""Private training mechanisms: output perturbation, objective perturbation, private
parameter tuning, the data-independent rule and a functional-mechanism comparator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .core import Dataset, LossFamily, LossSpec, MechanismId, PrivacyBudget, TrainedModel, check_scaled
from .losses import empirical_risk, make_spec, squared_spec
from .noise import RngStream, sample_laplace, sample_spherical_exp
from .solver import DEFAULT_SOLVER, SolverConfig, quadratic_ball_min, solve_erm

DEFAULT_LAMBDAS = tuple(0.002 * 2**k for k in range(8))
RADII_1 = (0.25, 0.5, 1.0)
RADII_2 = (0.5, 1.0, 2.0)
EIGEN_FLOOR = 1e-6


class MechanismError(ValueError):
    pass


@dataclass(frozen=True)
class MechanismConfig:
    """Parameters of a private training run.

    ``noise_multiplier`` scales every injected noise draw (1 in normal use; 0 forces
    a noiseless run, 0.5 halves the noise for fault-injection audits).
    """

    budget: PrivacyBudget
    lam: float = 0.0
    R: float = 1.0
    c: float | None = None
    radii: tuple[float, ...] = RADII_1
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    solver: SolverConfig = DEFAULT_SOLVER
    chaudhuri_beta: bool = False
    conservative_sensitivity: bool = False
    noise_multiplier: float = 1.0
    base: str = "rls-out"

    @property
    def epsilon(self) -> float:
        return self.budget.epsilon

    def snapshot(self, **extra) -> dict:
        out = {
            "epsilon": self.epsilon,
            "lambda": self.lam,
            "R": self.R,
            "c": self.c,
            "radii": list(self.radii),
            "lambdas": list(self.lambdas),
            "solver_tol": self.solver.tol,
            "chaudhuri_beta": self.chaudhuri_beta,
            "conservative_sensitivity": self.conservative_sensitivity,
            "noise_multiplier": self.noise_multiplier,
        }
        out.update(extra)
        return out


def _require_lambda(cfg: MechanismConfig) -> None:
    if not cfg.lam > 0:
        raise MechanismError("lambda must be positive for a regularised mechanism")
    if not cfg.R > 0:
        raise MechanismError("R must be positive")


def certified(loss: LossSpec, R: float) -> LossSpec:
    """Return a loss spec whose constants are valid on the ``R``-ball."""
    if loss.radius >= R:
        return loss
    if loss.tikhonov:
        raise MechanismError(f"loss constants certified for R={loss.radius}, mechanism needs R={R}")
    return make_spec(loss.family, R)


# -- sensitivities and noise rates -------------------------------------------------


def sensitivity_strongly_convex(loss: LossSpec, n: int) -> float:
    """l2 sensitivity ``4 rho / (lambda n)`` of the minimiser of a lambda-strongly convex average loss."""
    return 4.0 * loss.rho / (loss.lambda_sc * n)


def sensitivity_convex(rho: float, lam: float, R: float, n: int) -> float:
    """Sensitivity with the Tikhonov term folded into the loss: ``4 (rho + lam R) / (lam n)``."""
    return 4.0 * (rho + lam * R) / (lam * n)


def sensitivity_rls(lam: float, R: float, n: int) -> float:
    return (12.0 * R + 8.0) / (lam * n)


def noise_rate(epsilon: float, sensitivity: float, tol: float) -> float:
    """Rate ``alpha`` of the ``exp(-alpha ||k||)`` noise; solver error widens the sensitivity by ``2 tol``."""
    return epsilon / (sensitivity + 2.0 * tol)


def _perturb(w_bar, alpha, rng, multiplier):
    kappa = sample_spherical_exp(w_bar.shape[0], alpha, rng)
    return w_bar + multiplier * kappa


# -- output perturbation -------------------------------------------------------------


def output_perturb_strongly_convex(S: Dataset, loss: LossSpec, cfg: MechanismConfig, rng: RngStream) -> TrainedModel:
    """Perturb the (unregularised) empirical risk minimiser of a strongly convex loss."""
    if not loss.lambda_sc > 0:
        raise MechanismError("loss must be strongly convex (lambda_sc > 0)")
    check_scaled(S)
    R = loss.radius
    w_bar = solve_erm(S, loss, 0.0, R, cfg.solver)
    delta = sensitivity_strongly_convex(loss, S.n)
    alpha = noise_rate(cfg.epsilon, delta, cfg.solver.tol)
    w = _perturb(w_bar, alpha, rng, cfg.noise_multiplier)
    return TrainedModel(
        w, MechanismId.OUT_STRONGLY_CONVEX, cfg.snapshot(alpha=alpha, sensitivity=delta, loss=loss.to_dict()),
        rng.seed, R, pre_noise_w=w_bar, scaling=S.scaling,
    )


def output_perturb_convex(S: Dataset, loss: LossSpec, cfg: MechanismConfig, rng: RngStream) -> TrainedModel:
    _require_lambda(cfg)
    check_scaled(S)
    loss = certified(loss, cfg.R)
    w_bar = solve_erm(S, loss, cfg.lam, cfg.R, cfg.solver)
    delta = sensitivity_convex(loss.rho, cfg.lam, cfg.R, S.n)
    alpha = noise_rate(cfg.epsilon, delta, cfg.solver.tol)
    w = _perturb(w_bar, alpha, rng, cfg.noise_multiplier)
    return TrainedModel(
        w, MechanismId.OUT_CONVEX, cfg.snapshot(alpha=alpha, sensitivity=delta, loss=loss.to_dict()),
        rng.seed, cfg.R, pre_noise_w=w_bar, scaling=S.scaling,
    )


def rls_out(S: Dataset, cfg: MechanismConfig, rng: RngStream, mechanism_id=MechanismId.RLS_OUT) -> TrainedModel:
    """Output-perturbed ridge regression with noise rate ``lam n eps / (12R + 8)``.

    ``12R + 8`` dominates ``4(rho + lam R)`` for the squared loss only when ``lam <= 1``,
    so larger ``lam`` is rejected.
    """
    _require_lambda(cfg)
    if cfg.lam > 1:
        raise MechanismError("rls-out requires lambda <= 1")
    check_scaled(S)
    w_bar = solve_erm(S, squared_spec(cfg.R), cfg.lam, cfg.R, cfg.solver)
    delta = sensitivity_rls(cfg.lam, cfg.R, S.n)
    alpha = noise_rate(cfg.epsilon, delta, cfg.solver.tol)
    w = _perturb(w_bar, alpha, rng, cfg.noise_multiplier)
    return TrainedModel(
        w, mechanism_id, cfg.snapshot(alpha=alpha, sensitivity=delta), rng.seed, cfg.R,
        pre_noise_w=w_bar, scaling=S.scaling,
    )


def data_independent_params(d: int, n: int, epsilon: float) -> tuple[float, float]:
    """``(lambda, R) = (sqrt(d / (n eps)), 1)``."""
    if d < 1 or n < 1:
        raise ValueError("d and n must be >= 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return math.sqrt(d / (n * epsilon)), 1.0


def data_independent(S: Dataset, cfg: MechanismConfig, rng: RngStream) -> TrainedModel:
    lam, R = data_independent_params(S.d, S.n, cfg.epsilon)
    return rls_out(S, replace(cfg, lam=lam, R=R), rng, mechanism_id=MechanismId.DATA_INDEP)


# -- objective perturbation ----------------------------------------------------------

_DEFAULT_CURVATURE = {LossFamily.SQUARED: 2.0, LossFamily.LOGISTIC: 0.25}


def objective_perturbation_params(epsilon: float, n: int, lam: float, c: float, chaudhuri_beta: bool = False):
    """Return ``(eps_prime, delta, beta)`` as computed before the noise draw."""
    eps_prime = epsilon - math.log(1 + 2 * c / (n * lam) + c * c / (n * n * lam * lam))
    if eps_prime > 0:
        delta = 0.0
    else:
        delta = c / (n * math.exp(epsilon / 4) - 1) - lam
        eps_prime = epsilon / 2
    beta = eps_prime / 2 if chaudhuri_beta else epsilon / 2
    return eps_prime, delta, beta


def objective_perturb(S: Dataset, loss: LossSpec, cfg: MechanismConfig, rng: RngStream) -> TrainedModel:
    """Minimise ``L_S(w) + <nu, w>/n + lam/2 ||w||^2`` on the ball with ``nu ~ exp(-beta ||nu||)``.

    ``delta`` is computed and recorded but, as in the printed procedure, does not enter
    the objective.
    """
    _require_lambda(cfg)
    check_scaled(S)
    c = cfg.c if cfg.c is not None else _DEFAULT_CURVATURE.get(loss.family)
    if c is None:
        raise MechanismError(f"no default curvature bound c for the {loss.family.value} loss")
    eps_prime, delta, beta = objective_perturbation_params(cfg.epsilon, S.n, cfg.lam, c, cfg.chaudhuri_beta)
    nu = cfg.noise_multiplier * sample_spherical_exp(S.d, beta, rng)
    w = solve_erm(S, loss, cfg.lam, cfg.R, cfg.solver, linear=nu / S.n)
    return TrainedModel(
        w, MechanismId.OBJ_PERTURB,
        cfg.snapshot(c=c, eps_prime=eps_prime, delta=delta, beta=beta, loss=loss.to_dict()),
        rng.seed, cfg.R, scaling=S.scaling,
    )


# -- functional mechanism comparator ------------------------------------------------


def functional_sensitivity(d: int, n: int) -> float:
    return 2.0 * (d + 1) ** 2 / n


def functional_mechanism_baseline(S: Dataset, cfg: MechanismConfig, rng: RngStream) -> TrainedModel:
    """Perturb the coefficients of the quadratic ``w'Aw - b'w`` with ``A = X'X/n``, ``b = 2X'y/n``.

    Each distinct entry of ``A`` (upper triangle, mirrored) and of ``b`` receives
    Laplace noise of scale ``2(d+1)^2 / (n eps)``; eigenvalues of the noisy ``A`` are
    floored at ``1e-6`` before minimising over the ``R``-ball.
    """
    check_scaled(S)
    if not cfg.R > 0:
        raise MechanismError("R must be positive")
    n, d = S.X.shape
    A = S.X.T @ S.X / n
    b = 2.0 * S.X.T @ S.y / n
    delta = functional_sensitivity(d, n)
    scale = delta / cfg.epsilon
    iu = np.triu_indices(d)
    noise_A = np.zeros((d, d))
    noise_A[iu] = sample_laplace(scale, rng, size=len(iu[0]))
    noise_A = noise_A + np.triu(noise_A, 1).T
    noise_b = sample_laplace(scale, rng, size=d)
    A_hat = A + cfg.noise_multiplier * noise_A
    b_hat = b + cfg.noise_multiplier * noise_b
    e, Q = np.linalg.eigh(A_hat)
    A_hat = (Q * np.maximum(e, EIGEN_FLOOR)) @ Q.T
    w = quadratic_ball_min(2.0 * A_hat, b_hat, cfg.R)
    return TrainedModel(
        w, MechanismId.FUNCTIONAL, cfg.snapshot(sensitivity=delta, laplace_scale=scale), rng.seed, cfg.R,
        scaling=S.scaling,
    )


# -- private tuning --------------------------------------------------------------------


def utility_sensitivity(R: float, conservative: bool = False) -> float:
    return (R + 1.0) ** 2 if conservative else R * R


def selection_probabilities(val_losses, epsilon: float, R: float, conservative: bool = False) -> np.ndarray:
    """Exponential-mechanism probabilities ``prop. to exp(-L eps / (2 sens))``."""
    logits = -np.asarray(val_losses, dtype=float) * epsilon / (2.0 * utility_sensitivity(R, conservative))
    return np.exp(logits - logsumexp(logits))


Trainer = Callable[[Dataset, LossSpec, MechanismConfig, RngStream], TrainedModel]


def _rls_trainer(S, loss, cfg, rng):
    return rls_out(S, cfg, rng)


def _obj_trainer(S, loss, cfg, rng):
    return objective_perturb(S, loss, cfg, rng)


def _convex_trainer(S, loss, cfg, rng):
    return output_perturb_convex(S, loss, cfg, rng)


BASE_TRAINERS: dict[str, Trainer] = {
    "rls-out": _rls_trainer,
    "out-convex": _convex_trainer,
    "obj-perturb": _obj_trainer,
}


@dataclass
class TuningResult:
    model: TrainedModel
    candidates: list[TrainedModel] = field(default_factory=list)
    val_losses: np.ndarray | None = None
    probabilities: np.ndarray | None = None
    chosen: int = -1


def split_chunks(S: Dataset, m: int, rng: RngStream) -> tuple[list[Dataset], Dataset]:
    """Shuffle, then cut ``m`` equal training chunks; leftover rows join the validation chunk."""
    if S.n < m + 1:
        raise MechanismError(f"need at least {m + 1} examples for {m} candidates, have {S.n}")
    perm = rng.gen.permutation(S.n)
    size = S.n // (m + 1)
    chunks = [S.subset(perm[k * size:(k + 1) * size]) for k in range(m)]
    return chunks, S.subset(perm[m * size:])


def tune_on_chunks(
    chunks: list[Dataset],
    validation: Dataset,
    loss: LossSpec,
    cfg: MechanismConfig,
    grid: list[tuple[float, float]],
    trainer: Trainer,
    rng: RngStream,
) -> TuningResult:
    if len(chunks) != len(grid):
        raise MechanismError("one training chunk per grid point is required")
    candidates = []
    for k, ((R_k, lam_k), chunk) in enumerate(zip(grid, chunks)):
        candidates.append(trainer(chunk, loss, replace(cfg, R=R_k, lam=lam_k), rng.split(1, k)))
    val_losses = np.array([empirical_risk(loss, m.w, validation) for m in candidates])
    R_max = max(R for R, _ in grid)
    probs = selection_probabilities(val_losses, cfg.epsilon, R_max, cfg.conservative_sensitivity)
    chosen = int(rng.split(2).gen.choice(len(candidates), p=probs))
    pick = candidates[chosen]
    model = TrainedModel(
        pick.w, MechanismId.TUNED,
        cfg.snapshot(
            chosen=chosen, chosen_R=grid[chosen][0], chosen_lambda=grid[chosen][1], base=cfg.base,
            selection_probabilities=probs.tolist(), validation_losses=val_losses.tolist(),
        ),
        rng.seed, grid[chosen][0], pre_noise_w=pick.pre_noise_w, scaling=pick.scaling,
    )
    return TuningResult(model, candidates, val_losses, probs, chosen)


def tuning_grid(cfg: MechanismConfig) -> list[tuple[float, float]]:
    if not cfg.radii or not cfg.lambdas:
        raise MechanismError("parameter grids must be non-empty")
    return [(R, lam) for R in cfg.radii for lam in cfg.lambdas]


def tune_private(S: Dataset, loss: LossSpec, cfg: MechanismConfig, rng: RngStream, trainer: Trainer | None = None) -> TrainedModel:
    """Train one candidate per ``(R, lambda)`` pair on disjoint chunks and pick one with the exponential mechanism."""
    return tune_private_detailed(S, loss, cfg, rng, trainer).model


def tune_private_detailed(S, loss, cfg, rng, trainer=None) -> TuningResult:
    check_scaled(S)
    grid = tuning_grid(cfg)
    chunks, validation = split_chunks(S, len(grid), rng.split(0))
    return tune_on_chunks(chunks, validation, loss, cfg, grid, trainer or BASE_TRAINERS[cfg.base], rng)


# -- registry -----------------------------------------------------------------------


def train(mechanism: MechanismId | str, S: Dataset, loss: LossSpec, cfg: MechanismConfig, rng: RngStream) -> TrainedModel:
    """Dispatch by mechanism id."""
    mid = MechanismId(mechanism)
    if mid is MechanismId.OUT_STRONGLY_CONVEX:
        return output_perturb_strongly_convex(S, loss, cfg, rng)
    if mid is MechanismId.OUT_CONVEX:
        return output_perturb_convex(S, loss, cfg, rng)
    if mid is MechanismId.RLS_OUT:
        return rls_out(S, cfg, rng)
    if mid is MechanismId.OBJ_PERTURB:
        return objective_perturb(S, loss, cfg, rng)
    if mid is MechanismId.FUNCTIONAL:
        return functional_mechanism_baseline(S, cfg, rng)
    if mid is MechanismId.TUNED:
        return tune_private(S, loss, cfg, rng)
    if mid is MechanismId.DATA_INDEP:
        return data_independent(S, cfg, rng)
    if mid is MechanismId.NON_PRIVATE:
        w = solve_erm(S, certified(loss, cfg.R), cfg.lam, cfg.R, cfg.solver)
        return TrainedModel(w, mid, cfg.snapshot(), rng.seed, cfg.R, pre_noise_w=w, scaling=S.scaling)
    raise MechanismError(f"mechanism {mid.value} is not trainable through this entry point")
