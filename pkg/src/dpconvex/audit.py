"""Empirical checks of the stability and privacy guarantees.

Each audit returns an :class:`AuditReport` whose ``passed`` flag is exactly
``observed <= bound``. ``bound_scale`` multiplies the analytic part of a bound so a
deliberately weakened (fault-injected) run can be compared against a normal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Dataset, Example, LossFamily, LossSpec, MechanismId, PrivacyBudget, make_neighbor
from .losses import (
    empirical_risk,
    logistic_spec,
    make_spec,
    margin_loss,
    regularized_objective,
    squared_spec,
    with_tikhonov,
)
from .mechanisms import (
    MechanismConfig,
    MechanismError,
    certified,
    data_independent_params,
    noise_rate,
    sensitivity_convex,
    sensitivity_rls,
    sensitivity_strongly_convex,
    train,
)
from .noise import RngStream, noise_norm_bound, sample_spherical_exp
from .solver import DEFAULT_SOLVER, SolverConfig, SolverError, solve_arrays

N_REPLACEMENTS = 20


@dataclass(frozen=True)
class AuditReport:
    name: str
    observed: float
    bound: float
    trials: int
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.observed <= self.bound)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "observed": self.observed,
            "bound": self.bound,
            "trials": self.trials,
            "pass": self.passed,
            "details": self.details,
        }


# -- instance generation ---------------------------------------------------------------


def uniform_ball(n: int, d: int, radius: float, rng: RngStream) -> np.ndarray:
    """``n`` points uniform in the ``d``-ball of the given radius."""
    g = rng.gen.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.gen.random(n) ** (1.0 / d)
    return g * r[:, None]


def _labels(family: LossFamily, X: np.ndarray, rng: RngStream) -> np.ndarray:
    n, d = X.shape
    w0 = uniform_ball(1, d, 1.0, rng)[0]
    m = X @ w0
    if family is LossFamily.SQUARED:
        return np.clip(m + rng.gen.uniform(-0.5, 0.5, n), -1.0, 1.0)
    # noisy linear classes so both hinge regimes appear
    return np.where(m + rng.gen.logistic(0.0, 0.25, n) >= 0, 1.0, -1.0)


def random_instance(family: LossFamily, n: int, d: int, rng: RngStream) -> Dataset:
    X = uniform_ball(n, d, 1.0, rng)
    return Dataset(X, _labels(LossFamily(family), X, rng))


def _random_replacement(family: LossFamily, d: int, rng: RngStream) -> Example:
    x = uniform_ball(1, d, 1.0, rng)[0]
    if family is LossFamily.SQUARED:
        return Example(x, rng.gen.uniform(-1.0, 1.0))
    return Example(x, 1.0 if rng.gen.random() < 0.5 else -1.0)


def _unit(v: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    nrm = float(np.linalg.norm(v))
    return v / nrm if nrm > 1e-12 else fallback


def adversarial_replacements(family: LossFamily, S: Dataset, i: int, w: np.ndarray) -> list[Example]:
    """Replacements that push the gradient of example ``i`` the other way as hard as possible."""
    e1 = np.eye(S.d)[0]
    x_i, y_i = S.X[i], S.y[i]
    flipped_x = -_unit(x_i, e1)
    along_w = _unit(w, e1)
    if family is LossFamily.SQUARED:
        # flip the sign of the residual at w, then the two extreme residuals along w
        y_flip = 1.0 if float(x_i @ w - y_i) >= 0 else -1.0
        return [Example(flipped_x, y_flip), Example(along_w, -1.0), Example(-along_w, 1.0)]
    return [Example(flipped_x, -y_i), Example(along_w, -1.0), Example(-along_w, 1.0)]


def neighbor_replacements(family: LossFamily, S: Dataset, i: int, w: np.ndarray, rng: RngStream, k: int = N_REPLACEMENTS):
    out = [_random_replacement(family, S.d, rng) for _ in range(k)]
    return out + adversarial_replacements(family, S, i, w)


# -- stability -------------------------------------------------------------------------


@dataclass(frozen=True)
class _Problem:
    loss: LossSpec
    lam: float
    R: float

    @property
    def reg(self) -> float:
        return self.lam + self.loss.tikhonov

    @property
    def lipschitz(self) -> float:
        # Lipschitz constant of the whole objective on the ball
        return self.loss.rho + self.lam * self.R


def _solve(p: _Problem, S: Dataset, cfg: SolverConfig, warm=None):
    w0, a0 = (None, None) if warm is None else (warm.w, warm.dual)
    return solve_arrays(p.loss.family, S.X, S.y, p.reg, p.R, cfg, w0=w0, alpha0=a0)


def _neighbor_scan(p: _Problem, S: Dataset, cfg: SolverConfig, rng: RngStream, k: int, context: str):
    """Solve on ``S`` and on every audited neighbour; yield ``(distance, lemma_excess)``."""
    try:
        base = _solve(p, S, cfg)
    except SolverError as exc:
        raise SolverError(f"{context}: base solve failed: {exc}", exc.achieved) from exc
    theta_v = regularized_objective(p.loss, base.w, S, p.lam)
    tol = cfg.tol
    dists = []
    lemma = []
    for i in range(S.n):
        for z in neighbor_replacements(p.loss.family, S, i, base.w, rng.split(i), k):
            S2 = make_neighbor(S, i, z)
            try:
                sol = _solve(p, S2, cfg, warm=base)
            except SolverError as exc:
                raise SolverError(f"{context}, index {i}: {exc}", exc.achieved) from exc
            gap = float(np.linalg.norm(sol.w - base.w))
            # strong convexity of the objective on S around its minimiser, with solver slack
            lhs = 0.5 * p.reg * gap * gap
            rhs = regularized_objective(p.loss, sol.w, S, p.lam) - theta_v
            slack = 2 * p.lipschitz * tol + p.reg * (2 * gap * tol + 6 * tol * tol)
            dists.append(gap)
            lemma.append(lhs - rhs - slack)
    return np.array(dists), np.array(lemma)


def audit_sensitivity_detailed(
    loss: LossSpec,
    lam: float,
    R: float,
    n: int,
    d: int,
    trials: int,
    rng: RngStream,
    *,
    solver: SolverConfig = DEFAULT_SOLVER,
    replacements: int = N_REPLACEMENTS,
    bound_scale: float = 1.0,
) -> tuple[AuditReport, AuditReport]:
    """Brute-force replace-one distances of the regularised minimiser.

    Returns the sensitivity report and the companion strong-convexity report, whose
    observed value is the largest ``lam/2 ||u-v||^2 - (obj(u) - obj(v)) - slack``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    p = _Problem(certified(loss, R), lam, R)
    analytic = sensitivity_convex(p.loss.rho, lam, R, n)
    bound = bound_scale * analytic + 2 * solver.tol
    worst = 0.0
    worst_lemma = -math.inf
    per_trial = []
    count = 0
    for t in range(trials):
        trng = rng.split(t)
        S = random_instance(p.loss.family, n, d, trng.split(0))
        dists, lemma = _neighbor_scan(p, S, solver, trng.split(1), replacements, f"trial {t}")
        per_trial.append(float(dists.max()))
        worst = max(worst, float(dists.max()))
        worst_lemma = max(worst_lemma, float(lemma.max()))
        count += dists.size
    common = {"family": p.loss.family.value, "lambda": lam, "R": R, "n": n, "d": d, "neighbors": count}
    sens = AuditReport(
        f"sensitivity/{p.loss.family.value}/n={n}/d={d}",
        worst,
        bound,
        trials,
        {**common, "analytic_bound": analytic, "bound_scale": bound_scale, "tol": solver.tol,
         "per_trial_max": per_trial, "ratio_to_analytic": worst / analytic},
    )
    lemma_report = AuditReport(
        f"strong-convexity/{p.loss.family.value}/n={n}/d={d}", worst_lemma, 0.0, trials, common
    )
    return sens, lemma_report


def audit_sensitivity(loss, lam, R, n, d, trials, rng, **kw) -> AuditReport:
    return audit_sensitivity_detailed(loss, lam, R, n, d, trials, rng, **kw)[0]


# -- density ratio ---------------------------------------------------------------------


def _mechanism_problem(mechanism, loss: LossSpec, cfg: MechanismConfig, n: int, d: int) -> tuple[_Problem, float]:
    """Pre-noise optimisation problem of an output-perturbation mechanism and its sensitivity."""
    mid = MechanismId(mechanism)
    if mid is MechanismId.OUT_STRONGLY_CONVEX:
        if not loss.lambda_sc > 0:
            raise MechanismError("loss must be strongly convex")
        return _Problem(loss, 0.0, loss.radius), sensitivity_strongly_convex(loss, n)
    if mid is MechanismId.OUT_CONVEX:
        p = _Problem(certified(loss, cfg.R), cfg.lam, cfg.R)
        return p, sensitivity_convex(p.loss.rho, cfg.lam, cfg.R, n)
    if mid is MechanismId.DATA_INDEP:
        lam, R = data_independent_params(d, n, cfg.epsilon)
        cfg = replace(cfg, lam=lam, R=R)
        mid = MechanismId.RLS_OUT
    if mid is MechanismId.RLS_OUT:
        return _Problem(squared_spec(cfg.R), cfg.lam, cfg.R), sensitivity_rls(cfg.lam, cfg.R, n)
    raise MechanismError(f"{mid.value} is not an output-perturbation mechanism with a closed-form density")


def audit_dp_ratio(
    mechanism,
    loss: LossSpec,
    cfg: MechanismConfig,
    n: int,
    d: int,
    rng: RngStream,
    *,
    trials: int = 3,
    replacements: int = N_REPLACEMENTS,
    bound_scale: float = 1.0,
) -> AuditReport:
    """Worst log density ratio of an output-perturbation mechanism over audited neighbours.

    With noise density ``prop. to exp(-a ||k||)`` the log ratio at any output is at most
    ``a ||w_S - w_S'||``. The audit reports the larger of that empirical quantity and
    the calibrated one ``a * sensitivity``, where ``a`` is the rate the mechanism
    actually uses (its nominal rate divided by ``noise_multiplier``).
    """
    p, delta = _mechanism_problem(mechanism, loss, cfg, n, d)
    tol = cfg.solver.tol
    alpha_nominal = noise_rate(cfg.epsilon, delta, tol)
    alpha = alpha_nominal / cfg.noise_multiplier if cfg.noise_multiplier > 0 else math.inf
    family = p.loss.family
    worst = 0.0
    for t in range(trials):
        trng = rng.split(t)
        S = random_instance(family, n, d, trng.split(0))
        dists, _ = _neighbor_scan(p, S, cfg.solver, trng.split(1), replacements, f"trial {t}")
        worst = max(worst, float(dists.max()))
    empirical = alpha * worst
    calibrated = alpha * delta
    return AuditReport(
        f"dp-ratio/{MechanismId(mechanism).value}/eps={cfg.epsilon:g}",
        max(empirical, calibrated),
        bound_scale * cfg.epsilon + alpha * 2 * tol,
        trials,
        {
            "empirical_log_ratio": empirical,
            "calibrated_log_ratio": calibrated,
            "alpha": alpha,
            "sensitivity": delta,
            "max_distance": worst,
            "noise_multiplier": cfg.noise_multiplier,
            "family": family.value,
        },
    )


# -- noise law -------------------------------------------------------------------------


def audit_noise_moments(d: int, alpha: float, samples: int, rng: RngStream) -> AuditReport:
    """Largest z-score of the sample mean and variance of ``||k||`` against Gamma(d, 1/alpha)."""
    r = np.linalg.norm(sample_spherical_exp(d, alpha, rng, size=samples), axis=1)
    mean, var = d / alpha, d / alpha**2
    se_mean = math.sqrt(var / samples)
    se_var = var * math.sqrt((2.0 + 6.0 / d) / samples)
    z_mean = abs(float(r.mean()) - mean) / se_mean
    z_var = abs(float(r.var(ddof=1)) - var) / se_var
    return AuditReport(
        f"noise-moments/d={d}", max(z_mean, z_var), 3.0, samples,
        {"z_mean": z_mean, "z_var": z_var, "sample_mean": float(r.mean()), "sample_var": float(r.var(ddof=1))},
    )


def audit_noise_tail(d: int, alpha: float, gamma: float, samples: int, rng: RngStream, *, bound_scale: float = 1.0) -> AuditReport:
    """Frequency of ``||k|| > d ln(d/gamma) / alpha`` against ``gamma`` plus 3 binomial SEs."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    limit = bound_scale * noise_norm_bound(d, alpha, gamma)
    r = np.linalg.norm(sample_spherical_exp(d, alpha, rng, size=samples), axis=1)
    freq = float(np.mean(r > limit))
    se = math.sqrt(gamma * max(1.0 - gamma, 0.0) / samples)
    return AuditReport(
        f"noise-tail/d={d}/gamma={gamma:g}", freq, gamma + 3 * se, samples,
        {"norm_limit": limit, "binomial_se": se, "alpha": alpha},
    )


# -- stability of the randomised learner -----------------------------------------------


def audit_ro_stability(
    mechanism,
    loss: LossSpec,
    cfg: MechanismConfig,
    n: int,
    d: int,
    mc_samples: int,
    rng: RngStream,
    *,
    test_points: int = 16,
    neighbors: int = 4,
    bound_scale: float = 1.0,
    identity_neighbor: bool = False,
) -> AuditReport:
    """Monte-Carlo estimate of ``|E l(A(S), z) - E l(A(S'), z)|`` on a grid of test points.

    Losses are evaluated at the projection of the output onto the ``R``-ball, where
    the bound ``B`` of the loss holds. Both expectations share the noise draws; the
    reported statistic is ``max_z (|diff_z| - 3 SE_z)`` against ``B (e^eps - 1)``.
    ``identity_neighbor`` replaces each audited example by itself (a sanity run).
    """
    p, delta = _mechanism_problem(mechanism, loss, cfg, n, d)
    B = p.loss.bound_B
    alpha = noise_rate(cfg.epsilon, delta, cfg.solver.tol) / cfg.noise_multiplier
    family = p.loss.family
    S = random_instance(family, n, d, rng.split(0))
    base = _solve(p, S, cfg.solver)
    kappa = sample_spherical_exp(d, alpha, rng.split(1), size=mc_samples)

    def losses_at(w_bar, Z: Dataset) -> np.ndarray:
        W = w_bar[None, :] + kappa
        nrm = np.linalg.norm(W, axis=1, keepdims=True)
        W = np.where(nrm > p.R, W * (p.R / np.maximum(nrm, 1e-300)), W)
        return _loss_grid(p.loss, W, Z)

    Z = random_instance(family, test_points, d, rng.split(2))
    L0 = losses_at(base.w, Z)
    worst_stat, worst_raw, worst_se = -math.inf, 0.0, 0.0
    nrng = rng.split(3)
    for k in range(neighbors):
        i = int(nrng.split(k).gen.integers(S.n))
        if identity_neighbor:
            z = S[i]
        elif k < 2:
            z = adversarial_replacements(family, S, i, base.w)[k]
        else:
            z = _random_replacement(family, d, nrng.split(k, 1))
        sol = _solve(p, make_neighbor(S, i, z), cfg.solver, warm=base)
        diff = L0 - losses_at(sol.w, Z)
        mean = np.abs(diff.mean(axis=0))
        se = diff.std(axis=0, ddof=1) / math.sqrt(mc_samples)
        stat = mean - 3 * se
        j = int(np.argmax(stat))
        if stat[j] > worst_stat:
            worst_stat, worst_raw, worst_se = float(stat[j]), float(mean[j]), float(se[j])
    bound = bound_scale * B * math.expm1(cfg.epsilon)
    return AuditReport(
        f"ro-stability/{MechanismId(mechanism).value}/eps={cfg.epsilon:g}", worst_stat, bound, mc_samples,
        {"max_abs_difference": worst_raw, "mc_se": worst_se, "bound_B": B,
         "small_eps_approx": B * cfg.epsilon, "evaluation": "loss at projection onto the R-ball"},
    )


def _loss_grid(loss: LossSpec, W: np.ndarray, Z: Dataset) -> np.ndarray:
    """Instance losses, shape (rows of ``W``, examples of ``Z``)."""
    vals, _ = margin_loss(loss.family, W @ Z.X.T, Z.y[None, :])
    if loss.tikhonov:
        vals = vals + 0.5 * loss.tikhonov * np.sum(W * W, axis=1, keepdims=True)
    return vals


# -- utility ---------------------------------------------------------------------------


def audit_smooth_training_error(
    loss: LossSpec,
    cfg: MechanismConfig,
    n: int,
    d: int,
    gamma: float,
    trials: int,
    rng: RngStream,
    *,
    bound_scale: float = 1.0,
) -> AuditReport:
    """Frequency with which the perturbed output's excess training loss exceeds
    ``beta (d ln(d/gamma) / alpha)^2``, against ``gamma`` plus 3 binomial SEs.

    ``loss`` must be smooth and strongly convex (e.g. logistic with a Tikhonov term);
    the mechanism is output perturbation of its unregularised minimiser.
    """
    if not (loss.smooth and loss.lambda_sc > 0):
        raise MechanismError("the training-error audit needs a smooth, strongly convex loss")
    p, delta = _mechanism_problem(MechanismId.OUT_STRONGLY_CONVEX, loss, cfg, n, d)
    alpha = noise_rate(cfg.epsilon, delta, cfg.solver.tol)
    limit = bound_scale * loss.beta * noise_norm_bound(d, alpha, gamma) ** 2
    printed = loss.beta * (4 * d * math.log(d / gamma) * loss.rho / (loss.lambda_sc * n * cfg.epsilon)) ** 2
    excess = np.empty(trials)
    for t in range(trials):
        trng = rng.split(t)
        S = random_instance(loss.family, n, d, trng.split(0))
        w_bar = _solve(p, S, cfg.solver).w
        w_tilde = w_bar + cfg.noise_multiplier * sample_spherical_exp(d, alpha, trng.split(1))
        excess[t] = empirical_risk(loss, w_tilde, S) - empirical_risk(loss, w_bar, S)
    freq = float(np.mean(excess > limit))
    se = math.sqrt(gamma * (1.0 - gamma) / trials)
    return AuditReport(
        f"smooth-training-error/eps={cfg.epsilon:g}", freq, gamma + 3 * se, trials,
        {"excess_limit": limit, "limit_without_tol": printed, "max_excess": float(excess.max()),
         "mean_excess": float(excess.mean()), "alpha": alpha, "noise_multiplier": cfg.noise_multiplier},
    )


@dataclass(frozen=True)
class LinearTruth:
    """``x`` uniform in the unit ``d``-ball, ``y = <w*, x> + U(-a, a)`` with ``||w*|| + a <= 1``.

    The covariance of ``x`` is ``I/(d+2)``, so the excess squared risk of ``w`` is
    ``||w - w*||^2 / (d+2)`` exactly.
    """

    d: int
    w_star: np.ndarray
    noise_halfwidth: float = 0.5

    def __post_init__(self):
        w = np.asarray(self.w_star, dtype=float)
        if w.shape != (self.d,):
            raise ValueError("w_star must have length d")
        if float(np.linalg.norm(w)) + self.noise_halfwidth > 1 + 1e-12:
            raise ValueError("||w*|| + noise half-width must not exceed 1")
        object.__setattr__(self, "w_star", w)

    @classmethod
    def default(cls, d: int) -> LinearTruth:
        return cls(d, np.full(d, 0.5 / math.sqrt(d)))

    def sample(self, n: int, rng: RngStream) -> Dataset:
        X = uniform_ball(n, self.d, 1.0, rng)
        a = self.noise_halfwidth
        return Dataset(X, X @ self.w_star + rng.gen.uniform(-a, a, n))

    def excess_risk(self, w) -> float:
        diff = np.asarray(w) - self.w_star
        return float(diff @ diff) / (self.d + 2)


def audit_generalization_trend(
    mechanism,
    epsilon: float,
    n_grid,
    trials: int,
    rng: RngStream,
    *,
    d: int = 5,
    lam: float | None = None,
    noise_multiplier: float = 1.0,
    solver: SolverConfig = DEFAULT_SOLVER,
    slack: float = 0.10,
    min_reduction: float = 2.0,
) -> AuditReport:
    """Mean excess squared risk along ``n_grid`` for an output-perturbation mechanism.

    Each step may grow by at most ``slack`` and the last point must sit at least
    ``min_reduction`` times below the first. ``lam`` defaults to the data-independent
    ``sqrt(d / (n eps))`` at each ``n``; ``R = 1``. The reported statistic is the
    larger of the worst step ratio over ``1 + slack`` and ``min_reduction * last / first``,
    so ``observed <= 1`` is the pass condition.
    """
    truth = LinearTruth.default(d)
    ns = [int(n) for n in n_grid]
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_grid must be strictly increasing with at least two sizes")
    means = []
    for k, n in enumerate(ns):
        lam_n = lam if lam is not None else data_independent_params(d, n, epsilon)[0]
        cfg = MechanismConfig(PrivacyBudget(epsilon), lam=lam_n, R=1.0, solver=solver, noise_multiplier=noise_multiplier)
        vals = []
        for t in range(trials):
            trng = rng.split(k, t)
            S = truth.sample(n, trng.split(0))
            model = train(mechanism, S, squared_spec(1.0), cfg, trng.split(1))
            vals.append(truth.excess_risk(model.w))
        means.append(float(np.mean(vals)))
    steps = [b / a for a, b in zip(means, means[1:])]
    stat = max(max(steps) / (1 + slack), min_reduction * means[-1] / means[0])
    return AuditReport(
        f"generalization-trend/{MechanismId(mechanism).value}/eps={epsilon:g}", stat, 1.0, trials,
        {"n_grid": ns, "mean_excess_risk": means, "step_ratios": steps,
         "reduction": means[0] / means[-1], "slack": slack, "min_reduction": min_reduction},
    )


# -- named suites ----------------------------------------------------------------------

SENSITIVITY_CASES = (
    # (family, lambda, R): hinge uses R = 3 so that both hinge regimes are exercised
    ("squared", 0.5, 1.0),
    ("hinge", 0.1, 3.0),
    ("logistic", 0.1, 1.0),
)
SENSITIVITY_SIZES = ((50, 3), (200, 5))
TIKHONOV = 0.5


def tikhonov_logistic(tau: float = TIKHONOV) -> LossSpec:
    """Logistic loss plus ``(tau/2)||w||^2`` on the ball of radius ``1/tau``.

    The minimiser has norm at most ``1/(2 tau)``, so it is interior to the ball.
    """
    return with_tikhonov(logistic_spec(1.0 / tau), tau)


def dp_ratio_cases(epsilon: float):
    sq = squared_spec(1.0)
    return (
        ("out-sc", tikhonov_logistic(), MechanismConfig(PrivacyBudget(epsilon))),
        ("out-convex", sq, MechanismConfig(PrivacyBudget(epsilon), lam=0.5, R=1.0)),
        ("rls-out", sq, MechanismConfig(PrivacyBudget(epsilon), lam=0.5, R=1.0)),
    )


def suite_sensitivity(rng: RngStream, trials: int = 20) -> list[AuditReport]:
    out = []
    for c, (fam, lam, R) in enumerate(SENSITIVITY_CASES):
        for s, (n, d) in enumerate(SENSITIVITY_SIZES):
            out.extend(audit_sensitivity_detailed(make_spec(fam, R), lam, R, n, d, trials, rng.split(c, s)))
    return out


def suite_dp_ratio(rng: RngStream) -> list[AuditReport]:
    out = []
    for e, eps in enumerate((0.1, 0.5, 1.0)):
        for k, (mech, loss, cfg) in enumerate(dp_ratio_cases(eps)):
            out.append(audit_dp_ratio(mech, loss, cfg, 50, 3, rng.split(e, k)))
    return out


def suite_noise(rng: RngStream) -> list[AuditReport]:
    out = []
    for k, (d, gamma) in enumerate(((1, 0.5), (14, 0.05))):
        out.append(audit_noise_moments(d, 1.0, 100_000, rng.split(k, 0)))
        out.append(audit_noise_tail(d, 1.0, gamma, 100_000, rng.split(k, 1)))
    return out


def suite_ro_stability(rng: RngStream) -> list[AuditReport]:
    return [
        audit_ro_stability("out-convex", squared_spec(1.0), MechanismConfig(PrivacyBudget(eps), lam=0.5, R=1.0),
                           50, 3, 10_000, rng.split(k))
        for k, eps in enumerate((0.1, 0.5))
    ]


def suite_smooth(rng: RngStream) -> list[AuditReport]:
    return [audit_smooth_training_error(tikhonov_logistic(), MechanismConfig(PrivacyBudget(1.0)), 200, 5, 0.1, 200, rng)]


def suite_generalization(rng: RngStream) -> list[AuditReport]:
    return [audit_generalization_trend("out-convex", 0.5, (250, 1000, 4000), 50, rng)]


SUITES = {
    "sensitivity": suite_sensitivity,
    "dp-ratio": suite_dp_ratio,
    "noise": suite_noise,
    "ro-stability": suite_ro_stability,
    "smooth": suite_smooth,
    "generalization": suite_generalization,
}


def run_suite(name: str, rng: RngStream) -> list[AuditReport]:
    """Run a named suite; ``all`` runs every suite and ``quick`` a reduced sensitivity scan."""
    if name == "all":
        return [r for k, fn in enumerate(SUITES.values()) for r in fn(rng.split(k))]
    if name == "quick":
        return suite_sensitivity(rng, trials=1) + suite_noise(rng.split(1)) + suite_dp_ratio(rng.split(2))
    try:
        return SUITES[name](rng)
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted([*SUITES, 'all', 'quick'])}") from None
