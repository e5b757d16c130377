"""Synthetic data, experiment sweeps, metrics and result persistence."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .attacks import MiTarget, empirical_prior, mi_accuracy, residual_sigma
from .core import Dataset, MechanismId, PrivacyBudget, TrainedModel
from .losses import empirical_risk, squared_spec
from .mechanisms import (
    RADII_1,
    MechanismConfig,
    MechanismError,
    data_independent_params,
    rls_out,
    split_chunks,
    train,
    tune_on_chunks,
    tuning_grid,
    BASE_TRAINERS,
)
from .noise import RngStream, default_seed
from .solver import SolverError, solve_erm

log = logging.getLogger(__name__)

ORACLE_RADII = (0.25, 0.5, 1.0, 2.0)
ORACLE_LAMBDAS = tuple(float(v) for v in np.linspace(0.001, 0.5, 50))
DEFAULT_EPSILONS = (0.1, 0.2, 0.3, 0.5, 1.0, 5.0)
DEFAULT_RATES = tuple(round(0.1 * k, 1) for k in range(1, 10))
RESULT_COLUMNS = ("mechanism", "epsilon", "n", "trial", "mse", "mi_accuracy", "seed")


# -- synthetic data --------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Continuous features plus one categorical feature (the attack target).

    Continuous features are uniform in a ball of radius ``1/sqrt(2)``; the categorical
    level is one-hot encoded and divided by ``sqrt(2)``, so every row has ``||x|| <= 1``.
    ``w_star`` defaults to ``0.4/sqrt(d_continuous)`` on each continuous feature and
    evenly spaced weights in ``[-0.5, 0.5]`` on the levels.
    """

    d_continuous: int = 11
    snp_levels: int = 3
    prior: tuple[float, ...] = (0.25, 0.5, 0.25)
    w_star: tuple[float, ...] | None = None
    noise_sigma: float = 0.1
    n_train: int = 3000
    n_valid: int = 1000

    def __post_init__(self):
        if self.d_continuous < 0 or self.snp_levels < 1:
            raise ValueError("need d_continuous >= 0 and snp_levels >= 1")
        prior = tuple(float(p) for p in self.prior)
        if len(prior) != self.snp_levels or min(prior) < 0 or not math.isclose(sum(prior), 1.0, abs_tol=1e-9):
            raise ValueError("prior must be a probability vector with one entry per level")
        object.__setattr__(self, "prior", prior)
        if self.w_star is not None:
            w = tuple(float(v) for v in self.w_star)
            if len(w) != self.d:
                raise ValueError(f"w_star must have length {self.d}")
            if float(np.linalg.norm(w)) > 1 + 1e-12:
                raise ValueError("||w_star|| must not exceed 1")
            object.__setattr__(self, "w_star", w)
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.n_train < 1 or self.n_valid < 1:
            raise ValueError("n_train and n_valid must be positive")

    @property
    def d(self) -> int:
        return self.d_continuous + self.snp_levels

    @property
    def target_index(self) -> tuple[int, ...]:
        return tuple(range(self.d_continuous, self.d))

    def weights(self) -> np.ndarray:
        if self.w_star is not None:
            return np.array(self.w_star)
        cont = np.full(self.d_continuous, 0.4 / math.sqrt(self.d_continuous)) if self.d_continuous else np.zeros(0)
        levels = np.linspace(-0.5, 0.5, self.snp_levels) if self.snp_levels > 1 else np.zeros(1)
        return np.concatenate([cont, levels])

    def sample(self, n: int, rng: RngStream) -> Dataset:
        g = rng.gen
        dc = self.d_continuous
        if dc:
            u = g.standard_normal((n, dc))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            xc = u * (g.random(n) ** (1.0 / dc) / math.sqrt(2.0))[:, None]
        else:
            xc = np.zeros((n, 0))
        level = g.choice(self.snp_levels, size=n, p=self.prior)
        X = np.hstack([xc, np.eye(self.snp_levels)[level] / math.sqrt(2.0)])
        y = np.clip(X @ self.weights() + self.noise_sigma * g.standard_normal(n), -1.0, 1.0)
        return Dataset(X, y)

    @classmethod
    def from_dict(cls, data: dict) -> SyntheticSpec:
        data = dict(data)
        for key in ("prior", "w_star"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


def generate(spec: SyntheticSpec, rng: RngStream) -> tuple[Dataset, Dataset, MiTarget]:
    """Draw the fixed training/validation split and the attack target description.

    The target's residual sigma comes from the non-private least-squares fit on the
    training set (unit ball); its prior is the validation set's level frequencies.
    """
    train_set = spec.sample(spec.n_train, rng.split(0))
    valid = spec.sample(spec.n_valid, rng.split(1))
    w_np = solve_erm(train_set, squared_spec(1.0), 0.0, 1.0)
    target = MiTarget(
        spec.target_index,
        np.eye(spec.snp_levels) / math.sqrt(2.0),
        np.full(spec.snp_levels, 1.0 / spec.snp_levels),
        residual_sigma(w_np, train_set),
    )
    return train_set, valid, target.with_prior(empirical_prior(valid, target))


# -- metrics ---------------------------------------------------------------------------


def eval_mse(model: TrainedModel, valid: Dataset) -> float:
    """Mean squared prediction error on ``valid`` in the scaled space."""
    if valid.n == 0:
        raise ValueError("validation set is empty")
    if valid.d != model.d:
        raise ValueError(f"model has dimension {model.d}, validation data {valid.d}")
    r = valid.X @ model.w - valid.y
    return float(r @ r) / valid.n


# -- oracle reference ------------------------------------------------------------------


def oracle_search(
    S: Dataset,
    valid: Dataset,
    loss=None,
    epsilon: float = 1.0,
    rng: RngStream | None = None,
    *,
    radii: Sequence[float] = ORACLE_RADII,
    lambdas: Sequence[float] = ORACLE_LAMBDAS,
) -> TrainedModel:
    """Best output-perturbed ridge model over a ``(R, lambda)`` grid, judged on ``valid``.

    This peeks at validation data, so the result is a non-private reference. The
    data-independent pair is added to the grid and trained on a fresh copy of ``rng``,
    which makes the oracle never worse than :func:`data_independent` run with that
    same stream.
    """
    loss = loss or squared_spec(1.0)
    rng = rng or RngStream(default_seed())
    budget = PrivacyBudget(epsilon)
    lam_di, R_di = data_independent_params(S.d, S.n, epsilon)
    grid = [(R_di, lam_di, rng.split())]
    grid += [(float(R), float(lam), rng.split(k)) for k, (R, lam) in enumerate((R, lam) for R in radii for lam in lambdas)]
    best, best_loss, best_pair = None, math.inf, None
    for R, lam, stream in grid:
        model = rls_out(S, MechanismConfig(budget, lam=lam, R=R), stream)
        val = empirical_risk(loss, model.w, valid)
        if val < best_loss:
            best, best_loss, best_pair = model, val, (R, lam)
    snap = dict(best.config_snapshot, chosen_R=best_pair[0], chosen_lambda=best_pair[1],
                validation_loss=best_loss, non_private_reference=True)
    return replace(best, mechanism_id=MechanismId.ORACLE, config_snapshot=snap, radius_R=best_pair[0])


# -- results ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentRow:
    mechanism: str
    epsilon: float
    n: int
    trial: int
    mse: float
    mi_accuracy: float
    seed: int


def _same(a: float, b: float) -> bool:
    return (math.isnan(a) and math.isnan(b)) or a == b


@dataclass(eq=False)
class ExperimentResult:
    rows: list[ExperimentRow] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, ExperimentResult) or len(self.rows) != len(other.rows):
            return False
        for a, b in zip(self.rows, other.rows):
            if (a.mechanism, a.n, a.trial, a.seed) != (b.mechanism, b.n, b.trial, b.seed):
                return False
            if not all(_same(x, y) for x, y in ((a.epsilon, b.epsilon), (a.mse, b.mse), (a.mi_accuracy, b.mi_accuracy))):
                return False
        return True

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in self.rows:
            w.writerow([r.mechanism, repr(r.epsilon), r.n, r.trial, repr(r.mse), repr(r.mi_accuracy), r.seed])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8")

    @classmethod
    def from_csv_text(cls, text: str) -> ExperimentResult:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"results CSV must have columns {','.join(RESULT_COLUMNS)}")
        rows = []
        for k, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                m, eps, n, t, mse, mi, seed = rec
                rows.append(ExperimentRow(m, float(eps), int(n), int(t), float(mse), float(mi), int(seed)))
            except ValueError as exc:
                raise ValueError(f"row {k}: {exc}") from None
        return cls(rows)

    @classmethod
    def read_csv(cls, path: str | Path) -> ExperimentResult:
        return cls.from_csv_text(Path(path).read_text(encoding="utf-8"))

    def summary(self) -> dict[tuple[str, float, int], tuple[float, float]]:
        """Mean ``(mse, mi_accuracy)`` per ``(mechanism, epsilon, n)``, skipping failed rows."""
        groups: dict[tuple[str, float, int], list[ExperimentRow]] = {}
        for r in self.rows:
            groups.setdefault((r.mechanism, r.epsilon, r.n), []).append(r)
        out = {}
        for key, rs in groups.items():
            ok = [r for r in rs if not math.isnan(r.mse)]
            out[key] = (
                float(np.mean([r.mse for r in ok])) if ok else math.nan,
                float(np.mean([r.mi_accuracy for r in ok])) if ok else math.nan,
            )
        return out


# -- experiment configuration ----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; loadable from a JSON object with the same keys.

    ``lam`` and ``R`` parameterise the fixed-parameter mechanisms, ``functional_R`` the
    functional comparator and ``radii`` the tuner.
    """

    mechanisms: tuple[str, ...] = ("data-indep", "functional")
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    trials: int = 25
    seed: int | None = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    lam: float = 0.1
    R: float = 1.0
    functional_R: float = 1.0
    radii: tuple[float, ...] = RADII_1
    mechanism: str = "tuned"
    epsilon: float = 0.5
    sample_rates: tuple[float, ...] = DEFAULT_RATES
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in (*self.mechanisms, self.mechanism):
            MechanismId(m)

    @property
    def master_seed(self) -> int:
        return default_seed() if self.seed is None else int(self.seed)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "synthetic" in data:
            data["synthetic"] = SyntheticSpec.from_dict(data["synthetic"])
        for key in ("mechanisms", "epsilons", "radii", "sample_rates"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["synthetic"] = asdict(self.synthetic)
        return out


def build_model(
    mechanism: str, S: Dataset, valid: Dataset, epsilon: float, cfg: ExperimentConfig, rng: RngStream
) -> TrainedModel:
    """Train one model of the named kind with the experiment's parameter choices."""
    mid = MechanismId(mechanism)
    budget = PrivacyBudget(epsilon)
    loss = squared_spec(cfg.R)
    if mid is MechanismId.ORACLE:
        return oracle_search(S, valid, squared_spec(1.0), epsilon, rng)
    if mid is MechanismId.FUNCTIONAL:
        return train(mid, S, loss, MechanismConfig(budget, R=cfg.functional_R), rng)
    mcfg = MechanismConfig(budget, lam=cfg.lam, R=cfg.R, radii=cfg.radii)
    if mid is MechanismId.TUNED:
        return train(mid, S, squared_spec(max(cfg.radii)), mcfg, rng)
    return train(mid, S, loss, mcfg, rng)


def _run_rows(jobs, fn, workers: int) -> list:
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _evaluate(model: TrainedModel, valid: Dataset, target: MiTarget) -> tuple[float, float]:
    return eval_mse(model, valid), mi_accuracy(model, valid, target)


def _collect(outcomes) -> ExperimentResult:
    result = ExperimentResult()
    for idx, (row, err) in enumerate(outcomes):
        result.rows.append(row)
        if err is not None:
            result.failures.append((idx, err))
            log.warning("row %d (%s, eps=%g, trial %d) failed: %s", idx, row.mechanism, row.epsilon, row.trial, err)
    return result


def tradeoff_jobs(mechanisms: Sequence[str], epsilons: Sequence[float], trials: int) -> list[tuple[int, str, float, int]]:
    """Row coordinates in output order: ``(row index, mechanism, epsilon, trial)``."""
    if not mechanisms or not epsilons:
        raise ValueError("mechanism and epsilon grids must be non-empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    coords = [(m, float(e), t) for m in mechanisms for e in epsilons for t in range(trials)]
    return [(k, *c) for k, c in enumerate(coords)]


def _select(jobs: list, rows: Sequence[int] | None) -> list:
    if rows is None:
        return jobs
    bad = [k for k in rows if not 0 <= k < len(jobs)]
    if bad:
        raise ValueError(f"row indices {bad} outside 0..{len(jobs) - 1}")
    return [jobs[k] for k in rows]


def run_tradeoff(
    mechanisms: Sequence[str],
    epsilons: Sequence[float],
    spec: SyntheticSpec,
    trials: int,
    rng: RngStream,
    *,
    cfg: ExperimentConfig | None = None,
    data: tuple[Dataset, Dataset, MiTarget] | None = None,
    rows: Sequence[int] | None = None,
) -> ExperimentResult:
    """One row per ``(mechanism, epsilon, trial)``; row ``k`` draws from ``rng.split(1, k)``.

    The data split comes from ``rng.split(0)`` and is fixed before any mechanism runs.
    A failing mechanism yields a row with NaN metrics and an entry in ``failures``.
    ``rows`` restricts the run to those row indices of the full grid.
    """
    cfg = cfg or ExperimentConfig(synthetic=spec)
    train_set, valid, target = data or generate(spec, rng.split(0))

    def run(job):
        k, mech, eps, t = job
        try:
            model = build_model(mech, train_set, valid, eps, cfg, rng.split(1, k))
            mse, mi = _evaluate(model, valid, target)
            err = None
        except (MechanismError, SolverError, ValueError) as exc:
            mse, mi, err = math.nan, math.nan, str(exc)
        return ExperimentRow(mech, eps, train_set.n, t, mse, mi, rng.seed), err

    return _collect(_run_rows(_select(tradeoff_jobs(mechanisms, epsilons, trials), rows), run, cfg.workers))


def subsample_chunks(chunks: Sequence[Dataset], rate: float, rng: RngStream) -> list[Dataset]:
    """Keep ``round(rate * size)`` rows of each chunk, drawn without replacement."""
    out = []
    for k, c in enumerate(chunks):
        keep = int(round(rate * c.n))
        out.append(c.subset(np.sort(rng.split(k).gen.permutation(c.n)[:keep])))
    return out


def run_size_sweep(
    mechanism: str,
    epsilon: float,
    spec: SyntheticSpec,
    sample_rates: Sequence[float],
    trials: int,
    rng: RngStream,
    *,
    cfg: ExperimentConfig | None = None,
    data: tuple[Dataset, Dataset, MiTarget] | None = None,
    rows: Sequence[int] | None = None,
) -> ExperimentResult:
    """Permute the training pool, cut it into tuning chunks, subsample every training
    chunk at each rate, then train and evaluate on the fixed validation set.

    The tuner gets one chunk per grid point plus its own validation chunk, which is not
    subsampled. Other mechanisms train on the union of the subsampled chunks. The ``n``
    column is the number of subsampled training rows.
    """
    cfg = cfg or ExperimentConfig(synthetic=spec, mechanism=mechanism, epsilon=epsilon)
    mid = MechanismId(mechanism)
    rates = [float(r) for r in sample_rates]
    if not rates or any(not 0 < r <= 1 for r in rates):
        raise ValueError("sample rates must lie in (0, 1]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    train_set, valid, target = data or generate(spec, rng.split(0))
    mcfg = MechanismConfig(PrivacyBudget(epsilon), lam=cfg.lam, R=cfg.R, radii=cfg.radii)
    grid = tuning_grid(mcfg)
    m = len(grid)
    size = train_set.n // (m + 1)
    for r in rates:
        used = m * int(round(r * size))
        if used < train_set.d:
            raise ValueError(f"rate {r:g} keeps {used} training examples, fewer than d={train_set.d}")
        if int(round(r * size)) < 1:
            raise ValueError(f"rate {r:g} leaves a training chunk empty")
    loss = squared_spec(max(cfg.radii))

    def run(job):
        k, rate, t = job
        row_rng = rng.split(1, k)
        # chunking depends only on the trial, so every rate sees the same permutation
        chunks, tune_valid = split_chunks(train_set, m, rng.split(2, t))
        sub = subsample_chunks(chunks, rate, row_rng.split(0))
        n_used = sum(c.n for c in sub)
        try:
            if mid is MechanismId.TUNED:
                model = tune_on_chunks(sub, tune_valid, loss, mcfg, grid, BASE_TRAINERS[mcfg.base], row_rng.split(1)).model
            else:
                pool = sub[0]
                for c in sub[1:]:
                    pool = pool.concat(c)
                model = build_model(mechanism, pool, valid, epsilon, cfg, row_rng.split(1))
            mse, mi = _evaluate(model, valid, target)
            err = None
        except (MechanismError, SolverError, ValueError) as exc:
            mse, mi, err = math.nan, math.nan, str(exc)
        return ExperimentRow(mid.value, float(epsilon), n_used, t, mse, mi, rng.seed), err

    jobs = [(k, r, t) for k, (r, t) in enumerate((r, t) for r in rates for t in range(trials))]
    return _collect(_run_rows(_select(jobs, rows), run, cfg.workers))


def run_experiment(kind: str, cfg: ExperimentConfig, rows: Sequence[int] | None = None) -> ExperimentResult:
    rng = RngStream(cfg.master_seed)
    if kind == "tradeoff":
        return run_tradeoff(cfg.mechanisms, cfg.epsilons, cfg.synthetic, cfg.trials, rng, cfg=cfg, rows=rows)
    if kind == "size-sweep":
        return run_size_sweep(cfg.mechanism, cfg.epsilon, cfg.synthetic, cfg.sample_rates, cfg.trials, rng,
                              cfg=cfg, rows=rows)
    raise ValueError(f"unknown experiment kind {kind!r}")


def replay_row(kind: str, cfg: ExperimentConfig, k: int) -> ExperimentRow:
    """Recompute row ``k`` of an experiment from the master seed alone."""
    return run_experiment(kind, cfg, rows=[k]).rows[0]

