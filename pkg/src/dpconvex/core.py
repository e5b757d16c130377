"""Domain types shared across the package, plus dataset construction and scaling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


SCALE_ATOL = 1e-12


class DataError(ValueError):
    """Raised for malformed datasets or examples."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Example:
    x: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(np.atleast_1d(self.x)))
        object.__setattr__(self, "y", float(self.y))

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return self.y == other.y and np.array_equal(self.x, other.x)


@dataclass(frozen=True)
class ScalingRecord:
    """Factors applied at ingestion: ``x_scaled = x * x_factor``, ``y_scaled = y * y_factor``."""

    x_factor: float = 1.0
    y_factor: float = 1.0

    def unscale_prediction(self, y_scaled):
        return np.asarray(y_scaled) / self.y_factor

    def to_dict(self) -> dict:
        return {"x_factor": self.x_factor, "y_factor": self.y_factor}


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable design matrix ``X`` (n, d) and responses ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray
    scaling: ScalingRecord = field(default_factory=ScalingRecord)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DataError(f"shape mismatch: X{X.shape} vs y{y.shape}")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))

    @classmethod
    def from_examples(cls, examples: Sequence[Example], scaling: ScalingRecord | None = None) -> Dataset:
        if not examples:
            raise DataError("dataset must contain at least one example")
        d = examples[0].x.shape[0]
        if any(e.x.shape[0] != d for e in examples):
            raise DataError("all examples must share the same dimension")
        X = np.stack([e.x for e in examples])
        y = np.array([e.y for e in examples])
        return cls(X, y, scaling or ScalingRecord())

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def examples(self) -> list[Example]:
        return [Example(x, y) for x, y in zip(self.X, self.y)]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Example:
        return Example(self.X[i], self.y[i])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.scaling)

    def concat(self, other: Dataset) -> Dataset:
        return Dataset(np.vstack([self.X, other.X]), np.concatenate([self.y, other.y]), self.scaling)


class LossFamily(str, Enum):
    SQUARED = "squared"
    HINGE = "hinge"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class LossSpec:
    """A loss family with its certified constants on the ``radius``-ball.

    ``tikhonov`` folds ``(tikhonov/2)||w||^2`` into the instance loss itself, which is
    how a merely convex family becomes a strongly convex one; ``lambda_sc`` then equals
    ``tikhonov`` and ``rho``/``beta``/``bound_B`` already include its contribution.
    """

    family: LossFamily
    rho: float
    lambda_sc: float = 0.0
    beta: float | None = None
    bound_B: float = math.inf
    radius: float = 1.0
    tikhonov: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", LossFamily(self.family))
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.lambda_sc < 0:
            raise ValueError("lambda_sc must be non-negative")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be non-negative")

    @property
    def smooth(self) -> bool:
        return self.beta is not None

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "rho": self.rho,
            "lambda_sc": self.lambda_sc,
            "beta": self.beta,
            "bound_B": self.bound_B,
            "radius": self.radius,
            "tikhonov": self.tikhonov,
        }


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not (eps > 0 and math.isfinite(eps)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)


class MechanismId(str, Enum):
    OUT_STRONGLY_CONVEX = "out-sc"
    OUT_CONVEX = "out-convex"
    RLS_OUT = "rls-out"
    OBJ_PERTURB = "obj-perturb"
    FUNCTIONAL = "functional"
    TUNED = "tuned"
    DATA_INDEP = "data-indep"
    ORACLE = "oracle"
    NON_PRIVATE = "non-private"


@dataclass(frozen=True, eq=False)
class TrainedModel:
    w: np.ndarray
    mechanism_id: MechanismId
    config_snapshot: dict
    rng_seed: int
    radius_R: float
    pre_noise_w: np.ndarray | None = None
    scaling: ScalingRecord = field(default_factory=ScalingRecord)

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(self.w))
        object.__setattr__(self, "mechanism_id", MechanismId(self.mechanism_id))
        if self.pre_noise_w is not None:
            object.__setattr__(self, "pre_noise_w", _frozen(self.pre_noise_w))

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w

    def to_json_dict(self) -> dict[str, Any]:
        cfg = self.config_snapshot
        out = {
            "mechanism": self.mechanism_id.value,
            "epsilon": cfg.get("epsilon"),
            "lambda": cfg.get("lambda"),
            "R": self.radius_R,
            "seed": self.rng_seed,
            "weights": self.w.tolist(),
            "scaling": self.scaling.to_dict(),
            "pre_noise_weights": [] if self.pre_noise_w is None else self.pre_noise_w.tolist(),
            "config": cfg,
        }
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> TrainedModel:
        cfg = dict(data.get("config") or {})
        cfg.setdefault("epsilon", data.get("epsilon"))
        cfg.setdefault("lambda", data.get("lambda"))
        pre = data.get("pre_noise_weights")
        return cls(
            w=np.asarray(data["weights"], dtype=float),
            mechanism_id=MechanismId(data["mechanism"]),
            config_snapshot=cfg,
            rng_seed=int(data["seed"]),
            radius_R=float(data["R"]),
            pre_noise_w=np.asarray(pre, dtype=float) if pre else None,
            scaling=ScalingRecord(**data.get("scaling", {})),
        )


def make_neighbor(S: Dataset, i: int, z_prime: Example) -> Dataset:
    """Return ``S`` with example ``i`` replaced by ``z_prime``; ``S`` is left untouched."""
    if not 0 <= i < S.n:
        raise IndexError(f"index {i} out of range for dataset of size {S.n}")
    if z_prime.x.shape[0] != S.d:
        raise DataError(f"replacement has dimension {z_prime.x.shape[0]}, expected {S.d}")
    X = S.X.copy()
    y = S.y.copy()
    X[i] = z_prime.x
    y[i] = z_prime.y
    return Dataset(X, y, S.scaling)


def scale_dataset(raw: Dataset) -> Dataset:
    """Globally rescale so that ``max ||x|| <= 1`` and ``max |y| <= 1``.

    A side is only shrunk when its maximum exceeds ``1 + SCALE_ATOL``, which makes the
    operation idempotent.
    """
    if raw.n == 0:
        raise DataError("cannot scale an empty dataset")
    if not (np.all(np.isfinite(raw.X)) and np.all(np.isfinite(raw.y))):
        raise DataError("dataset contains non-finite values")
    max_x = float(np.max(np.linalg.norm(raw.X, axis=1)))
    max_y = float(np.max(np.abs(raw.y)))
    fx = 1.0 / max_x if max_x > 1.0 + SCALE_ATOL else 1.0
    fy = 1.0 / max_y if max_y > 1.0 + SCALE_ATOL else 1.0
    if fx == 1.0 and fy == 1.0:
        return raw
    X = raw.X * fx
    y = raw.y * fy
    prev = raw.scaling
    return Dataset(X, y, ScalingRecord(prev.x_factor * fx, prev.y_factor * fy))


def check_scaled(S: Dataset, atol: float = SCALE_ATOL) -> None:
    if S.n and np.max(np.linalg.norm(S.X, axis=1)) > 1 + atol:
        raise DataError("features are not scaled into the unit ball")
    if S.n and np.max(np.abs(S.y)) > 1 + atol:
        raise DataError("responses are not scaled into [-1, 1]")


def read_csv(path: str | Path) -> Dataset:
    """Read a header + numeric rows CSV; the last column is the response."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if len(header) < 2:
            raise DataError(f"{path}: need at least one feature column and a response column")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataError(f"{path}: non-numeric cell in row {lineno}") from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}: non-finite value in row {lineno}")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return Dataset(arr[:, :-1], arr[:, -1])


def write_csv(S: Dataset, path: str | Path, feature_names: Iterable[str] | None = None) -> None:
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(S.d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["y"])
        for x, y in zip(S.X, S.y):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])
