"""Model inversion against linear models.

The attacker sees every feature except a categorical target (a group of one-hot
slots), the observed response and the model weights, and returns the candidate
value maximising ``prior(v) * N(y; <w, x(v)>, sigma^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DataError, Dataset, TrainedModel

SIGMA_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class MiTarget:
    target_index: tuple[int, ...]
    candidates: np.ndarray  # (k, len(target_index)): admissible values of the target slots
    prior: np.ndarray
    residual_sigma: float

    def __post_init__(self):
        cands = np.atleast_2d(np.asarray(self.candidates, dtype=float))
        prior = np.asarray(self.prior, dtype=float)
        idx = tuple(int(i) for i in np.atleast_1d(self.target_index))
        if cands.shape[0] == 0:
            raise DataError("candidate list is empty")
        if cands.shape[1] != len(idx):
            raise DataError("each candidate must assign every target slot")
        if prior.shape != (cands.shape[0],) or np.any(prior < 0) or not math.isclose(prior.sum(), 1.0, abs_tol=1e-9):
            raise DataError("prior must be a probability vector over the candidates")
        object.__setattr__(self, "target_index", idx)
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "residual_sigma", max(float(self.residual_sigma), SIGMA_FLOOR))

    @property
    def k(self) -> int:
        return self.candidates.shape[0]

    def with_prior(self, prior) -> MiTarget:
        return MiTarget(self.target_index, self.candidates, prior, self.residual_sigma)

    def with_sigma(self, sigma: float) -> MiTarget:
        return MiTarget(self.target_index, self.candidates, self.prior, sigma)

    def true_labels(self, X: np.ndarray) -> np.ndarray:
        """Index of the candidate each row actually carries (nearest code)."""
        slots = np.asarray(X)[:, list(self.target_index)]
        dist = ((slots[:, None, :] - self.candidates[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(dist, axis=1)


def _preference_order(prior: np.ndarray) -> np.ndarray:
    # larger prior first, then lower index
    return np.lexsort((np.arange(prior.size), -prior))


def candidate_scores(w: np.ndarray, X: np.ndarray, y: np.ndarray, target: MiTarget) -> np.ndarray:
    """Log-posterior scores, shape (rows, candidates), up to a per-row constant."""
    slots = list(target.target_index)
    w = np.asarray(w, dtype=float)
    known = np.array(X, dtype=float)
    known[:, slots] = 0.0
    preds = (known @ w)[:, None] + (target.candidates @ w[slots])[None, :]
    resid = np.asarray(y, dtype=float)[:, None] - preds
    with np.errstate(divide="ignore"):
        log_prior = np.log(target.prior)
    return log_prior[None, :] - resid**2 / (2.0 * target.residual_sigma**2)


def _argmax_with_ties(scores: np.ndarray, prior: np.ndarray) -> np.ndarray:
    order = _preference_order(prior)
    return order[np.argmax(scores[:, order], axis=1)]


def _full_vector(known_features, d: int, target: MiTarget) -> np.ndarray:
    known = np.asarray(known_features, dtype=float).reshape(-1)
    slots = list(target.target_index)
    if known.size == d:
        return known
    if known.size != d - len(slots):
        raise DataError(f"known features have length {known.size}; expected {d - len(slots)} or {d}")
    x = np.zeros(d)
    mask = np.ones(d, dtype=bool)
    mask[slots] = False
    x[mask] = known
    return x


def invert(model: TrainedModel, known_features, y_observed: float, target: MiTarget) -> int:
    """Return the index of the most likely candidate for the hidden slots.

    ``known_features`` is either the full feature vector (target slots are ignored) or
    the vector with the target slots removed.
    """
    if not math.isfinite(y_observed):
        raise DataError("observed response must be finite")
    if max(target.target_index) >= model.d:
        raise DataError("target slots fall outside the model dimension")
    x = _full_vector(known_features, model.d, target)
    scores = candidate_scores(model.w, x[None, :], np.array([y_observed]), target)
    return int(_argmax_with_ties(scores, target.prior)[0])


def invert_batch(w, X, y, target: MiTarget) -> np.ndarray:
    return _argmax_with_ties(candidate_scores(w, X, y, target), target.prior)


def mi_accuracy(model: TrainedModel, validation: Dataset, target: MiTarget) -> float:
    """Fraction of validation rows whose hidden value the attack recovers."""
    if validation.n == 0:
        raise DataError("validation set is empty")
    if validation.d != model.d:
        raise DataError("model and validation dimensions differ")
    guess = invert_batch(model.w, validation.X, validation.y, target)
    return float(np.mean(guess == target.true_labels(validation.X)))


def empirical_prior(data: Dataset, target: MiTarget) -> np.ndarray:
    counts = np.bincount(target.true_labels(data.X), minlength=target.k).astype(float)
    return counts / counts.sum()


def residual_sigma(w, data: Dataset) -> float:
    """Standard deviation of ``y - <w, x>``, floored to keep the likelihood proper."""
    return max(float(np.std(data.y - data.X @ np.asarray(w))), SIGMA_FLOOR)
