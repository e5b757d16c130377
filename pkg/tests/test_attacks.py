import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from dpconvex.attacks import MiTarget, candidate_scores, empirical_prior, invert, invert_batch, mi_accuracy
from dpconvex.core import DataError, Dataset, MechanismId, TrainedModel
from dpconvex.noise import RngStream, sample_spherical_exp

CODES = np.eye(3) / math.sqrt(2)


def model(w):
    return TrainedModel(np.asarray(w, dtype=float), MechanismId.NON_PRIVATE, {}, 0, 1.0)


def separable(n=300, seed=0):
    gen = np.random.default_rng(seed)
    level = gen.integers(0, 3, n)
    X = np.hstack([gen.uniform(-0.3, 0.3, (n, 2)), CODES[level]])
    w = np.array([0.4, -0.2, -0.6, 0.0, 0.6])
    return Dataset(X, X @ w), w, level


def test_single_candidate():
    t = MiTarget((1,), [[0.5]], [1.0], 0.1)
    assert invert(model([0.3, 0.9]), [0.2, 0.0], 0.7, t) == 0


def test_small_sigma_picks_nearest_prediction():
    w = np.array([0.5, 1.0, 2.0, -1.0])
    t = MiTarget((1, 2, 3), CODES, [1 / 3] * 3, 1e-9)
    for y in (-0.8, 0.1, 0.9, 1.5):
        preds = 0.2 * 0.5 + CODES @ w[1:]
        assert invert(model(w), [0.2, 0, 0, 0], y, t) == int(np.argmin(np.abs(y - preds)))


def test_matches_brute_force_scores():
    w = np.array([0.3, 0.8, -0.4, 0.1])
    prior = np.array([0.5, 0.3, 0.2])
    t = MiTarget((1, 2, 3), CODES, prior, 0.25)
    gen = np.random.default_rng(3)
    for _ in range(50):
        x0, y = gen.uniform(-1, 1), gen.uniform(-1, 1)
        dens = [prior[k] * norm.pdf(y, loc=x0 * w[0] + CODES[k] @ w[1:], scale=0.25) for k in range(3)]
        assert invert(model(w), [x0], y, t) == int(np.argmax(dens))


def test_ties_prefer_larger_prior_then_lower_index():
    w = np.zeros(4)
    assert invert(model(w), [0.1], 0.0, MiTarget((1, 2, 3), CODES, [0.2, 0.5, 0.3], 0.1)) == 1
    assert invert(model(w), [0.1], 0.0, MiTarget((1, 2, 3), CODES, [0.4, 0.2, 0.4], 0.1)) == 0


def test_errors():
    t = MiTarget((1, 2, 3), CODES, [1 / 3] * 3, 0.1)
    with pytest.raises(DataError):
        invert(model(np.zeros(4)), [0.1], math.nan, t)
    with pytest.raises(DataError):
        invert(model(np.zeros(4)), [0.1, 0.2], 0.0, t)
    with pytest.raises(DataError):
        invert(model(np.zeros(3)), [0.1], 0.0, t)
    with pytest.raises(DataError):
        mi_accuracy(model(np.zeros(4)), Dataset(np.zeros((0, 4)), np.zeros(0)), t)
    with pytest.raises(DataError):
        MiTarget((1,), np.zeros((0, 1)), [], 0.1)
    with pytest.raises(DataError):
        MiTarget((1,), [[0.0], [1.0]], [0.3, 0.3], 0.1)


def test_sigma_floor():
    assert MiTarget((0,), [[1.0]], [1.0], 0.0).residual_sigma == 1e-6


def test_uninformative_model_is_chance():
    S, _, _ = separable(3000)
    t = MiTarget((2, 3, 4), CODES, [1 / 3] * 3, 0.1)
    assert mi_accuracy(model(np.array([0.4, -0.2, 0.0, 0.0, 0.0])), S, t) == pytest.approx(1 / 3, abs=0.03)


def test_separable_instance_is_perfect():
    S, w, _ = separable()
    t = MiTarget((2, 3, 4), CODES, [1 / 3] * 3, 1e-3)
    assert mi_accuracy(model(w), S, t) == 1.0


def test_relabeling_invariance():
    S, w, _ = separable(seed=2)
    w_noisy = w + np.array([0.0, 0.0, 0.05, -0.1, 0.02])
    prior = np.array([0.2, 0.5, 0.3])
    t = MiTarget((2, 3, 4), CODES, prior, 0.2)
    perm = [2, 0, 1]
    tp = MiTarget((2, 3, 4), CODES[perm], prior[perm], 0.2)
    assert mi_accuracy(model(w_noisy), S, t) == mi_accuracy(model(w_noisy), S, tp)


@given(st.floats(0.01, 100.0))
def test_scale_consistency(c):
    S, w, _ = separable(50)
    t = MiTarget((2, 3, 4), CODES, [0.2, 0.5, 0.3], 0.3)
    scores = candidate_scores(w + 0.1, S.X, S.y, t)
    assert np.array_equal(np.argmax(scores, axis=1), np.argmax(c * scores, axis=1))


def test_empirical_prior():
    S, _, level = separable()
    t = MiTarget((2, 3, 4), CODES, [1 / 3] * 3, 0.1)
    np.testing.assert_allclose(empirical_prior(S, t), np.bincount(level, minlength=3) / len(level))
    assert np.array_equal(t.true_labels(S.X), level)


def test_batch_matches_single():
    S, w, _ = separable(40)
    t = MiTarget((2, 3, 4), CODES, [0.2, 0.5, 0.3], 0.3)
    batch = invert_batch(w + 0.05, S.X, S.y, t)
    single = [invert(model(w + 0.05), S.X[i], S.y[i], t) for i in range(S.n)]
    assert list(batch) == single


def test_accuracy_decreases_with_injected_noise():
    S, w, _ = separable(200, seed=5)
    t = MiTarget((2, 3, 4), CODES, [1 / 3] * 3, 0.05)
    means = []
    for k, scale in enumerate((0.0, 0.1, 0.3, 1.0, 3.0)):
        accs = [
            mi_accuracy(model(w + scale * sample_spherical_exp(5, 1.0, RngStream(9, (k, j)))), S, t)
            for j in range(200)
        ]
        means.append(np.mean(accs))
    assert all(b <= a for a, b in zip(means, means[1:])), means
