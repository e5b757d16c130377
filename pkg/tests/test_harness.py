import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpconvex.core import Dataset, MechanismId, PrivacyBudget, TrainedModel
from dpconvex.harness import (
    RESULT_COLUMNS,
    ExperimentConfig,
    ExperimentResult,
    ExperimentRow,
    SyntheticSpec,
    eval_mse,
    generate,
    oracle_search,
    run_experiment,
    run_size_sweep,
    run_tradeoff,
)
from dpconvex.attacks import mi_accuracy
from dpconvex.losses import squared_spec
from dpconvex.mechanisms import MechanismConfig, data_independent
from dpconvex.noise import RngStream
from dpconvex.solver import solve_erm

SMALL = SyntheticSpec(d_continuous=4, n_train=600, n_valid=300)


def model_of(w):
    return TrainedModel(np.asarray(w, dtype=float), MechanismId.NON_PRIVATE, {}, 0, 1.0)


def test_generated_data_is_in_unit_ball():
    S, V, target = generate(SMALL, RngStream(0))
    for D in (S, V):
        assert np.all(np.linalg.norm(D.X, axis=1) <= 1 + 1e-12)
        assert np.all(np.abs(D.y) <= 1)
    assert target.target_index == (4, 5, 6)
    assert target.prior.sum() == pytest.approx(1.0)
    # each row carries exactly one level
    slots = S.X[:, list(target.target_index)]
    assert np.all(np.count_nonzero(slots, axis=1) == 1)


def test_generate_is_deterministic():
    a = generate(SMALL, RngStream(5))
    b = generate(SMALL, RngStream(5))
    assert np.array_equal(a[0].X, b[0].X) and np.array_equal(a[1].y, b[1].y)
    assert a[2].residual_sigma == b[2].residual_sigma


def test_noise_free_data_is_fully_invertible():
    spec = SyntheticSpec(d_continuous=4, noise_sigma=0.0, n_train=400, n_valid=200)
    S, V, target = generate(spec, RngStream(1))
    w = solve_erm(S, squared_spec(1.0), 0.0, 1.0)
    assert mi_accuracy(model_of(w), V, target) == 1.0


def test_uninformative_truth_gives_prior_attack():
    spec = SyntheticSpec(d_continuous=2, w_star=(0.0,) * 5, n_train=200, n_valid=400)
    S, V, target = generate(spec, RngStream(2))
    zero = model_of(np.zeros(5))
    assert eval_mse(zero, V) == pytest.approx(np.mean(V.y**2))
    assert mi_accuracy(zero, V, target) == pytest.approx(target.prior.max())


def test_eval_mse_matches_loop():
    V = Dataset(np.array([[0.1, 0.2], [0.3, -0.1], [0.0, 0.5], [-0.2, 0.2], [0.4, 0.4]]),
                np.array([0.1, -0.2, 0.3, 0.0, 0.5]))
    w = np.array([0.5, -1.0])
    expect = sum((float(x @ w) - y) ** 2 for x, y in zip(V.X, V.y)) / 5
    assert eval_mse(model_of(w), V) == pytest.approx(expect)
    with pytest.raises(ValueError):
        eval_mse(model_of(np.zeros(3)), V)


def test_oracle_never_worse_than_data_independent():
    S, V, _ = generate(SMALL, RngStream(3))
    for eps in (0.1, 1.0):
        rng = RngStream(9)
        orc = oracle_search(S, V, epsilon=eps, rng=rng)
        di = data_independent(S, MechanismConfig(PrivacyBudget(eps)), rng.split())
        assert orc.mechanism_id is MechanismId.ORACLE
        assert orc.config_snapshot["non_private_reference"] is True
        assert eval_mse(orc, V) <= eval_mse(di, V) + 1e-12


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
rows = st.lists(st.builds(
    ExperimentRow,
    st.sampled_from([m.value for m in MechanismId]),
    st.floats(min_value=1e-3, max_value=10),
    st.integers(1, 10**6),
    st.integers(0, 100),
    st.one_of(finite, st.just(math.nan)),
    st.one_of(st.floats(0, 1), st.just(math.nan)),
    st.integers(0, 2**32),
), max_size=8)


@given(rows)
@settings(max_examples=60)
def test_results_csv_round_trip(rs):
    res = ExperimentResult(rs)
    text = res.to_csv_text()
    assert text.splitlines()[0] == ",".join(RESULT_COLUMNS)
    back = ExperimentResult.from_csv_text(text)
    assert back == res
    assert back.to_csv_text() == text


def test_results_csv_rejects_bad_header_and_rows():
    with pytest.raises(ValueError):
        ExperimentResult.from_csv_text("a,b\n")
    with pytest.raises(ValueError, match="row 2"):
        ExperimentResult.from_csv_text(",".join(RESULT_COLUMNS) + "\nx,notafloat,1,0,0,0,0\n")


def test_tradeoff_rows_and_reproducibility():
    res = run_tradeoff(["data-indep", "functional"], [0.5, 1.0], SMALL, 3, RngStream(4))
    again = run_tradeoff(["data-indep", "functional"], [0.5, 1.0], SMALL, 3, RngStream(4))
    assert len(res.rows) == 12 and not res.failures
    assert res.to_csv_text() == again.to_csv_text()
    assert [r.trial for r in res.rows[:3]] == [0, 1, 2]
    assert all(r.n == SMALL.n_train and r.seed == 4 for r in res.rows)
    summ = res.summary()
    assert set(summ) == {(m, e, SMALL.n_train) for m in ("data-indep", "functional") for e in (0.5, 1.0)}


def test_tradeoff_row_is_independent_of_grid():
    full = run_tradeoff(["data-indep"], [0.5, 1.0], SMALL, 2, RngStream(4))
    part = run_tradeoff(["data-indep"], [0.5], SMALL, 2, RngStream(4))
    assert full.rows[:2] == part.rows


def test_tradeoff_records_failures_per_row():
    tiny = SyntheticSpec(d_continuous=11, n_train=20, n_valid=50)
    res = run_tradeoff(["data-indep"], [0.01, 100.0], tiny, 1, RngStream(0))
    assert len(res.rows) == 2
    assert [i for i, _ in res.failures] == [0]
    assert math.isnan(res.rows[0].mse) and not math.isnan(res.rows[1].mse)


def test_size_sweep_shapes_and_full_rate_reproducible():
    spec = SyntheticSpec(d_continuous=4, n_train=2500, n_valid=300)
    res = run_size_sweep("tuned", 0.5, spec, (0.5, 1.0, 1.0), 2, RngStream(6))
    assert len(res.rows) == 6 and not res.failures
    assert res.rows[0].n < res.rows[2].n
    # a repeated rate sees the same chunking, so the sample sizes agree
    assert [r.n for r in res.rows[2:4]] == [r.n for r in res.rows[4:6]]
    again = run_size_sweep("tuned", 0.5, spec, (0.5, 1.0, 1.0), 2, RngStream(6))
    assert res.to_csv_text() == again.to_csv_text()


def test_size_sweep_rejects_rates_below_dimension():
    spec = SyntheticSpec(d_continuous=11, n_train=300, n_valid=100)
    with pytest.raises(ValueError, match="fewer than d"):
        run_size_sweep("tuned", 0.5, spec, (0.01,), 1, RngStream(0))
    with pytest.raises(ValueError):
        run_size_sweep("tuned", 0.5, spec, (0.0,), 1, RngStream(0))


def test_config_from_dict():
    cfg = ExperimentConfig.from_dict({"mechanisms": ["functional"], "epsilons": [1], "trials": 2,
                                      "synthetic": {"d_continuous": 3, "n_train": 300, "n_valid": 100}})
    assert cfg.mechanisms == ("functional",) and cfg.synthetic.d == 6
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict({"trails": 3})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"mechanisms": ["bogus"]})
    res = run_experiment("tradeoff", cfg)
    assert len(res.rows) == 2
    with pytest.raises(ValueError):
        run_experiment("nope", cfg)


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(prior=(0.5, 0.5))
    with pytest.raises(ValueError):
        SyntheticSpec(d_continuous=1, snp_levels=1, prior=(1.0,), w_star=(1.0, 1.0))
