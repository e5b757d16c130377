import math
from dataclasses import replace

import numpy as np
import pytest

from dpconvex.audit import (
    AuditReport,
    LinearTruth,
    _mechanism_problem,
    adversarial_replacements,
    audit_dp_ratio,
    audit_generalization_trend,
    audit_noise_moments,
    audit_noise_tail,
    audit_ro_stability,
    audit_sensitivity,
    audit_sensitivity_detailed,
    audit_smooth_training_error,
    random_instance,
    run_suite,
    tikhonov_logistic,
)
from dpconvex.core import LossFamily, PrivacyBudget
from dpconvex.losses import hinge_spec, logistic_spec, make_spec, squared_spec
from dpconvex.mechanisms import MechanismConfig, MechanismError, train
from dpconvex.noise import RngStream


def cfg(eps, **kw):
    return MechanismConfig(PrivacyBudget(eps), **kw)


def test_report_pass_flag():
    assert AuditReport("a", 1.0, 1.0, 1).passed
    assert not AuditReport("a", 1.0 + 1e-12, 1.0, 1).passed
    assert AuditReport("a", 0.5, 1.0, 3).to_dict()["pass"] is True


@pytest.mark.parametrize("family,lam,R", [("squared", 0.5, 1.0), ("hinge", 0.1, 3.0), ("logistic", 0.1, 1.0)])
def test_sensitivity_small_run_passes(family, lam, R):
    sens, lemma = audit_sensitivity_detailed(make_spec(family, R), lam, R, 30, 3, 1, RngStream(1))
    assert sens.passed and lemma.passed
    assert sens.details["neighbors"] == 30 * 23


def test_sensitivity_scales_inversely_with_n():
    small = audit_sensitivity(squared_spec(1.0), 2.0, 1.0, 20, 3, 3, RngStream(2))
    large = audit_sensitivity(squared_spec(1.0), 2.0, 1.0, 200, 3, 3, RngStream(2))
    assert 5.0 <= small.observed / large.observed <= 20.0


def test_sensitivity_audit_has_teeth():
    rep = audit_sensitivity(hinge_spec(3.0), 0.1, 3.0, 30, 3, 1, RngStream(1), bound_scale=0.05)
    assert not rep.passed


def test_adversarial_replacements_are_valid_examples():
    w = np.array([0.3, -0.1, 0.2])
    for fam in LossFamily:
        S = random_instance(fam, 10, 3, RngStream(0))
        for z in adversarial_replacements(fam, S, 4, w):
            assert np.linalg.norm(z.x) == pytest.approx(1.0)
            assert abs(z.y) <= 1.0
            if fam is not LossFamily.SQUARED:
                assert abs(z.y) == 1.0


def test_mechanism_problem_matches_trained_alpha():
    S = random_instance(LossFamily.SQUARED, 60, 3, RngStream(3))
    lt = tikhonov_logistic()
    SL = random_instance(LossFamily.LOGISTIC, 60, 3, RngStream(3))
    for mech, loss, c, data in [
        ("out-sc", lt, cfg(0.5), SL),
        ("out-convex", squared_spec(1.0), cfg(0.5, lam=0.3, R=1.0), S),
        ("rls-out", squared_spec(1.0), cfg(0.5, lam=0.3, R=1.0), S),
        ("data-indep", squared_spec(1.0), cfg(0.5), S),
    ]:
        m = train(mech, data, loss, c, RngStream(0))
        _, delta = _mechanism_problem(mech, loss, c, data.n, data.d)
        assert m.config_snapshot["sensitivity"] == pytest.approx(delta)


@pytest.mark.parametrize("eps", [0.1, 1.0])
def test_dp_ratio_passes_and_fault_fails(eps):
    c = cfg(eps, lam=0.5, R=1.0)
    ok = audit_dp_ratio("out-convex", squared_spec(1.0), c, 30, 3, RngStream(4), trials=1)
    bad = audit_dp_ratio("out-convex", squared_spec(1.0), replace(c, noise_multiplier=0.5), 30, 3, RngStream(4), trials=1)
    assert ok.passed and not bad.passed
    assert ok.details["empirical_log_ratio"] <= ok.details["calibrated_log_ratio"]


def test_dp_ratio_rejects_non_output_perturbation():
    with pytest.raises(MechanismError):
        audit_dp_ratio("functional", squared_spec(1.0), cfg(1.0), 20, 2, RngStream(0), trials=1)


def test_noise_audits():
    assert audit_noise_moments(3, 2.0, 20_000, RngStream(0)).passed
    assert audit_noise_tail(1, 1.0, 0.5, 20_000, RngStream(0)).passed
    assert audit_noise_tail(14, 1.0, 0.05, 20_000, RngStream(0)).passed
    assert audit_noise_tail(3, 1.0, 1.0, 1000, RngStream(0)).passed
    assert not audit_noise_tail(14, 1.0, 0.05, 20_000, RngStream(0), bound_scale=0.25).passed


def test_ro_stability_identity_neighbor_is_zero():
    rep = audit_ro_stability("out-convex", squared_spec(1.0), cfg(0.5, lam=0.5, R=1.0), 30, 3, 10_000, RngStream(0),
                             identity_neighbor=True)
    assert rep.details["max_abs_difference"] == 0.0 and rep.passed


def test_ro_stability_small_epsilon_linearisation():
    rep = audit_ro_stability("out-convex", squared_spec(1.0), cfg(0.01, lam=0.5, R=1.0), 30, 3, 10_000, RngStream(0))
    assert rep.passed
    assert rep.bound == pytest.approx(4 * 0.01, rel=0.01)


def test_smooth_training_error_scaling_and_zero_noise():
    lt = tikhonov_logistic()
    a = audit_smooth_training_error(lt, cfg(1.0), 100, 3, 0.1, 100, RngStream(0))
    b = audit_smooth_training_error(lt, cfg(2.0), 100, 3, 0.1, 100, RngStream(0))
    assert a.passed and b.passed
    assert b.details["excess_limit"] == pytest.approx(a.details["excess_limit"] / 4)
    z = audit_smooth_training_error(lt, cfg(1.0, noise_multiplier=0.0), 100, 3, 0.1, 100, RngStream(0))
    assert z.details["max_excess"] == 0.0
    with pytest.raises(MechanismError):
        audit_smooth_training_error(logistic_spec(1.0), cfg(1.0), 100, 3, 0.1, 10, RngStream(0))


def test_linear_truth_excess_risk():
    truth = LinearTruth.default(4)
    S = truth.sample(200_000, RngStream(0))
    w = truth.w_star + np.array([0.3, 0.0, -0.2, 0.1])
    mc = np.mean((S.X @ w - S.y) ** 2) - np.mean((S.X @ truth.w_star - S.y) ** 2)
    assert mc == pytest.approx(truth.excess_risk(w), rel=0.02)
    with pytest.raises(ValueError):
        LinearTruth(2, np.array([0.9, 0.0]))


def test_generalization_trend_small():
    rep = audit_generalization_trend("out-convex", 0.5, (250, 1000, 4000), 10, RngStream(0))
    assert rep.passed
    hi = audit_generalization_trend("out-convex", 5.0, (250, 1000, 4000), 10, RngStream(0))
    assert all(b < a for a, b in zip(rep.details["mean_excess_risk"], hi.details["mean_excess_risk"]))
    quiet = audit_generalization_trend("out-convex", 0.5, (250, 1000, 4000), 5, RngStream(0), noise_multiplier=0.0)
    assert quiet.passed
    with pytest.raises(ValueError):
        audit_generalization_trend("out-convex", 0.5, (1000, 250), 2, RngStream(0))


def test_audits_reproducible():
    a = audit_dp_ratio("rls-out", squared_spec(1.0), cfg(0.5, lam=0.5), 20, 3, RngStream(8), trials=1)
    b = audit_dp_ratio("rls-out", squared_spec(1.0), cfg(0.5, lam=0.5), 20, 3, RngStream(8), trials=1)
    assert a.to_dict() == b.to_dict()


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope", RngStream(0))
