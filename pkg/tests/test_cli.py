import json

import numpy as np
import pytest

from dpconvex import cli
from dpconvex.audit import AuditReport
from dpconvex.core import write_csv
from dpconvex.harness import RESULT_COLUMNS, SyntheticSpec, generate
from dpconvex.noise import RngStream

MODEL_KEYS = {"mechanism", "epsilon", "lambda", "R", "seed", "weights", "pre_noise_weights", "scaling"}


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    S, _, _ = generate(SyntheticSpec(d_continuous=4, n_train=800, n_valid=10), RngStream(0))
    path = tmp_path_factory.mktemp("data") / "train.csv"
    # unscaled on disk so the CLI has to rescale
    write_csv(type(S)(S.X * 3.0, S.y * 2.0), path)
    return path


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


@pytest.mark.parametrize("mech", ["out-sc", "out-convex", "rls-out", "obj-perturb", "functional", "tuned", "data-indep"])
def test_train_every_mechanism(mech, data_csv, tmp_path, capsys):
    out = tmp_path / "m.json"
    code, _ = run(["train", "--mechanism", mech, "--epsilon", 1.0, "--lambda", 0.1, "--radius", 1.0,
                   "--data", data_csv, "--seed", 3, "--out", out], capsys)
    assert code == 0
    model = json.loads(out.read_text())
    assert MODEL_KEYS <= set(model)
    assert model["mechanism"] == mech and model["seed"] == 3 and len(model["weights"]) == 7


def test_train_is_reproducible_and_honours_env_seed(data_csv, tmp_path, capsys, monkeypatch):
    argv = ["train", "--mechanism", "rls-out", "--epsilon", 0.5, "--data", data_csv]
    monkeypatch.setenv("DPCONVEX_SEED", "77")
    _, a = run(argv, capsys)
    _, b = run(argv + ["--seed", 77], capsys)
    _, c = run(argv + ["--seed", 78], capsys)
    assert json.loads(a.out) == json.loads(b.out)
    assert json.loads(a.out)["seed"] == 77
    assert json.loads(c.out)["weights"] != json.loads(a.out)["weights"]


def test_tune_and_attack(data_csv, tmp_path, capsys):
    model = tmp_path / "t.json"
    code, out = run(["tune", "--epsilon", 1.0, "--radii", "2", "--data", data_csv, "--seed", 1, "--out", model], capsys)
    assert code == 0
    chosen = json.loads(out.out)
    assert chosen["chosen_R"] in (0.5, 1.0, 2.0)
    assert len(chosen["selection_probabilities"]) == 24
    res_path = tmp_path / "a.json"
    code, _ = run(["attack", "--model", model, "--data", data_csv, "--out", res_path], capsys)
    assert code == 0
    res = json.loads(res_path.read_text())
    assert set(res) == {"epsilon", "mechanism", "mi_accuracy", "n_validation", "seed"}
    assert res["mechanism"] == "tuned" and res["n_validation"] == 800 and 0 <= res["mi_accuracy"] <= 1


def test_bad_csv_reports_row(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,y\n0.1,0.2\n0.3,oops\n")
    code, out = run(["train", "--mechanism", "rls-out", "--epsilon", 1, "--data", bad], capsys)
    assert code == 2 and "row 3" in out.err
    code, out = run(["train", "--mechanism", "rls-out", "--epsilon", 1, "--data", tmp_path / "missing.csv"], capsys)
    assert code == 2


def test_audit_exit_status(tmp_path, capsys, monkeypatch):
    code, out = run(["audit", "--suite", "noise", "--seed", 1, "--out", tmp_path / "rep"], capsys)
    assert code == 0
    lines = [json.loads(l) for l in out.out.splitlines()]
    assert len(lines) == 4 and all(l["pass"] for l in lines)
    assert len(list((tmp_path / "rep").iterdir())) == 4
    monkeypatch.setattr(cli, "run_suite", lambda name, rng: [AuditReport("x", 2.0, 1.0, 1)])
    assert run(["audit", "--suite", "noise"], capsys)[0] == 1
    monkeypatch.undo()
    assert run(["audit", "--suite", "bogus"], capsys)[0] == 2


def test_experiment_writes_csv(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mechanisms": ["data-indep", "functional"], "epsilons": [0.5], "trials": 2,
                               "synthetic": {"d_continuous": 3, "n_train": 400, "n_valid": 100}}))
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert run(["experiment", "tradeoff", "--config", cfg, "--out", out1, "--seed", 5], capsys)[0] == 0
    assert run(["experiment", "tradeoff", "--config", cfg, "--out", out2, "--seed", 5], capsys)[0] == 0
    text = out1.read_text()
    assert text == out2.read_text()
    assert text.splitlines()[0] == ",".join(RESULT_COLUMNS)
    assert len(text.splitlines()) == 5
    cfg.write_text(json.dumps({"sample_rates": [0.5, 1.0], "trials": 1,
                               "synthetic": {"d_continuous": 3, "n_train": 2500, "n_valid": 100}}))
    assert run(["experiment", "size-sweep", "--config", cfg, "--out", out1], capsys)[0] == 0
    assert len(out1.read_text().splitlines()) == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["experiment", "tradeoff", "--config", cfg, "--out", out1], capsys)[0] == 2
