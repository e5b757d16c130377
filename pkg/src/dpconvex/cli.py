"""Command-line entry point: ``dpconvex {train,tune,attack,audit,experiment}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import attacks
from .audit import run_suite
from .core import DataError, Dataset, MechanismId, PrivacyBudget, TrainedModel, read_csv, scale_dataset
from .harness import ExperimentConfig, run_experiment
from .losses import make_spec, squared_spec, with_tikhonov
from .mechanisms import BASE_TRAINERS, RADII_1, RADII_2, MechanismConfig, MechanismError, train, tune_private_detailed
from .noise import RngStream, default_seed
from .solver import SolverError, solve_erm

log = logging.getLogger("dpconvex")

TRAINABLE = [m.value for m in MechanismId if m not in (MechanismId.ORACLE, MechanismId.NON_PRIVATE)]


def _floats(text: str) -> tuple[float, ...]:
    if text in ("1", "2"):
        return RADII_1 if text == "1" else RADII_2
    return tuple(float(v) for v in text.split(","))


def _load(path: str) -> Dataset:
    return scale_dataset(read_csv(path))


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, default=float)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _seed(args) -> int:
    return default_seed() if args.seed is None else args.seed


def cmd_train(args) -> int:
    S = _load(args.data)
    budget = PrivacyBudget(args.epsilon)
    loss = make_spec(args.loss, args.radius)
    cfg = MechanismConfig(budget, lam=args.lam, R=args.radius, radii=args.radii)
    if args.mechanism == MechanismId.OUT_STRONGLY_CONVEX.value:
        # --lambda becomes the Tikhonov weight folded into the loss
        loss = with_tikhonov(loss, args.lam)
        cfg = replace(cfg, lam=0.0)
    elif args.mechanism == MechanismId.TUNED.value:
        loss = make_spec(args.loss, max(args.radii))
    model = train(args.mechanism, S, loss, cfg, RngStream(_seed(args)))
    _write_json(model.to_json_dict(), args.out)
    return 0


def cmd_tune(args) -> int:
    S = _load(args.data)
    cfg = MechanismConfig(PrivacyBudget(args.epsilon), radii=args.radii, base=args.base)
    res = tune_private_detailed(S, make_spec(args.loss, max(args.radii)), cfg, RngStream(_seed(args)))
    _write_json(res.model.to_json_dict(), args.out)
    if args.out:
        snap = res.model.config_snapshot
        print(json.dumps({k: snap[k] for k in ("chosen_R", "chosen_lambda", "selection_probabilities")}))
    return 0


def cmd_attack(args) -> int:
    model = TrainedModel.from_json_dict(json.loads(Path(args.model).read_text(encoding="utf-8")))
    raw = read_csv(args.data)
    # bring the data into the model's scaled space
    data = Dataset(raw.X * model.scaling.x_factor, raw.y * model.scaling.y_factor, model.scaling)
    idx = args.target_index or tuple(range(data.d - 3, data.d))
    codes = np.unique(data.X[:, list(idx)], axis=0)
    w_np = solve_erm(data, squared_spec(model.radius_R), 0.0, model.radius_R)
    target = attacks.MiTarget(idx, codes, np.full(len(codes), 1.0 / len(codes)), attacks.residual_sigma(w_np, data))
    target = target.with_prior(attacks.empirical_prior(data, target))
    result = {
        "epsilon": model.config_snapshot.get("epsilon"),
        "mechanism": model.mechanism_id.value,
        "mi_accuracy": attacks.mi_accuracy(model, data, target),
        "n_validation": data.n,
        "seed": model.rng_seed,
    }
    _write_json(result, args.out)
    return 0


def cmd_audit(args) -> int:
    reports = run_suite(args.suite, RngStream(_seed(args)))
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for k, rep in enumerate(reports):
        text = json.dumps(rep.to_dict(), default=float)
        print(text)
        if out_dir:
            (out_dir / f"{k:03d}_{rep.name.replace('/', '_')}.json").write_text(text + "\n", encoding="utf-8")
    failed = [r.name for r in reports if not r.passed]
    print(json.dumps({"suite": args.suite, "reports": len(reports), "failed": failed}), file=sys.stderr)
    return 0 if not failed else 1


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = run_experiment(args.kind, cfg)
    result.write_csv(args.out)
    if result.failures:
        log.warning("%d rows failed", len(result.failures))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpconvex", description="Differentially private convex learning toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one private model from a CSV file")
    t.add_argument("--mechanism", required=True, choices=TRAINABLE)
    t.add_argument("--epsilon", required=True, type=float)
    t.add_argument("--lambda", dest="lam", type=float, default=0.1)
    t.add_argument("--radius", type=float, default=1.0)
    t.add_argument("--loss", choices=["squared", "hinge", "logistic"], default="squared")
    t.add_argument("--radii", type=_floats, default=RADII_1, help="tuner radius grid: 1, 2 or a comma list")
    t.add_argument("--data", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    u = sub.add_parser("tune", help="privately tune (lambda, R) and train")
    u.add_argument("--epsilon", required=True, type=float)
    u.add_argument("--radii", type=_floats, default=RADII_1)
    u.add_argument("--base", choices=sorted(BASE_TRAINERS), default="rls-out")
    u.add_argument("--loss", choices=["squared", "hinge", "logistic"], default="squared")
    u.add_argument("--data", required=True)
    u.add_argument("--seed", type=int)
    u.add_argument("--out")
    u.set_defaults(func=cmd_tune)

    a = sub.add_parser("attack", help="model-inversion accuracy of a saved model")
    a.add_argument("--model", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--target-index", type=lambda s: tuple(int(v) for v in s.split(",")),
                   help="comma list of feature columns holding the one-hot target (default: last three)")
    a.add_argument("--out")
    a.set_defaults(func=cmd_attack)

    d = sub.add_parser("audit", help="run an audit suite; exit status 0 iff every report passes")
    d.add_argument("--suite", required=True)
    d.add_argument("--seed", type=int)
    d.add_argument("--out", help="directory for one JSON file per report")
    d.set_defaults(func=cmd_audit)

    e = sub.add_parser("experiment", help="run a tradeoff or size-sweep experiment")
    e.add_argument("kind", choices=["tradeoff", "size-sweep"])
    e.add_argument("--config")
    e.add_argument("--seed", type=int)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DataError, MechanismError, SolverError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
