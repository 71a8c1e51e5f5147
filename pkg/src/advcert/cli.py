"""Command-line entry points.

Subcommands: ``certify``, ``transport``, ``adversary`` (mixup | monge |
boost), ``train``, ``experiment`` (toy1d | digits).  Exit codes: 0 success,
2 configuration error, 3 numeric failure.  The default output directory can
be set via the ``ADVCERT_OUTPUT_DIR`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .adversaries import (
    adversary_to_dict,
    apply,
    boost_iterations,
    fit_monge_adversary,
    iterate,
    mixup_to_point,
)
from .data import (
    load_dataset_csv,
    load_marginal,
    save_dataset_csv,
    split_marginals,
    unconditional_mean,
)
from .errors import AdvcertError, ConfigError, NumericError
from .harness import DEFAULT_OUTPUT_ENV, ExperimentConfig, run_certify, run_experiment
from .kernels import kernel_from_spec
from .learner import TrainConfig, model_to_dict, train_with_report
from .transport import monge_cost, optimal_coupling, cost_matrix, w1_phi
from .util import canonical_json, json_ready

__all__ = ["main", "build_parser"]


def _output_dir(value: str | None) -> Path:
    out = Path(value or os.environ.get(DEFAULT_OUTPUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _floats_csv(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advcert",
        description="Adversarial-budget certification toolkit: optimal "
                    "transport, kernel distortion certificates, proper-loss "
                    "training, and experiment sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cert = sub.add_parser("certify", help="emit defeat certificates for an adversary")
    cert.add_argument("--config", help="JSON config document")
    cert.add_argument("--dataset", help="labeled dataset CSV")
    cert.add_argument("--kernel", help="kernel spec, e.g. linear:1 or rbf:0.5")
    cert.add_argument("--loss", help="loss name")
    cert.add_argument("--losses", help="comma-separated loss set (joint verdict)")
    cert.add_argument("--epsilon", type=float, help="defeat tolerance in [0,1]")
    cert.add_argument("--adversary-json", help="adversary descriptor JSON file")
    cert.add_argument("--seed", type=int, help="seed (required for monge adversaries)")
    cert.add_argument("--evals", type=int, help="monge fit objective evaluations")
    cert.add_argument("--output-dir")
    cert.set_defaults(func=cmd_certify)

    tr = sub.add_parser("transport", help="optimal transport cost between marginals")
    tr.add_argument("--p", required=True, help="first marginal (CSV or JSON)")
    tr.add_argument("--n", required=True, help="second marginal (CSV or JSON)")
    tr.add_argument("--cost", default="euclidean",
                    help="euclidean | l1 | sq_euclidean | feature:<kernel spec>")
    tr.add_argument("--with-coupling", action="store_true",
                    help="include (row, col, weight) triples in the output")
    tr.add_argument("--out", help="write JSON here instead of stdout")
    tr.set_defaults(func=cmd_transport)

    adv = sub.add_parser("adversary", help="build an adversary and transform a dataset")
    advsub = adv.add_subparsers(dest="kind", required=True)

    mix = advsub.add_parser("mixup", help="mixup-to-point adversary")
    mix.add_argument("--dataset", required=True)
    mix.add_argument("--lambda", dest="lam", type=float, required=True,
                     help="mixup coefficient in [0,1] (1 = identity)")
    mix.add_argument("--target", default="mean",
                     help="'mean' or a comma-separated vector")
    mix.add_argument("--output-dir")
    mix.set_defaults(func=cmd_adversary_mixup)

    mon = advsub.add_parser("monge", help="budgeted transport-compressing adversary")
    mon.add_argument("--dataset", required=True)
    group = mon.add_mutually_exclusive_group(required=True)
    group.add_argument("--alpha", type=float, help="absolute L1 budget per point")
    group.add_argument("--alpha-frac", type=float,
                       help="budget as a fraction of the class-mean L1 gap")
    mon.add_argument("--objective", default="w2_squared",
                     choices=["w2_squared", "w1"])
    mon.add_argument("--seed", type=int, required=True)
    mon.add_argument("--evals", type=int, default=2000)
    mon.add_argument("--output-dir")
    mon.set_defaults(func=cmd_adversary_monge)

    boo = advsub.add_parser("boost", help="iterate a contraction to a Monge budget")
    boo.add_argument("--dataset", required=True)
    boo.add_argument("--eta", type=float, required=True,
                     help="contraction factor in (0,1)")
    boo.add_argument("--delta", type=float, required=True,
                     help="target feature-space transport budget")
    boo.add_argument("--kernel", default="linear",
                     help="kernel spec for the feature cost")
    boo.add_argument("--output-dir")
    boo.set_defaults(func=cmd_adversary_boost)

    trn = sub.add_parser("train", help="train a proper-loss linear model")
    trn.add_argument("--dataset", required=True)
    trn.add_argument("--loss", default="log")
    trn.add_argument("--link", default="canonical")
    trn.add_argument("--step", type=float, default=0.5)
    trn.add_argument("--max-iter", type=int, default=50000)
    trn.add_argument("--tol", type=float, default=1e-8)
    trn.add_argument("--l2", type=float, default=0.0)
    trn.add_argument("--out", help="model JSON path (default model.json)")
    trn.add_argument("--output-dir")
    trn.set_defaults(func=cmd_train)

    exp = sub.add_parser("experiment", help="run a full experiment sweep")
    exp.add_argument("name", choices=["toy1d", "digits"])
    exp.add_argument("--config", help="JSON config document")
    exp.add_argument("--seed", type=int)
    exp.add_argument("--output-dir")
    exp.add_argument("--dataset")
    exp.add_argument("--bins", type=int)
    exp.add_argument("--evals", type=int)
    exp.add_argument("--workers", type=int)
    exp.add_argument("--epsilon", type=float)
    exp.add_argument("--alphas", help="comma-separated alpha grid (toy1d)")
    exp.add_argument("--alpha-fracs", help="comma-separated budget fractions (digits)")
    exp.set_defaults(func=cmd_experiment)

    return parser


# ---------------------------------------------------------------------------
# Command bodies
# ---------------------------------------------------------------------------


def cmd_certify(args: argparse.Namespace) -> int:
    overrides = {
        "experiment": "certify",
        "dataset": args.dataset,
        "kernel": args.kernel,
        "loss": args.loss,
        "epsilon": args.epsilon,
        "seed": args.seed,
        "evals": args.evals,
        "output_dir": args.output_dir,
    }
    if args.losses is not None:
        overrides["losses"] = tuple(tok.strip() for tok in args.losses.split(","))
    if args.adversary_json is not None:
        try:
            overrides["adversary"] = json.loads(Path(args.adversary_json).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"adversary file not found: {args.adversary_json}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"adversary file is not valid JSON: {exc}") from exc
    config = ExperimentConfig.load(args.config, overrides)
    report = run_certify(config)
    print(f"certificates written to {report.report_path}")
    return 0


def cmd_transport(args: argparse.Namespace) -> int:
    P = load_marginal(args.p)
    N = load_marginal(args.n)
    cm = cost_matrix(args.cost, None, P, N)
    coupling, value = optimal_coupling(cm, P.mass, N.mass)
    payload: dict = {"value": value, "cost": args.cost,
                     "shape": [int(P.size), int(N.size)]}
    if args.with_coupling:
        rows, cols = np.nonzero(coupling.weights)
        payload["coupling"] = [
            [int(i), int(j), float(coupling.weights[i, j])]
            for i, j in zip(rows.tolist(), cols.tolist())
        ]
    text = canonical_json(json_ready(payload))
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"transport value {value!r} written to {args.out}")
    else:
        print(text)
    return 0


def _emit_adversary(out: Path, adversary, dataset, extra: dict | None = None) -> int:
    transformed = apply(adversary, dataset)
    save_dataset_csv(transformed, out / "transformed.csv")
    payload = adversary_to_dict(adversary)
    payload.update(extra or {})
    (out / "adversary.json").write_text(canonical_json(json_ready(payload)) + "\n")
    print(f"adversary {adversary.id} -> {out / 'adversary.json'}")
    print(f"transformed dataset -> {out / 'transformed.csv'}")
    return 0


def cmd_adversary_mixup(args: argparse.Namespace) -> int:
    out = _output_dir(args.output_dir)
    ds = load_dataset_csv(args.dataset)
    P, N, prior = split_marginals(ds)
    pi = prior.pi
    if args.target == "mean":
        target = unconditional_mean(P, N, pi)
    else:
        target = np.asarray(_floats_csv(args.target), dtype=float)
    adversary = mixup_to_point(args.lam, target)
    return _emit_adversary(out, adversary, ds)


def cmd_adversary_monge(args: argparse.Namespace) -> int:
    out = _output_dir(args.output_dir)
    ds = load_dataset_csv(args.dataset)
    P, N, prior = split_marginals(ds)
    if args.alpha is not None:
        alpha = args.alpha
    else:
        alpha = args.alpha_frac * float(np.sum(np.abs(P.mean - N.mean)))
    adversary = fit_monge_adversary(P, N, alpha, objective=args.objective,
                                    seed=args.seed, evals=args.evals)
    return _emit_adversary(out, adversary, ds, {"fit": adversary.fit_report_})


def cmd_adversary_boost(args: argparse.Namespace) -> int:
    if not (0.0 < args.eta < 1.0):
        raise ConfigError("eta must lie in (0, 1)")
    if args.delta <= 0.0:
        raise ConfigError("delta must be > 0")
    out = _output_dir(args.output_dir)
    ds = load_dataset_csv(args.dataset)
    P, N, prior = split_marginals(ds)
    pi = prior.pi
    kernel = kernel_from_spec(args.kernel, points=ds.points)
    base_w1 = w1_phi(kernel, P, N)
    target = unconditional_mean(P, N, pi)
    base = mixup_to_point(1.0 - args.eta, target)
    count = boost_iterations(args.eta, base_w1, args.delta)
    adversary = iterate(base, count.value)
    achieved = monge_cost(adversary, P, N, f"feature:{args.kernel}")
    extra = {
        "boost": {
            "eta": args.eta,
            "delta": args.delta,
            "w1_phi": base_w1,
            "iterations": count.value,
            "flag": count.flag,
            "achieved_cost": achieved,
        }
    }
    return _emit_adversary(out, adversary, ds, extra)


def cmd_train(args: argparse.Namespace) -> int:
    out = _output_dir(args.output_dir)
    ds = load_dataset_csv(args.dataset)
    cfg = TrainConfig(loss=args.loss, link=args.link, step=args.step,
                      max_iter=args.max_iter, tol=args.tol, l2=args.l2)
    model, report = train_with_report(ds, cfg)
    path = Path(args.out) if args.out else out / "model.json"
    path.write_text(canonical_json(json_ready(model_to_dict(model, cfg, report))) + "\n")
    status = "converged" if report.converged else "max-iterations"
    print(f"model ({status}, loss {report.final_loss!r}) -> {path}")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    overrides = {
        "experiment": args.name,
        "seed": args.seed,
        "output_dir": args.output_dir,
        "dataset": args.dataset,
        "bins": args.bins,
        "evals": args.evals,
        "workers": args.workers,
        "epsilon": args.epsilon,
    }
    if args.alphas is not None:
        overrides["alphas"] = _floats_csv(args.alphas)
    if args.alpha_fracs is not None:
        overrides["alpha_fracs"] = _floats_csv(args.alpha_fracs)
    config = ExperimentConfig.load(args.config, overrides)
    report = run_experiment(config)
    print(f"{report.experiment}: {len(report.records)} sweep points -> {report.csv_path}")
    print(f"report -> {report.report_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AdvcertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
