"""Experiment runners, configuration, and deterministic report emission.

Every runner writes plot-ready CSV rows plus a ``report.json`` whose bytes
depend only on (config, seed); wall-clock time and library versions go to a
``run_meta.json`` sidecar so the deterministic artifacts stay byte-stable.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__ as _pkg_version
from .adversaries import (
    IdentityAdversary,
    MixupToPoint,
    adversary_from_dict,
    adversary_to_dict,
    apply,
    fit_monge_adversary,
    mixup_to_point,
)
from .data import (
    EmpiricalMarginal,
    LabeledDataset,
    dataset_from_marginals,
    discretize_density,
    load_dataset_csv,
    save_dataset_csv,
    split_marginals,
    unconditional_mean,
)
from .distortion import (
    beta_rkhs,
    defeat_certificate,
    joint_defeat_certificate,
    marginal_digest,
    weighted_mmd,
)
from .errors import ConfigError, ValidationError
from .kernels import LinearKernel, kernel_from_spec
from .learner import CrossEvalTable, TrainConfig, cross_eval
from .losses import blunt_loss, canonical_link, delta_ell_pi, get_loss
from .transport import monge_cost, wasserstein1
from .util import canonical_json, json_ready, stable_digest

__all__ = [
    "ExperimentConfig",
    "RunReport",
    "run_toy1d",
    "run_digits",
    "run_certify",
    "run_experiment",
    "bundled_dataset_path",
    "DEFAULT_OUTPUT_ENV",
]

DEFAULT_OUTPUT_ENV = "ADVCERT_OUTPUT_DIR"
ROW_BOUND_SLACK = 1e-6

TOY_ALPHAS = tuple(round(0.05 * k, 2) for k in range(20)) + (0.99,)
DIGITS_FRACS = (0.15, 0.30, 0.45, 0.60)
CERTIFY_PI_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass(frozen=True)
class ExperimentConfig:
    """One JSON document drives a run; CLI flags override top-level fields."""

    experiment: str = "toy1d"
    loss: str = "log"
    link: str = "canonical"
    losses: tuple = ()
    kernel: str = "linear:1"
    epsilon: float = 0.05
    pi: float = 0.5
    alphas: tuple = TOY_ALPHAS
    alpha_fracs: tuple = DIGITS_FRACS
    pi_grid: tuple = CERTIFY_PI_GRID
    bins: int = 200
    dataset: str | None = None
    adversary: dict = field(default_factory=dict)
    seed: int | None = None
    output_dir: str | None = None
    workers: int = 1
    step: float = 0.5
    max_iter: int = 20000
    tol: float = 1e-7
    l2: float = 0.0
    evals: int = 2000
    step_scale: float = 0.5

    def __post_init__(self):
        if self.experiment not in ("toy1d", "digits", "certify", "transport"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError("epsilon must lie in [0, 1]")
        if not (0.0 < self.pi < 1.0):
            raise ConfigError("pi must lie in (0, 1)")
        if self.bins < 2:
            raise ConfigError("bins must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for name in ("alphas", "alpha_fracs", "pi_grid", "losses"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.experiment == "toy1d" and not self.alphas:
            raise ConfigError("alphas grid must be non-empty")
        if self.experiment == "digits" and not self.alpha_fracs:
            raise ConfigError("alpha_fracs grid must be non-empty")
        if self.dataset is not None and not Path(self.dataset).exists():
            raise ConfigError(f"dataset file not found: {self.dataset}")

    @classmethod
    def from_dict(cls, payload: dict, overrides: dict | None = None) -> "ExperimentConfig":
        merged = dict(payload)
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**merged)

    @classmethod
    def load(cls, path: str | None, overrides: dict | None = None) -> "ExperimentConfig":
        payload = {}
        if path is not None:
            try:
                payload = json.loads(Path(path).read_text())
            except FileNotFoundError as exc:
                raise ConfigError(f"config file not found: {path}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
            if not isinstance(payload, dict):
                raise ConfigError("config document must be a JSON object")
        return cls.from_dict(payload, overrides)

    def to_dict(self) -> dict:
        return json_ready(dataclasses.asdict(self))

    def digest(self) -> str:
        return stable_digest(self.to_dict())

    def train_config(self) -> TrainConfig:
        return TrainConfig(loss=self.loss, link=self.link, step=self.step,
                           max_iter=self.max_iter, tol=self.tol, l2=self.l2,
                           seed=self.seed)

    def resolve_output_dir(self) -> Path:
        base = self.output_dir or os.environ.get(DEFAULT_OUTPUT_ENV) or "."
        out = Path(base)
        out.mkdir(parents=True, exist_ok=True)
        return out


@dataclass(frozen=True)
class RunReport:
    config_digest: str
    experiment: str
    records: tuple
    csv_path: str
    report_path: str
    versions: dict
    wall_time: float

    def to_dict(self) -> dict:
        return json_ready(
            {
                "config_digest": self.config_digest,
                "experiment": self.experiment,
                "records": list(self.records),
                "csv_path": self.csv_path,
            }
        )


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_report(out: Path, config: ExperimentConfig, experiment: str,
                  records: list, csv_name: str, extra: dict | None = None,
                  started: float = 0.0) -> RunReport:
    report_path = out / "report.json"
    payload = {
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "experiment": experiment,
        "records": records,
        "csv_path": csv_name,
    }
    payload.update(extra or {})
    report_path.write_text(canonical_json(payload) + "\n")
    versions = {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "advcert": _pkg_version,
    }
    wall = time.monotonic() - started
    (out / "run_meta.json").write_text(
        canonical_json({"wall_time_seconds": wall, "versions": versions}) + "\n"
    )
    return RunReport(
        config_digest=config.digest(),
        experiment=experiment,
        records=tuple(records),
        csv_path=str(out / csv_name),
        report_path=str(report_path),
        versions=versions,
        wall_time=wall,
    )


def _sweep(points: Sequence, worker: Callable, workers: int) -> list:
    """Run one worker per sweep point, preserving grid order in the result."""
    if workers <= 1 or len(points) <= 1:
        return [worker(p) for p in points]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, points))


# ---------------------------------------------------------------------------
# Toy 1-d sweep
# ---------------------------------------------------------------------------


def toy_marginals(bins: int = 200) -> tuple[EmpiricalMarginal, EmpiricalMarginal]:
    """The two truncated-Gaussian class densities on [0, 1], discretized."""
    pos = discretize_density(lambda x: np.exp(-((x - 0.2) ** 2) / 0.1 ** 2), 0.0, 1.0, bins)
    neg = discretize_density(lambda x: np.exp(-((x - 0.6) ** 2) / 0.2 ** 2), 0.0, 1.0, bins)
    return pos, neg


TOY_COLUMNS = ("alpha", "delta", "w_norm", "loss_cc", "loss_ca", "loss_ac",
               "loss_aa", "beta", "bound")


def _check_row_bound(loss_aa: float, bound: float, where: str) -> None:
    if loss_aa < bound - ROW_BOUND_SLACK:
        raise ValidationError(
            f"{where}: adversarial loss {loss_aa:.6g} fell below the "
            f"certified floor {bound:.6g}"
        )


def _bound_row(loss, P, N, pi, adversary, table: CrossEvalTable,
               epsilon: float, where: str) -> dict:
    """The per-row hardness numbers: beta scaled to the trained model's ball.

    The trained scorer lives in the radius-B ball of the offset-1 linear
    kernel with B = ||(w, b)||; beta for that ball is
    ``2*delta_ell_pi + B*weighted_mmd`` and the floor is
    ``(blunt - beta/2)_+``, checked against the adversarially trained
    adversarial loss on every row.
    """
    b_norm = table.adv_model.norm
    wmmd = weighted_mmd(LinearKernel(offset=1.0), adversary, P, N, pi)
    beta_b = 2.0 * delta_ell_pi(loss, pi) + b_norm * wmmd
    bound = max(0.0, blunt_loss(loss) - beta_b / 2.0)
    _check_row_bound(table.aa, bound, where)
    cert = defeat_certificate(
        loss,
        canonical_link(loss),
        beta_b,
        epsilon,
        adversary_id=getattr(adversary, "id", "identity"),
        method="linear_ball_scaled",
    )
    return {"beta": beta_b, "bound": bound, "w_norm": b_norm,
            "certificate": cert.to_dict()}


def run_toy1d(config: ExperimentConfig) -> RunReport:
    """The 1-d mixup sweep: per alpha, train/cross-eval and certify.

    The adversary mixes every point toward the unconditional mean with
    lambda = 1 - alpha, making delta = (1 - alpha) * W1 up to solver
    tolerance.
    """
    started = time.monotonic()
    out = config.resolve_output_dir()
    loss = get_loss(config.loss)
    pi = config.pi
    P, N = toy_marginals(config.bins)
    clean = dataset_from_marginals(P, N, pi)
    target = unconditional_mean(P, N, pi)
    w1 = wasserstein1(P, N, "euclidean")
    train_cfg = config.train_config()

    def one_alpha(alpha: float) -> dict:
        adversary = MixupToPoint(lam=1.0 - alpha, target=target)
        delta = monge_cost(adversary, P, N, "euclidean")
        adv = apply(adversary, clean)
        table = cross_eval(clean, adv, train_cfg)
        extras = _bound_row(loss, P, N, pi, adversary, table, config.epsilon,
                            where=f"toy1d alpha={alpha}")
        return {
            "alpha": alpha,
            "delta": delta,
            "w_norm": extras["w_norm"],
            "loss_cc": table.cc,
            "loss_ca": table.ca,
            "loss_ac": table.ac,
            "loss_aa": table.aa,
            "beta": extras["beta"],
            "bound": extras["bound"],
            "certificate": extras["certificate"],
            "adversary": adversary_to_dict(adversary),
            "converged": {"clean": table.clean_report.converged,
                          "adv": table.adv_report.converged},
        }

    records = _sweep(list(config.alphas), one_alpha, config.workers)
    rows = [[r[c] for c in TOY_COLUMNS] for r in records]
    _write_csv(out / "toy1d.csv", TOY_COLUMNS, rows)
    extra = {"w1_clean": w1, "target": json_ready(target)}
    return _write_report(out, config, "toy1d", json_ready(records), "toy1d.csv",
                         extra, started)


# ---------------------------------------------------------------------------
# Digits-style budget sweep
# ---------------------------------------------------------------------------


DIGITS_COLUMNS = ("alpha_frac", "alpha", "delta", "w_norm", "loss_cc", "loss_ca",
                  "loss_ac", "loss_aa", "beta", "bound")


def bundled_dataset_path() -> Path:
    return Path(__file__).parent / "datasets" / "synth64.csv"


def run_digits(config: ExperimentConfig) -> RunReport:
    """Two-stage budget sweep on a two-class feature dataset.

    Per budget fraction: fit a transport-compressing perturbation adversary
    (warm-started from the previous budget so its objective is non-increasing
    in the budget), persist the transformed dataset, then train/evaluate the
    2x2 grid.
    """
    if config.seed is None:
        raise ConfigError("digits experiment requires a seed (monge fit)")
    started = time.monotonic()
    out = config.resolve_output_dir()
    loss = get_loss(config.loss)
    path = config.dataset or str(bundled_dataset_path())
    clean = load_dataset_csv(path)
    P, N, prior = split_marginals(clean)
    pi = prior.pi
    mean_gap = float(np.sum(np.abs(P.mean - N.mean)))
    train_cfg = config.train_config()

    records = []
    prev_deltas = None
    for frac in config.alpha_fracs:
        alpha = frac * mean_gap
        adversary = fit_monge_adversary(
            P, N, alpha, objective="w2_squared", seed=config.seed,
            evals=config.evals, step_scale=config.step_scale,
            init_deltas=prev_deltas,
        )
        prev_deltas = adversary.deltas
        delta = monge_cost(adversary, P, N, "euclidean")
        adv = apply(adversary, clean)
        adv_name = f"adv_frac_{frac:g}.csv"
        save_dataset_csv(adv, out / adv_name)
        table = cross_eval(clean, adv, train_cfg)
        extras = _bound_row(loss, P, N, pi, adversary, table, config.epsilon,
                            where=f"digits alpha_frac={frac}")
        records.append({
            "alpha_frac": frac,
            "alpha": alpha,
            "delta": delta,
            "w_norm": extras["w_norm"],
            "loss_cc": table.cc,
            "loss_ca": table.ca,
            "loss_ac": table.ac,
            "loss_aa": table.aa,
            "beta": extras["beta"],
            "bound": extras["bound"],
            "certificate": extras["certificate"],
            "fit": dict(adversary.fit_report_),
            "adv_dataset": adv_name,
        })
    rows = [[r[c] for c in DIGITS_COLUMNS] for r in records]
    _write_csv(out / "digits.csv", DIGITS_COLUMNS, rows)
    extra = {"mean_gap_l1": mean_gap, "pi": pi, "dataset": os.path.basename(path)}
    return _write_report(out, config, "digits", json_ready(records), "digits.csv",
                         extra, started)


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------


CERTIFY_COLUMNS = ("pi", "mmd_pi", "threshold")


def adversary_from_config(spec: dict, P: EmpiricalMarginal,
                          N: EmpiricalMarginal, pi: float, seed: int | None,
                          config: ExperimentConfig):
    """Build the configured adversary; monge kinds fit against (P, N).

    Serialized descriptors (the ``adversary`` subcommand's JSON output) are
    accepted directly alongside the shorthand config specs.
    """
    kind = spec.get("kind", "identity")
    if kind in ("mixup_to_point", "perturbation_table", "iterated"):
        return adversary_from_dict(spec)
    if kind == "identity":
        return IdentityAdversary()
    if kind == "mixup":
        if "target" in spec:
            target = np.asarray(spec["target"], dtype=float)
        else:
            target = unconditional_mean(P, N, pi)
        return mixup_to_point(float(spec.get("lam", 0.5)), target)
    if kind == "constant":
        target = np.asarray(spec["target"], dtype=float) if "target" in spec \
            else unconditional_mean(P, N, pi)
        return MixupToPoint(lam=0.0, target=target)
    if kind == "monge":
        if seed is None:
            raise ConfigError("monge adversary requires a seed")
        return fit_monge_adversary(
            P, N, float(spec["alpha"]), objective=spec.get("objective", "w2_squared"),
            seed=seed, evals=config.evals, step_scale=config.step_scale,
        )
    raise ConfigError(f"unknown adversary kind {kind!r}")


def run_certify(config: ExperimentConfig) -> RunReport:
    """Defeat certification of an adversary on a dataset.

    Emits the certificate JSON (per loss when a set is given, plus the joint
    symmetric verdict), and a pi-sweep CSV of the weighted MMD against the
    defeat threshold ``2*eps*blunt - 2*delta_ell_pi``.
    """
    started = time.monotonic()
    out = config.resolve_output_dir()
    if config.dataset is None:
        raise ConfigError("certify requires a dataset")
    clean = load_dataset_csv(config.dataset)
    P, N, prior = split_marginals(clean)
    pi = prior.pi
    kernel = kernel_from_spec(config.kernel, points=clean.points)
    adversary = adversary_from_config(config.adversary, P, N, pi,
                                      config.seed, config)
    loss_names = list(config.losses) if config.losses else [config.loss]
    losses = [get_loss(name) for name in loss_names]
    inputs = {
        "P": marginal_digest(P),
        "N": marginal_digest(N),
        "adversary": adversary.id,
        "kernel": config.kernel,
    }

    wmmd = weighted_mmd(kernel, adversary, P, N, pi)
    certificates = []
    for loss in losses:
        beta = 2.0 * delta_ell_pi(loss, pi) + wmmd
        cert = defeat_certificate(loss, canonical_link(loss), beta,
                                  config.epsilon, adversary.id,
                                  method="closed_form_mmd", inputs=inputs)
        certificates.append(cert.to_dict())

    joint = None
    if len(losses) > 1:
        # gamma at zero offsets over the unit ball is exactly the weighted MMD.
        joint = joint_defeat_certificate(losses, wmmd, config.epsilon).to_dict()

    base_loss = losses[0]
    curve = []
    for pi_val in config.pi_grid:
        mmd_pi = weighted_mmd(kernel, adversary, P, N, pi_val)
        threshold = (2.0 * config.epsilon * blunt_loss(base_loss)
                     - 2.0 * delta_ell_pi(base_loss, pi_val))
        curve.append({"pi": pi_val, "mmd_pi": mmd_pi, "threshold": threshold})
    rows = [[r[c] for c in CERTIFY_COLUMNS] for r in curve]
    _write_csv(out / "certify_curve.csv", CERTIFY_COLUMNS, rows)

    cert_payload = {"certificates": certificates, "joint": joint,
                    "adversary": adversary_to_dict(adversary)}
    (out / "certificates.json").write_text(canonical_json(json_ready(cert_payload)) + "\n")

    records = [{"certificates": certificates, "joint": joint, "curve": curve}]
    extra = {"pi": pi, "wmmd": wmmd}
    return _write_report(out, config, "certify", json_ready(records),
                         "certify_curve.csv", extra, started)


def run_experiment(config: ExperimentConfig) -> RunReport:
    runner = {"toy1d": run_toy1d, "digits": run_digits, "certify": run_certify}
    if config.experiment not in runner:
        raise ConfigError(f"no runner for experiment {config.experiment!r}")
    return runner[config.experiment](config)
