"""Concrete adversaries: mixup-to-point, budgeted Monge perturbations, and
contractive boosting.

Adversaries are deterministic instance maps ``a: X -> X`` with transformer
shape (no-op ``fit``, point-mapping ``transform``) so they compose with
estimator pipelines; ``apply`` transforms a labeled dataset while leaving
labels and weights untouched (the adversary cannot act on the prior).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .data import EmpiricalMarginal, LabeledDataset
from .errors import DomainError, ValidationError
from .kernels import Kernel, feature_cost
from .transport import CostMatrix, optimal_coupling, resolve_cost
from .util import stable_digest

__all__ = [
    "Adversary",
    "IdentityAdversary",
    "MixupToPoint",
    "PerturbationTableAdversary",
    "IteratedAdversary",
    "ContractivityEstimate",
    "MixupLambda",
    "BoostCount",
    "mixup_to_point",
    "mixup_lambda_for_budget",
    "fit_monge_adversary",
    "contractivity",
    "boost_iterations",
    "iterate",
    "apply",
    "adversary_to_dict",
    "adversary_from_dict",
]

BUDGET_SLACK = 1e-9


class Adversary(BaseEstimator, TransformerMixin):
    """Base transformer-shaped adversary; subclasses implement transform."""

    kind = "abstract"

    def fit(self, X, y=None):
        return self  # stateless; present for estimator-pipeline shape

    def transform(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        pt = np.asarray(x, dtype=float).reshape(1, -1)
        return self.transform(pt)[0]

    def params_dict(self) -> dict:
        raise NotImplementedError

    @property
    def id(self) -> str:
        return stable_digest({"kind": self.kind, **self.params_dict()})


def _as_points(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


class IdentityAdversary(Adversary):
    kind = "identity"

    def transform(self, X) -> np.ndarray:
        return _as_points(X).copy()

    def params_dict(self) -> dict:
        return {}


class MixupToPoint(Adversary):
    """a(x) = lam * x + (1 - lam) * target."""

    kind = "mixup_to_point"

    def __init__(self, lam: float, target):
        if not (0.0 <= lam <= 1.0):
            raise DomainError(f"mixup lambda must lie in [0, 1], got {lam!r}")
        self.lam = float(lam)
        self.target = np.atleast_1d(np.asarray(target, dtype=float))

    def transform(self, X) -> np.ndarray:
        pts = _as_points(X)
        if pts.shape[1] != self.target.size:
            raise DomainError("mixup target dimension does not match the data")
        return self.lam * pts + (1.0 - self.lam) * self.target[None, :]

    def params_dict(self) -> dict:
        return {"lam": self.lam, "target": self.target}


class PerturbationTableAdversary(Adversary):
    """Tabulated per-point perturbations under a hard per-point L1 budget.

    Tabulated points move by their stored delta; unseen points pass through
    unchanged (the map is fit once on a fixed sample and reused).
    """

    kind = "perturbation_table"

    def __init__(self, support, deltas, alpha: float):
        support = _as_points(support)
        deltas = np.asarray(deltas, dtype=float)
        if deltas.shape != support.shape:
            raise ValidationError("deltas must align with the tabulated support")
        if alpha < 0.0:
            raise DomainError("budget alpha must be >= 0")
        worst = float(np.max(np.sum(np.abs(deltas), axis=1))) if deltas.size else 0.0
        if worst > alpha + BUDGET_SLACK:
            raise ValidationError(
                f"perturbation exceeds the L1 budget: {worst!r} > alpha={alpha!r}"
            )
        self.support = support
        self.deltas = deltas
        self.alpha = float(alpha)
        self._index = {row.tobytes(): k for k, row in enumerate(np.ascontiguousarray(support))}

    def transform(self, X) -> np.ndarray:
        pts = _as_points(X)
        out = pts.copy()
        lookup = np.ascontiguousarray(pts)
        for k in range(pts.shape[0]):
            hit = self._index.get(lookup[k].tobytes())
            if hit is not None:
                out[k] = pts[k] + self.deltas[hit]
        return out

    def params_dict(self) -> dict:
        return {"support": self.support, "deltas": self.deltas, "alpha": self.alpha}


class IteratedAdversary(Adversary):
    """The J-fold composition a o a o ... o a."""

    kind = "iterated"

    def __init__(self, base: Adversary, J: int):
        if int(J) < 1:
            raise DomainError("iteration count J must be >= 1")
        self.base = base
        self.J = int(J)

    def transform(self, X) -> np.ndarray:
        out = _as_points(X)
        for _ in range(self.J):
            out = self.base.transform(out)
        return out

    def params_dict(self) -> dict:
        return {"base": {"kind": self.base.kind, **self.base.params_dict()}, "J": self.J}


# ---------------------------------------------------------------------------
# Constructors and calculators
# ---------------------------------------------------------------------------


def mixup_to_point(lam: float, target) -> MixupToPoint:
    """The adversary x -> lam*x + (1-lam)*target."""
    return MixupToPoint(lam, target)


class MixupLambda(NamedTuple):
    value: float
    flag: str | None


def mixup_lambda_for_budget(delta: float, w1: float) -> MixupLambda:
    """Largest mixup lambda whose transport cost stays within ``delta``.

    ``C(mixup_lam, P, N) = lam * W1(P, N)``, so the cap is ``delta / w1``;
    when the marginals already coincide (w1 = 0) any lambda works.
    """
    if delta < 0.0:
        raise DomainError("delta must be >= 0")
    if w1 < 0.0:
        raise DomainError("w1 must be >= 0")
    if w1 == 0.0:
        return MixupLambda(1.0, "any_lambda")
    return MixupLambda(min(1.0, delta / w1), None)


def _project_l1(x: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the L1 ball of the given radius."""
    if radius <= 0.0:
        return np.zeros_like(x)
    mag = np.abs(x)
    if mag.sum() <= radius:
        return x
    u = np.sort(mag)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, x.size + 1)
    admissible = u - (css - radius) / ks > 0
    rho = int(ks[admissible][-1])
    theta = (css[rho - 1] - radius) / rho
    return np.sign(x) * np.maximum(mag - theta, 0.0)


def fit_monge_adversary(P: EmpiricalMarginal, N: EmpiricalMarginal, alpha: float,
                        objective: str = "w2_squared", *, seed: int,
                        evals: int = 2000, step_scale: float = 0.5,
                        init_deltas: np.ndarray | None = None,
                        ) -> PerturbationTableAdversary:
    """Fit a budgeted perturbation table that compresses the class transport.

    Seeded coordinate random search over the union support: one candidate
    delta per step (round-robin over points), projected onto the per-point L1
    ball of radius ``alpha``, accepted only on strict objective improvement.
    The incumbent start (identity, or ``init_deltas`` re-projected, e.g. the
    previous budget's solution in a sweep) bounds the final objective by the
    start's, which makes budget sweeps monotone.  Deterministic given
    (seed, config).
    """
    if alpha < 0.0:
        raise DomainError("alpha must be >= 0")
    if objective not in ("w2_squared", "w1"):
        raise DomainError(f"unknown objective {objective!r}")
    if evals < 0:
        raise DomainError("evals must be >= 0")
    if P.dim != N.dim:
        raise ValidationError("marginal dimensions differ")

    cost_fn = resolve_cost("sq_euclidean" if objective == "w2_squared" else "euclidean")
    union, p_idx, n_idx = _union_support(P, N)
    if init_deltas is None:
        deltas = np.zeros_like(union)
    else:
        deltas = np.asarray(init_deltas, dtype=float)
        if deltas.shape != union.shape:
            raise ValidationError(
                f"init_deltas shape {deltas.shape} does not match union "
                f"support {union.shape}"
            )
        deltas = np.vstack([_project_l1(row, alpha) for row in deltas])

    def objective_value(table: np.ndarray) -> float:
        tp = P.support + table[p_idx]
        tn = N.support + table[n_idx]
        _, value = optimal_coupling(CostMatrix(cost_fn(tp, tn)), P.mass, N.mass)
        return value

    current = objective_value(deltas)
    initial = current
    rng = np.random.default_rng(seed)
    accepted = 0
    n_points, d = union.shape
    for step in range(evals):
        idx = step % n_points
        # Log-uniform proposal scales: coarse moves early progress fast, fine
        # moves let the search settle to solver tolerance instead of stalling
        # at the fixed-scale acceptance floor.
        scale = step_scale * alpha * 10.0 ** rng.uniform(-3.0, 0.0)
        proposal = deltas[idx] + scale * rng.standard_normal(d)
        proposal = _project_l1(proposal, alpha)
        trial = deltas.copy()
        trial[idx] = proposal
        value = objective_value(trial)
        if value < current:
            current = value
            deltas = trial
            accepted += 1
    adversary = PerturbationTableAdversary(union, deltas, alpha)
    adversary.fit_report_ = {
        "objective": objective,
        "seed": int(seed),
        "evals": int(evals),
        "accepted": int(accepted),
        "initial_objective": float(initial),
        "final_objective": float(current),
    }
    return adversary


def _union_support(P: EmpiricalMarginal, N: EmpiricalMarginal):
    union = np.unique(np.vstack([P.support, N.support]), axis=0)
    index = {row.tobytes(): k for k, row in enumerate(np.ascontiguousarray(union))}
    p_idx = np.array([index[row.tobytes()] for row in np.ascontiguousarray(P.support)])
    n_idx = np.array([index[row.tobytes()] for row in np.ascontiguousarray(N.support)])
    return union, p_idx, n_idx


@dataclass(frozen=True)
class ContractivityEstimate:
    """Empirical contraction factor over probed support pairs.

    ``eta_hat = 1 - max c(a(x), a(x')) / c(x, x')``; values <= 0 mean the
    adversary is not contractive on the probe (the worst pair says where).
    The estimate's scope is the probed pairs only, never all of X.
    """

    eta_hat: float
    pairs_probed: int
    worst_pair: tuple

    @property
    def contractive(self) -> bool:
        return self.eta_hat > 0.0


def contractivity(a: Adversary, kernel: Kernel, points) -> ContractivityEstimate:
    """Estimate the feature-space contraction factor of ``a`` on support pairs."""
    pts = _as_points(points)
    if pts.shape[0] < 2:
        raise DomainError("contractivity needs at least two probe points")
    cphi = feature_cost(kernel)
    before = cphi(pts, pts)
    mapped = a.transform(pts)
    after = cphi(mapped, mapped)
    iu = np.triu_indices(pts.shape[0], k=1)
    base = before[iu]
    moved = after[iu]
    mask = base > 0.0  # zero-cost pairs carry no constraint
    if not np.any(mask):
        raise DomainError("all probe pairs have zero feature cost")
    ratios = moved[mask] / base[mask]
    worst = int(np.argmax(ratios))
    rows = iu[0][mask]
    cols = iu[1][mask]
    return ContractivityEstimate(
        eta_hat=float(1.0 - ratios[worst]),
        pairs_probed=int(mask.sum()),
        worst_pair=(pts[rows[worst]].copy(), pts[cols[worst]].copy()),
    )


class BoostCount(NamedTuple):
    value: int
    flag: str | None


def boost_iterations(eta: float, w1_phi_value: float, delta: float) -> BoostCount:
    """Iterations J with (1-eta)^J * W1 <= delta, via J >= (1/eta) ln(W1/delta).

    Sufficiency follows from ln(1/(1-eta)) >= eta.  When the marginals are
    already within budget the count is 1 with the ``already_efficient`` flag.
    """
    if not (0.0 < eta < 1.0):
        raise DomainError("eta must lie in (0, 1)")
    if not delta > 0.0:
        raise DomainError("delta must be > 0")
    if w1_phi_value < 0.0:
        raise DomainError("w1_phi must be >= 0")
    if delta >= w1_phi_value:
        return BoostCount(1, "already_efficient")
    count = math.ceil((1.0 / eta) * math.log(w1_phi_value / delta))
    return BoostCount(max(1, count), None)


def iterate(a: Adversary, J: int) -> Adversary:
    """The composition a o ... o a (J times)."""
    return IteratedAdversary(a, J)


def apply(a: Adversary, ds: LabeledDataset) -> LabeledDataset:
    """Transform the points of a dataset; labels and weights are untouched."""
    return ds.with_points(a.transform(ds.points))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def adversary_to_dict(a: Adversary) -> dict:
    return {"kind": a.kind, **_plain(a.params_dict())}


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    return obj


def adversary_from_dict(payload: dict) -> Adversary:
    kind = payload.get("kind")
    if kind == "identity":
        return IdentityAdversary()
    if kind == "mixup_to_point":
        return MixupToPoint(payload["lam"], payload["target"])
    if kind == "perturbation_table":
        return PerturbationTableAdversary(
            payload["support"], payload["deltas"], payload["alpha"]
        )
    if kind == "iterated":
        return IteratedAdversary(adversary_from_dict(payload["base"]), payload["J"])
    raise DomainError(f"unknown adversary kind {kind!r}")
