"""Proper-loss linear learner and the clean/adversarial cross-evaluation grid.

Training is full-batch deterministic gradient descent on the exact weighted
empirical composite loss with the bias handled by feature augmentation
``(x, 1)``.  Canonical composites use the numerically stable closed forms
registered on the loss (valid for every real score); other links chain the
class-conditional partial derivative through the link inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import LabeledDataset
from .errors import ConfigError, DivergenceError, DomainError
from .losses import (
    Link,
    ProperLoss,
    composite_grad_unchecked,
    composite_loss_unchecked,
    get_link,
    get_loss,
    partial_loss,
)

__all__ = [
    "LinearModel",
    "TrainConfig",
    "TrainReport",
    "train",
    "train_with_report",
    "expected_loss",
    "cross_eval",
    "CrossEvalTable",
    "ProperLossClassifier",
]

DIVERGENCE_PATIENCE = 10
MAX_HALVINGS = 60
_CLIP = 1e-12


@dataclass(frozen=True)
class LinearModel:
    """Affine scorer ``score(x) = weights . x + bias``."""

    weights: np.ndarray
    bias: float

    def __init__(self, weights, bias: float):
        weights = np.asarray(weights, dtype=float).reshape(-1)
        bias = float(bias)
        if not (np.all(np.isfinite(weights)) and np.isfinite(bias)):
            raise DomainError("model parameters must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def score(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[1] != self.dim:
            raise DomainError(f"model expects dim {self.dim}, got {pts.shape[1]}")
        return pts @ self.weights + self.bias

    @property
    def norm(self) -> float:
        """Euclidean norm of the augmented parameter vector (w, b)."""
        return float(np.sqrt(np.sum(self.weights ** 2) + self.bias ** 2))

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "log"
    link: str = "canonical"
    step: float = 0.5
    max_iter: int = 50000
    tol: float = 1e-8
    l2: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.step <= 0.0:
            raise ConfigError("step size must be > 0")
        if self.max_iter < 1:
            raise ConfigError("max iterations must be >= 1")
        if self.tol < 0.0 or self.l2 < 0.0:
            raise ConfigError("tolerance and l2 penalty must be >= 0")


@dataclass(frozen=True)
class TrainReport:
    converged: bool
    iterations: int
    final_loss: float
    final_grad_norm: float
    losses: tuple = field(repr=False, default=())

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_loss": self.final_loss,
            "final_grad_norm": self.final_grad_norm,
        }


def _composite_fns(loss: ProperLoss, link: Link):
    """Per-point loss and d/dv callables for a (loss, link) pair."""
    if link.kind == "canonical":
        def value(y, v):
            return composite_loss_unchecked(loss, y, v)

        def grad(y, v):
            return composite_grad_unchecked(loss, y, v)

        return value, grad

    def value(y, v):
        c = np.clip(link.inverse(np.asarray(v, dtype=float)), _CLIP, 1.0 - _CLIP)
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, partial_loss(loss, 1, c), partial_loss(loss, -1, c))

    def grad(y, v):
        v = np.asarray(v, dtype=float)
        c = np.clip(link.inverse(v), _CLIP, 1.0 - _CLIP)
        y = np.asarray(y, dtype=float)
        # d loss_y / dc = ((y+1)/2 - c) * cbr''(c), chained through the link
        # inverse derivative (central finite difference; links are smooth).
        dl_dc = ((y + 1.0) / 2.0 - c) * loss.cbr_second(c)
        h = 1e-6
        dinv = (link.inverse(v + h) - link.inverse(v - h)) / (2.0 * h)
        return dl_dc * dinv

    return value, grad


def _resolve(loss, link):
    loss = get_loss(loss) if isinstance(loss, str) else loss
    link = get_link(loss, link) if isinstance(link, str) else link
    return loss, link


def train_with_report(ds: LabeledDataset, cfg: TrainConfig) -> tuple[LinearModel, TrainReport]:
    """Gradient descent from zero with step-halving backoff.

    The recorded loss sequence is non-increasing while backoff succeeds; ten
    consecutive accepted increases (backoff exhausted) raise
    :class:`DivergenceError`.  Hitting max iterations reports
    ``converged=False`` (log loss on separable data has no finite minimiser).
    """
    loss, link = _resolve(cfg.loss, cfg.link)
    value_fn, grad_fn = _composite_fns(loss, link)
    X = np.hstack([ds.points, np.ones((ds.size, 1))])
    y = ds.labels.astype(float)
    wts = ds.weights
    w = np.zeros(X.shape[1])

    # Scores v = X @ w are carried across iterations; candidate probes during
    # step halving update them as v - step * (X @ grad), so each iteration
    # costs one gradient matvec plus one direction matvec regardless of how
    # many halvings run.
    def objective_at(v, wv):
        return float(wts @ value_fn(y, v)) + 0.5 * cfg.l2 * float(wv @ wv)

    v = X @ w
    current = objective_at(v, w)
    if not np.isfinite(current):
        raise DivergenceError("objective not finite at initialization")
    losses = [current]
    bad_streak = 0
    converged = False
    iterations = 0
    grad = np.zeros_like(w)
    for iterations in range(1, cfg.max_iter + 1):
        per = np.asarray(grad_fn(y, v), dtype=float)
        grad = X.T @ (wts * per) + cfg.l2 * w
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= cfg.tol:
            converged = True
            iterations -= 1
            break
        direction = X @ grad
        step = cfg.step
        for _ in range(MAX_HALVINGS):
            cand = w - step * grad
            v_cand = v - step * direction
            cand_loss = objective_at(v_cand, cand)
            if np.isfinite(cand_loss) and cand_loss <= current:
                break
            step *= 0.5
        else:
            cand = w - step * grad
            v_cand = v - step * direction
            cand_loss = objective_at(v_cand, cand)
        if not np.isfinite(cand_loss):
            raise DivergenceError("objective became non-finite during descent")
        if cand_loss > current:
            bad_streak += 1
            if bad_streak >= DIVERGENCE_PATIENCE:
                raise DivergenceError(
                    f"loss increased for {DIVERGENCE_PATIENCE} consecutive steps"
                )
        else:
            bad_streak = 0
        w = cand
        v = v_cand
        current = cand_loss
        losses.append(current)
    else:
        per = np.asarray(grad_fn(y, v), dtype=float)
        grad = X.T @ (wts * per) + cfg.l2 * w
    model = LinearModel(w[:-1], w[-1])
    report = TrainReport(
        converged=converged,
        iterations=iterations,
        final_loss=current,
        final_grad_norm=float(np.max(np.abs(grad))),
        losses=tuple(losses),
    )
    return model, report


def train(ds: LabeledDataset, cfg: TrainConfig) -> LinearModel:
    model, _ = train_with_report(ds, cfg)
    return model


def expected_loss(model: LinearModel, loss, link, ds: LabeledDataset) -> float:
    """Weighted mean composite loss of the model's scores on the dataset."""
    loss, link = _resolve(loss, link)
    value_fn, _ = _composite_fns(loss, link)
    v = model.score(ds.points)
    return float(ds.weights @ value_fn(ds.labels.astype(float), v))


@dataclass(frozen=True)
class CrossEvalTable:
    """Expected losses for train/test dataset pairs (c=clean, a=adversarial)."""

    cc: float
    ca: float
    ac: float
    aa: float
    clean_model: LinearModel
    adv_model: LinearModel
    clean_report: TrainReport
    adv_report: TrainReport

    def to_dict(self) -> dict:
        return {"cc": self.cc, "ca": self.ca, "ac": self.ac, "aa": self.aa}


def cross_eval(clean: LabeledDataset, adv: LabeledDataset, cfg: TrainConfig) -> CrossEvalTable:
    """Train on each of {clean, adv}, evaluate on both; row = training set."""
    if clean.size != adv.size or not np.array_equal(clean.labels, adv.labels):
        raise DomainError("adversarial dataset must mirror the clean labels")
    loss, link = _resolve(cfg.loss, cfg.link)
    model_c, report_c = train_with_report(clean, cfg)
    model_a, report_a = train_with_report(adv, cfg)
    return CrossEvalTable(
        cc=expected_loss(model_c, loss, link, clean),
        ca=expected_loss(model_c, loss, link, adv),
        ac=expected_loss(model_a, loss, link, clean),
        aa=expected_loss(model_a, loss, link, adv),
        clean_model=model_c,
        adv_model=model_a,
        clean_report=report_c,
        adv_report=report_a,
    )


class ProperLossClassifier(BaseEstimator, ClassifierMixin):
    """Estimator facade over :func:`train` with the usual fit/predict shape.

    Labels are mapped to {-1, +1} in sorted order; ``predict_proba`` returns
    the link-inverted class-probability estimates.
    """

    def __init__(self, loss: str = "log", link: str = "canonical",
                 step: float = 0.5, max_iter: int = 50000, tol: float = 1e-8,
                 l2: float = 0.0):
        self.loss = loss
        self.link = link
        self.step = step
        self.max_iter = max_iter
        self.tol = tol
        self.l2 = l2

    def _config(self) -> TrainConfig:
        return TrainConfig(loss=self.loss, link=self.link, step=self.step,
                           max_iter=self.max_iter, tol=self.tol, l2=self.l2)

    def fit(self, X, y, sample_weight=None):
        X = check_array(X, dtype=float)
        y = np.asarray(y)
        classes = np.unique(y)
        if classes.shape[0] != 2:
            raise DomainError("exactly two classes are required")
        self.classes_ = classes
        labels = np.where(y == classes[1], 1, -1)
        ds = LabeledDataset(X, labels, weights=sample_weight)
        model, report = train_with_report(ds, self._config())
        self.model_ = model
        self.train_report_ = report
        self.coef_ = model.weights.reshape(1, -1)
        self.intercept_ = np.array([model.bias])
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        return self.model_.score(X)

    def predict_proba(self, X) -> np.ndarray:
        loss, link = _resolve(self.loss, self.link)
        v = self.decision_function(X)
        lo, hi = link.score_lo, link.score_hi
        v = np.clip(v, lo + 1e-15 if np.isfinite(lo) else lo,
                    hi - 1e-15 if np.isfinite(hi) else hi)
        pos = np.clip(link.inverse(v), 0.0, 1.0)
        return np.column_stack([1.0 - pos, pos])

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[(proba[:, 1] >= 0.5).astype(int)]

    def expected_loss(self, X, y, sample_weight=None) -> float:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        labels = np.where(np.asarray(y) == self.classes_[1], 1, -1)
        ds = LabeledDataset(X, labels, weights=sample_weight)
        loss, link = _resolve(self.loss, self.link)
        return expected_loss(self.model_, loss, link, ds)


def model_to_dict(model: LinearModel, cfg: TrainConfig, report: TrainReport) -> dict:
    """The model JSON payload: parameters plus training provenance."""
    return {
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "loss": cfg.loss,
        "link": cfg.link,
        "train_report": report.to_dict(),
    }


def model_from_dict(payload: Mapping) -> LinearModel:
    try:
        return LinearModel(payload["weights"], payload["bias"])
    except KeyError as exc:
        raise ConfigError(f"model payload missing field {exc}") from exc
