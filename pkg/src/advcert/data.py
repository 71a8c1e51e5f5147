"""Datasets, empirical class marginals, and density discretization.

The universal carrier for expectations and optimal transport is the
:class:`EmpiricalMarginal`: a finite weighted support.  Labeled data uses
labels in {-1, +1} and optional example weights that sum to one.

File formats:

* dataset CSV: header ``x0,...,x{d-1},y[,w]``, ``y`` in {-1, 1}; the optional
  weight column is renormalized on load;
* marginal CSV: header ``x0,...,x{d-1},mass``;
* marginal JSON: object with ``support`` (list of vectors) and ``mass``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "LabeledDataset",
    "EmpiricalMarginal",
    "Prior",
    "split_marginals",
    "dataset_from_marginals",
    "discretize_density",
    "unconditional_mean",
    "load_dataset_csv",
    "save_dataset_csv",
    "load_marginal",
    "save_marginal_json",
    "save_marginal_csv",
]

MASS_TOL = 1e-12


def _check_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise ValidationError("points must form a non-empty 2-d array")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("points must be finite")
    return pts


@dataclass(frozen=True, eq=False)
class EmpiricalMarginal:
    """A weighted finite support; mass is non-negative and sums to one.

    Duplicate support points are merged (mass summed) and the support is
    stored in lexicographic order, so equal distributions have equal arrays.
    """

    support: np.ndarray
    mass: np.ndarray

    def __init__(self, support, mass=None):
        pts = _check_points(support)
        if mass is None:
            m = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            m = np.asarray(mass, dtype=float)
        if m.shape != (pts.shape[0],):
            raise ValidationError("mass length must match the support")
        if np.any(m < 0.0) or not np.all(np.isfinite(m)):
            raise ValidationError("mass must be non-negative and finite")
        total = float(m.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"mass must sum to 1, got {total!r}")
        m = m / total
        pts, m = _merge_duplicates(pts, m)
        pts.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "support", pts)
        object.__setattr__(self, "mass", m)

    @property
    def dim(self) -> int:
        return int(self.support.shape[1])

    @property
    def size(self) -> int:
        return int(self.support.shape[0])

    @property
    def mean(self) -> np.ndarray:
        return self.mass @ self.support

    def expect(self, values) -> float:
        """Expectation of per-support-point values under the mass."""
        vals = np.asarray(values, dtype=float)
        if vals.shape != (self.size,):
            raise ValidationError("values must align with the support")
        return float(self.mass @ vals)


def _merge_duplicates(pts: np.ndarray, mass: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort(pts.T[::-1])
    pts_sorted = pts[order]
    mass_sorted = mass[order]
    keep = np.ones(pts_sorted.shape[0], dtype=bool)
    keep[1:] = np.any(pts_sorted[1:] != pts_sorted[:-1], axis=1)
    idx = np.cumsum(keep) - 1
    merged = np.zeros(int(idx[-1]) + 1)
    np.add.at(merged, idx, mass_sorted)
    return np.ascontiguousarray(pts_sorted[keep]), merged


@dataclass(frozen=True)
class Prior:
    """The positive base rate; must be strictly inside (0, 1)."""

    pi: float

    def __post_init__(self):
        if not (0.0 < self.pi < 1.0) or not np.isfinite(self.pi):
            raise ValidationError(f"prior must lie in (0, 1), got {self.pi!r}")


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Points with labels in {-1, +1} and weights summing to one."""

    points: np.ndarray
    labels: np.ndarray
    weights: np.ndarray

    def __init__(self, points, labels, weights=None):
        pts = _check_points(points)
        lab = np.asarray(labels)
        if lab.shape != (pts.shape[0],):
            raise ValidationError("labels length must match points")
        if not np.all(np.isin(lab, (-1, 1))):
            raise ValidationError("labels must be -1 or +1")
        lab = lab.astype(int)
        if weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (pts.shape[0],):
                raise ValidationError("weights length must match points")
            if np.any(w < 0.0) or not np.all(np.isfinite(w)):
                raise ValidationError("weights must be non-negative and finite")
            total = float(w.sum())
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(f"weights must sum to 1, got {total!r}")
            w = w / total
        if not np.any(lab == 1) or not np.any(lab == -1):
            raise ValidationError("dataset needs at least one point of each label")
        for arr in (pts, lab, w):
            arr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def with_points(self, points) -> "LabeledDataset":
        """Same labels and weights over a transformed point set."""
        return LabeledDataset(points, self.labels, self.weights)


def split_marginals(ds: LabeledDataset) -> tuple[EmpiricalMarginal, EmpiricalMarginal, Prior]:
    """Class marginals P (label +1) and N (label -1), and the prior pi."""
    pos = ds.labels == 1
    neg = ~pos
    w_pos = float(ds.weights[pos].sum())
    w_neg = float(ds.weights[neg].sum())
    if w_pos <= 0.0 or w_neg <= 0.0:
        raise ValidationError("each class must carry positive weight")
    P = EmpiricalMarginal(ds.points[pos], ds.weights[pos] / w_pos)
    N = EmpiricalMarginal(ds.points[neg], ds.weights[neg] / w_neg)
    return P, N, Prior(w_pos)


def as_prior(pi) -> Prior:
    """Coerce a float or Prior into a Prior."""
    return pi if isinstance(pi, Prior) else Prior(float(pi))


def dataset_from_marginals(P: EmpiricalMarginal, N: EmpiricalMarginal,
                           pi: Prior) -> LabeledDataset:
    """Recombine class marginals into a weighted dataset (inverse of split)."""
    pi = as_prior(pi)
    if P.dim != N.dim:
        raise ValidationError("marginal dimensions differ")
    points = np.vstack([P.support, N.support])
    labels = np.concatenate([np.ones(P.size, dtype=int), -np.ones(N.size, dtype=int)])
    weights = np.concatenate([pi.pi * P.mass, (1.0 - pi.pi) * N.mass])
    return LabeledDataset(points, labels, weights)


def discretize_density(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                       bins: int) -> EmpiricalMarginal:
    """Discretize a 1-d density onto bin midpoints, mass proportional to f."""
    if bins < 2:
        raise DomainError("discretize_density: bins must be >= 2")
    if not hi > lo:
        raise DomainError("discretize_density: need hi > lo")
    edges = np.linspace(lo, hi, bins + 1)
    mids = (edges[:-1] + edges[1:]) / 2.0
    vals = np.asarray(f(mids), dtype=float)
    if vals.shape != mids.shape:
        vals = np.array([float(f(m)) for m in mids])
    if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
        raise DomainError("discretize_density: f must be finite and non-negative")
    total = float(vals.sum())
    if total <= 0.0:
        raise DomainError("discretize_density: f vanishes on the whole grid")
    return EmpiricalMarginal(mids.reshape(-1, 1), vals / total)


def unconditional_mean(P: EmpiricalMarginal, N: EmpiricalMarginal, pi: Prior) -> np.ndarray:
    """Mean of the class mixture: pi*mean(P) + (1-pi)*mean(N)."""
    pi = as_prior(pi)
    if P.dim != N.dim:
        raise ValidationError("marginal dimensions differ")
    return pi.pi * P.mean + (1.0 - pi.pi) * N.mean


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def load_dataset_csv(path) -> LabeledDataset:
    """Read a dataset CSV with header ``x0,...,x{d-1},y[,w]``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty file")
        header = [h.strip() for h in header]
        has_w = header[-1] == "w"
        feat_cols = header[:-2] if has_w else header[:-1]
        y_col = header[-2] if has_w else header[-1]
        expected = [f"x{i}" for i in range(len(feat_cols))]
        if feat_cols != expected or y_col != "y":
            raise ValidationError(
                f"{path}: header must be x0,...,x{{d-1}},y[,w], got {header}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    table = np.asarray([[float(cell) for cell in row] for row in rows])
    d = len(feat_cols)
    points = table[:, :d]
    labels = table[:, d].astype(int)
    if np.any(table[:, d] != labels):
        raise ValidationError(f"{path}: y column must be integral -1/+1")
    if has_w:
        w = table[:, d + 1]
        total = float(w.sum())
        if total <= 0:
            raise ValidationError(f"{path}: weights sum to zero")
        return LabeledDataset(points, labels, w / total)
    return LabeledDataset(points, labels)


def save_dataset_csv(ds: LabeledDataset, path, include_weights: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x{i}" for i in range(ds.dim)] + ["y"]
        if include_weights:
            header.append("w")
        writer.writerow(header)
        for k in range(ds.size):
            row = [_fmt(x) for x in ds.points[k]] + [str(int(ds.labels[k]))]
            if include_weights:
                row.append(_fmt(ds.weights[k]))
            writer.writerow(row)


def save_marginal_json(m: EmpiricalMarginal, path) -> None:
    payload = {"support": m.support.tolist(), "mass": m.mass.tolist()}
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def save_marginal_csv(m: EmpiricalMarginal, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(m.dim)] + ["mass"])
        for k in range(m.size):
            writer.writerow([_fmt(x) for x in m.support[k]] + [_fmt(m.mass[k])])


def load_marginal(path) -> EmpiricalMarginal:
    """Read a marginal from JSON ({support, mass}) or CSV (x0,...,mass)."""
    text_path = str(path)
    if text_path.endswith(".json"):
        with open(path) as fh:
            payload = json.load(fh)
        if not isinstance(payload, dict) or "support" not in payload or "mass" not in payload:
            raise ValidationError(f"{path}: marginal JSON needs support and mass")
        return EmpiricalMarginal(payload["support"], payload["mass"])
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty file")
        header = [h.strip() for h in header]
        expected = [f"x{i}" for i in range(len(header) - 1)] + ["mass"]
        if header != expected:
            raise ValidationError(f"{path}: header must be x0,...,x{{d-1}},mass")
        rows = [[float(cell) for cell in row] for row in reader if row]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    table = np.asarray(rows)
    return EmpiricalMarginal(table[:, :-1], table[:, -1])
