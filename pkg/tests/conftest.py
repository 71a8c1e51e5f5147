from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from advcert import EmpiricalMarginal, LabeledDataset

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def random_marginal(rng: np.random.Generator, size: int, dim: int,
                    scale: float = 1.0) -> EmpiricalMarginal:
    """A random weighted support with strictly positive, normalised mass."""
    pts = scale * rng.uniform(-1.0, 1.0, size=(size, dim))
    mass = rng.uniform(0.2, 1.0, size=size)
    return EmpiricalMarginal(pts, mass / mass.sum())


def random_dataset(rng: np.random.Generator, n_pos: int, n_neg: int, dim: int,
                   gap: float = 2.0) -> LabeledDataset:
    """Two Gaussian-ish clouds, label +1 around +gap/2 and -1 around -gap/2."""
    pos = rng.normal(+gap / 2.0, 0.5, size=(n_pos, dim))
    neg = rng.normal(-gap / 2.0, 0.5, size=(n_neg, dim))
    points = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
    return LabeledDataset(points, labels)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
