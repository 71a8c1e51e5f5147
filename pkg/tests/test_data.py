from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advcert import (
    EmpiricalMarginal,
    LabeledDataset,
    Prior,
    ValidationError,
    dataset_from_marginals,
    discretize_density,
    load_dataset_csv,
    load_marginal,
    save_dataset_csv,
    split_marginals,
    unconditional_mean,
)
from advcert.data import save_marginal_csv, save_marginal_json


def _weighted_multiset(points, labels, weights) -> dict:
    table: dict = {}
    for pt, y, w in zip(points, labels, weights):
        key = (tuple(float(v) for v in pt), int(y))
        table[key] = table.get(key, 0.0) + float(w)
    return table


def test_split_then_recombine_is_identity_as_multiset(rng):
    pts = rng.integers(-2, 3, size=(12, 2)).astype(float)  # forces duplicates
    labels = np.array([1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1, 1])
    w = rng.uniform(0.5, 1.5, size=12)
    ds = LabeledDataset(pts, labels, w / w.sum())
    P, N, prior = split_marginals(ds)
    back = dataset_from_marginals(P, N, prior)
    orig = _weighted_multiset(ds.points, ds.labels, ds.weights)
    round_trip = _weighted_multiset(back.points, back.labels, back.weights)
    assert set(orig) == set(round_trip)
    for key in orig:
        assert abs(orig[key] - round_trip[key]) <= 1e-12


def test_split_marginals_prior_is_positive_weight():
    ds = LabeledDataset([[0.0], [1.0], [2.0], [3.0]], [1, 1, 1, -1])
    P, N, prior = split_marginals(ds)
    assert abs(prior.pi - 0.75) <= 1e-15
    assert P.size == 3 and N.size == 1


def test_discretize_density_scale_invariant():
    f = lambda x: np.exp(-(x - 0.3) ** 2)
    a = discretize_density(f, 0.0, 1.0, 64)
    b = discretize_density(lambda x: 17.5 * f(x), 0.0, 1.0, 64)
    assert np.array_equal(a.support, b.support)
    assert np.max(np.abs(a.mass - b.mass)) <= 1e-12
    assert abs(float(a.mass.sum()) - 1.0) <= 1e-12


def test_discretize_density_midpoints_and_errors():
    m = discretize_density(lambda x: np.ones_like(x), 0.0, 1.0, 4)
    assert np.allclose(m.support[:, 0], [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(Exception):
        discretize_density(lambda x: np.ones_like(x), 1.0, 0.0, 4)
    with pytest.raises(Exception):
        discretize_density(lambda x: -np.ones_like(x), 0.0, 1.0, 4)
    with pytest.raises(Exception):
        discretize_density(lambda x: np.zeros_like(x), 0.0, 1.0, 4)


def test_duplicate_support_points_merge_with_summed_mass():
    m = EmpiricalMarginal([[1.0], [0.0], [1.0]], [0.25, 0.5, 0.25])
    assert m.size == 2
    assert np.array_equal(m.support, [[0.0], [1.0]])  # lexicographic order
    assert np.allclose(m.mass, [0.5, 0.5], atol=1e-15)


def test_marginal_validation():
    with pytest.raises(ValidationError):
        EmpiricalMarginal([[0.0], [1.0]], [0.7, -0.3])
    with pytest.raises(ValidationError):
        EmpiricalMarginal([[0.0], [1.0]], [0.7, 0.7])
    with pytest.raises(ValidationError):
        EmpiricalMarginal([[np.nan], [1.0]], [0.5, 0.5])
    with pytest.raises(ValidationError):
        EmpiricalMarginal([[0.0], [1.0]], [0.5, 0.25, 0.25])


def test_marginal_defaults_and_expect():
    m = EmpiricalMarginal([[0.0], [2.0]])
    assert np.allclose(m.mass, [0.5, 0.5])
    assert m.dim == 1 and m.size == 2
    assert abs(m.expect([1.0, 3.0]) - 2.0) <= 1e-15
    assert np.allclose(m.mean, [1.0])
    with pytest.raises(ValidationError):
        m.expect([1.0])


def test_prior_bounds():
    with pytest.raises(ValidationError):
        Prior(0.0)
    with pytest.raises(ValidationError):
        Prior(1.0)
    assert Prior(0.4).pi == 0.4


def test_dataset_validation():
    with pytest.raises(ValidationError):
        LabeledDataset([[0.0], [1.0]], [1, 2])
    with pytest.raises(ValidationError):
        LabeledDataset([[0.0], [1.0]], [1, 1])  # one class missing
    with pytest.raises(ValidationError):
        LabeledDataset([[0.0], [1.0]], [1, -1], [0.9, 0.9])
    with pytest.raises(ValidationError):
        LabeledDataset([[0.0], [1.0]], [1, -1], [1.2, -0.2])


def test_unconditional_mean_accepts_float_or_prior():
    P = EmpiricalMarginal([[0.0]], [1.0])
    N = EmpiricalMarginal([[1.0]], [1.0])
    assert np.allclose(unconditional_mean(P, N, 0.25), [0.75])
    assert np.allclose(unconditional_mean(P, N, Prior(0.25)), [0.75])


def test_dataset_csv_round_trip(tmp_path, rng):
    pts = rng.normal(size=(7, 3))
    labels = np.array([1, -1, 1, -1, 1, -1, 1])
    w = rng.uniform(0.1, 1.0, size=7)
    ds = LabeledDataset(pts, labels, w / w.sum())
    path = tmp_path / "ds.csv"
    save_dataset_csv(ds, path)
    back = load_dataset_csv(path)
    assert np.array_equal(back.points, ds.points)
    assert np.array_equal(back.labels, ds.labels)
    assert np.max(np.abs(back.weights - ds.weights)) <= 1e-15
    header = path.read_text().splitlines()[0]
    assert header == "x0,x1,x2,y,w"


def test_dataset_csv_without_weights(tmp_path):
    ds = LabeledDataset([[0.0], [1.0]], [1, -1])
    path = tmp_path / "plain.csv"
    save_dataset_csv(ds, path, include_weights=False)
    assert path.read_text().splitlines()[0] == "x0,y"
    back = load_dataset_csv(path)
    assert np.allclose(back.weights, [0.5, 0.5])


def test_dataset_csv_header_and_label_validation(tmp_path):
    bad_header = tmp_path / "bad1.csv"
    bad_header.write_text("a,b\n0.0,1\n")
    with pytest.raises(ValidationError):
        load_dataset_csv(bad_header)
    bad_label = tmp_path / "bad2.csv"
    bad_label.write_text("x0,y\n0.0,0.5\n")
    with pytest.raises(ValidationError):
        load_dataset_csv(bad_label)
    empty = tmp_path / "bad3.csv"
    empty.write_text("x0,y\n")
    with pytest.raises(ValidationError):
        load_dataset_csv(empty)


def test_marginal_json_and_csv_round_trip(tmp_path, rng):
    m = EmpiricalMarginal(rng.normal(size=(5, 2)), np.full(5, 0.2))
    jpath = tmp_path / "m.json"
    cpath = tmp_path / "m.csv"
    save_marginal_json(m, jpath)
    save_marginal_csv(m, cpath)
    for back in (load_marginal(jpath), load_marginal(cpath)):
        assert np.array_equal(back.support, m.support)
        assert np.max(np.abs(back.mass - m.mass)) <= 1e-15
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,weight\n0.0,1.0\n")
    with pytest.raises(ValidationError):
        load_marginal(bad)


@given(scale=st.floats(min_value=1e-3, max_value=1e3))
def test_discretize_density_scale_invariance_property(scale):
    f = lambda x: 1.0 + np.sin(3.0 * x) ** 2
    a = discretize_density(f, 0.0, 2.0, 32)
    b = discretize_density(lambda x: scale * f(x), 0.0, 2.0, 32)
    assert np.max(np.abs(a.mass - b.mass)) <= 1e-12
