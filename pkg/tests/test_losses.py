from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advcert import (
    DomainError,
    ValidationError,
    blunt_loss,
    canonical_link,
    cbr_value,
    composite_loss,
    delta_ell_pi,
    fenchel_identity_check,
    g_map,
    get_link,
    get_loss,
    partial_loss,
    properness_check,
    registered_losses,
    tabulated_loss,
    validate_loss,
)
from advcert.losses import (
    composite_grad_unchecked,
    composite_loss_unchecked,
    is_symmetric,
    shared_endpoint_value,
)

GRID_97 = np.linspace(0.01, 0.99, 97)


def test_registered_losses_list():
    assert registered_losses() == ["log", "matsushita", "square"]


def test_unknown_loss_raises():
    with pytest.raises(DomainError):
        get_loss("hinge")


def test_savage_reconstruction_log():
    loss = get_loss("log")
    l1 = np.asarray(partial_loss(loss, 1, GRID_97))
    lm1 = np.asarray(partial_loss(loss, -1, GRID_97))
    assert np.max(np.abs(l1 - (-np.log(GRID_97)))) <= 1e-9
    assert np.max(np.abs(lm1 - (-np.log(1.0 - GRID_97)))) <= 1e-9


def test_savage_reconstruction_square():
    loss = get_loss("square")
    l1 = np.asarray(partial_loss(loss, 1, GRID_97))
    lm1 = np.asarray(partial_loss(loss, -1, GRID_97))
    assert np.max(np.abs(l1 - (1.0 - GRID_97) ** 2)) <= 1e-9
    assert np.max(np.abs(lm1 - GRID_97 ** 2)) <= 1e-9


def test_savage_reconstruction_matsushita():
    # cbr = sqrt(c(1-c)) gives l_1 = sqrt((1-c)/c)/2 and l_-1 = sqrt(c/(1-c))/2.
    loss = get_loss("matsushita")
    l1 = np.asarray(partial_loss(loss, 1, GRID_97))
    lm1 = np.asarray(partial_loss(loss, -1, GRID_97))
    assert np.max(np.abs(l1 - 0.5 * np.sqrt((1.0 - GRID_97) / GRID_97))) <= 1e-9
    assert np.max(np.abs(lm1 - 0.5 * np.sqrt(GRID_97 / (1.0 - GRID_97)))) <= 1e-9


@pytest.mark.parametrize("name", ["log", "matsushita"])
def test_canonical_roundtrip_identity_unbounded(name):
    loss = get_loss(name)
    link = canonical_link(loss)
    v = np.linspace(-20.0, 20.0, 401)
    assert np.max(np.abs(np.asarray(g_map(loss, link, v)) - v)) <= 1e-12


def test_canonical_roundtrip_identity_square():
    loss = get_loss("square")
    link = canonical_link(loss)
    v = np.linspace(-1.0, 1.0, 201)
    assert np.max(np.abs(np.asarray(g_map(loss, link, v)) - v)) <= 1e-12


@pytest.mark.parametrize("name", ["log", "square", "matsushita"])
def test_fenchel_young_floor_on_grid(name):
    loss = get_loss(name)
    pis = np.linspace(0.02, 0.98, 49)
    l1 = np.asarray(partial_loss(loss, 1, GRID_97))
    lm1 = np.asarray(partial_loss(loss, -1, GRID_97))
    for pi in pis:
        expected = pi * l1 + (1.0 - pi) * lm1
        assert expected.min() >= float(cbr_value(loss, pi)) - 1e-9


@pytest.mark.parametrize("name", ["log", "square", "matsushita"])
def test_fenchel_identity_check(name):
    loss = get_loss(name)
    scores = [-0.9, -0.25, 0.0, 0.4, 0.9]
    for v in scores:
        assert fenchel_identity_check(loss, 1, v, 1e-9)
        assert fenchel_identity_check(loss, -1, v, 1e-9)


def test_symmetric_losses_share_endpoint():
    losses = [get_loss(n) for n in ("log", "square", "matsushita")]
    for loss in losses:
        assert abs(loss.cbr_at_0 - loss.cbr_at_1) <= 1e-12
        assert is_symmetric(loss)
    assert shared_endpoint_value(losses) == 0.0


def test_blunt_values():
    assert abs(blunt_loss(get_loss("log")) - math.log(2.0)) <= 1e-12
    assert abs(blunt_loss(get_loss("square")) - 0.25) <= 1e-12
    assert abs(blunt_loss(get_loss("matsushita")) - 0.5) <= 1e-12


def test_delta_ell_pi_registered_vanishes():
    for name in registered_losses():
        loss = get_loss(name)
        for pi in (0.0, 0.3, 0.5, 1.0):
            assert delta_ell_pi(loss, pi) == 0.0
    with pytest.raises(DomainError):
        delta_ell_pi(get_loss("log"), 1.5)


@pytest.mark.parametrize("name", ["log", "square", "matsushita"])
def test_properness_check_passes(name):
    report = properness_check(get_loss(name), 97)
    assert report.passed, report.violations


@pytest.mark.parametrize("name", ["log", "square", "matsushita"])
def test_validate_loss_passes(name):
    validate_loss(get_loss(name))


def test_square_endpoint_partials():
    loss = get_loss("square")
    assert partial_loss(loss, 1, 0.0) == 1.0
    assert partial_loss(loss, 1, 1.0) == 0.0
    assert partial_loss(loss, -1, 0.0) == 0.0
    assert partial_loss(loss, -1, 1.0) == 1.0


@pytest.mark.parametrize("name", ["log", "matsushita"])
def test_endpoint_rejection_without_finite_limits(name):
    with pytest.raises(DomainError):
        partial_loss(get_loss(name), 1, 0.0)


def test_partial_loss_domain_errors():
    loss = get_loss("log")
    with pytest.raises(DomainError):
        partial_loss(loss, 0, 0.5)
    with pytest.raises(DomainError):
        partial_loss(loss, 1, 1.5)
    with pytest.raises(DomainError):
        partial_loss(loss, 1, np.nan)


def test_square_score_interval_rejected_not_clamped():
    loss = get_loss("square")
    link = canonical_link(loss)
    with pytest.raises(DomainError):
        composite_loss(loss, link, 1, 1.5)
    # The unchecked extension accepts the same score and stays finite.
    extended = composite_loss_unchecked(loss, 1, 1.5)
    assert np.isfinite(extended)
    # Inside the interval both routes coincide.
    inside = np.linspace(-1.0, 1.0, 41)
    checked = np.asarray(composite_loss(loss, link, 1, inside))
    unchecked = np.asarray(composite_loss_unchecked(loss, 1, inside))
    assert np.max(np.abs(checked - unchecked)) <= 1e-12


@pytest.mark.parametrize("name", ["log", "matsushita"])
def test_stable_composite_matches_partial_route(name):
    # The registered closed form against the Savage-partials route.
    loss = get_loss(name)
    link = canonical_link(loss)
    v = np.linspace(-5.0, 5.0, 101)
    for y in (1, -1):
        stable = np.asarray(composite_loss_unchecked(loss, y, v))
        c = np.asarray(link.inverse(v), dtype=float)
        via_partials = np.asarray(partial_loss(loss, y, c))
        assert np.max(np.abs(stable - via_partials)) <= 1e-9


@pytest.mark.parametrize("name", ["log", "square", "matsushita"])
def test_composite_gradient_matches_finite_differences(name):
    loss = get_loss(name)
    rng = np.random.default_rng(5)
    v = rng.uniform(-3.0, 3.0, size=40)
    h = 1e-6
    for y in (1, -1):
        grad = np.asarray(composite_grad_unchecked(loss, y, v))
        fd = (np.asarray(composite_loss_unchecked(loss, y, v + h))
              - np.asarray(composite_loss_unchecked(loss, y, v - h))) / (2.0 * h)
        denom = np.maximum(np.abs(fd), 1.0)
        assert np.max(np.abs(grad - fd) / denom) <= 1e-5


def test_composite_accepts_label_arrays():
    loss = get_loss("log")
    y = np.array([1, -1, 1])
    v = np.array([0.5, -0.2, 1.0])
    vals = np.asarray(composite_loss_unchecked(loss, y, v))
    expected = [composite_loss_unchecked(loss, int(yi), float(vi))
                for yi, vi in zip(y, v)]
    assert np.allclose(vals, expected, atol=1e-15)
    with pytest.raises(DomainError):
        composite_loss_unchecked(loss, np.array([1, 0, 1]), v)


def test_log_canonical_link_is_logit():
    loss = get_loss("log")
    logit = get_link(loss, "logit")
    v = np.linspace(-8.0, 8.0, 81)
    assert np.max(np.abs(np.asarray(g_map(loss, logit, v)) - v)) <= 1e-9


def test_get_link_unknown_kind():
    with pytest.raises(DomainError):
        get_link(get_loss("log"), "probit")


def test_link_validate_catches_non_monotone():
    from advcert.losses import Link

    bad = Link(kind="custom", forward=lambda c: -np.asarray(c),
               inverse=lambda v: -np.asarray(v))
    with pytest.raises(ValidationError):
        bad.validate()


def test_tabulated_loss_reconstructs_curve():
    # Dense enough that the monotone-cubic derivative matches the tabulated
    # one at validation tolerance near the apex.
    grid = np.linspace(0.0, 1.0, 4001)
    cbr = 0.25 + grid * (1.0 - grid)
    prime = 1.0 - 2.0 * grid
    loss = tabulated_loss("shifted_square", grid, cbr, prime)
    assert loss.cbr_at_0 == 0.25
    assert loss.cbr_at_1 == 0.25
    probe = np.linspace(0.05, 0.95, 19)
    assert np.max(np.abs(loss.cbr(probe) - (0.25 + probe * (1.0 - probe)))) <= 1e-6
    assert abs(delta_ell_pi(loss, 0.3) - 0.25) <= 1e-15
    assert properness_check(loss, 61).passed


def test_tabulated_loss_validation():
    grid = np.linspace(0.0, 1.0, 11)
    cbr = grid * (1.0 - grid)
    prime = 1.0 - 2.0 * grid
    with pytest.raises(ValidationError):
        tabulated_loss("bad", grid[::-1], cbr, prime)
    with pytest.raises(ValidationError):
        tabulated_loss("bad", grid[1:], cbr[1:], prime[1:])  # misses pi=0
    with pytest.raises(ValidationError):
        tabulated_loss("bad", [0.0, 0.5, 1.0], [0.0, 0.25, 0.0], [1.0, 0.0, -1.0])


def test_asymmetric_endpoints_rejected_by_shared_value():
    grid = np.linspace(0.0, 1.0, 4001)
    cbr = 0.25 + grid * (1.0 - grid) + 0.1 * grid
    prime = 1.1 - 2.0 * grid
    asym = tabulated_loss("tilted_square", grid, cbr, prime)
    assert not is_symmetric(asym)
    with pytest.raises(DomainError):
        shared_endpoint_value([get_loss("log"), asym])


@given(
    pi=st.floats(min_value=0.02, max_value=0.98),
    c=st.floats(min_value=0.02, max_value=0.98),
    name=st.sampled_from(["log", "square", "matsushita"]),
)
def test_properness_floor_property(pi, c, name):
    loss = get_loss(name)
    expected = pi * float(partial_loss(loss, 1, c)) \
        + (1.0 - pi) * float(partial_loss(loss, -1, c))
    assert expected >= float(cbr_value(loss, pi)) - 1e-9
