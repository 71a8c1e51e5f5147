from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advcert import (
    DefeatCertificate,
    DomainError,
    EmpiricalMarginal,
    FiniteSampleClass,
    IdentityAdversary,
    LinearBall,
    LinearKernel,
    MixupToPoint,
    RbfKernel,
    RKHSUnitBall,
    ValidationError,
    beta,
    beta_rkhs,
    blunt_loss,
    canonical_link,
    cbr_value,
    defeat_certificate,
    delta_ell_pi,
    gamma_finite,
    get_link,
    get_loss,
    hardness_bound,
    ipm,
    joint_defeat_certificate,
    phi_functional,
    sampled_ball_gamma,
    tabulated_loss,
    weighted_mmd,
    witness_gamma,
)
from advcert.distortion import ipm_cross_check, marginal_digest, rkhs_witness

from conftest import random_marginal


def _shifted_square_loss():
    # cbr = 1/4 + c(1-c): nonzero endpoint risks, so delta_ell_pi = 1/4.
    # Dense table: the interpolant must pass derivative validation.
    grid = np.linspace(0.0, 1.0, 4001)
    return tabulated_loss("shifted_square", grid, 0.25 + grid * (1.0 - grid),
                          1.0 - 2.0 * grid)


def test_delta_identity_via_hard_labeler():
    # The {1 on P, 0 on N} labeler with the signed-risk map recovers the
    # endpoint offset exactly at zero offsets.
    loss = _shifted_square_loss()
    P = EmpiricalMarginal([[1.0], [2.0]], [0.4, 0.6])
    N = EmpiricalMarginal([[-1.0], [-2.0]], [0.5, 0.5])
    labeler = lambda pts: (np.asarray(pts)[:, 0] > 0).astype(float)
    g_star = lambda s: np.where(np.asarray(s) >= 0.5,
                                cbr_value(loss, np.asarray(s)),
                                -cbr_value(loss, np.asarray(s)))
    cls = FiniteSampleClass([labeler])
    for pi in (0.3, 0.5, 0.8):
        result = gamma_finite(cls, g_star, None, P, N, pi, 0.0, 0.0)
        assert abs(result.value - delta_ell_pi(loss, pi)) <= 1e-12


def test_weighted_mmd_hand_value_point_masses():
    P = EmpiricalMarginal([[0.0]], [1.0])
    N = EmpiricalMarginal([[1.0]], [1.0])
    kernel = LinearKernel(offset=1.0)
    # k(0,0)=1, k(0,1)=1, k(1,1)=2 so the radicand at pi=1/2 is 1/4.
    assert abs(weighted_mmd(kernel, None, P, N, 0.5) - 0.5) <= 1e-12
    assert abs(beta_rkhs(get_loss("log"), kernel, None, P, N, 0.5) - 0.5) <= 1e-12


def test_witness_gamma_reproduces_closed_form(rng):
    for trial in range(10):
        d = int(rng.integers(1, 4))
        P = random_marginal(rng, int(rng.integers(2, 7)), d)
        N = random_marginal(rng, int(rng.integers(2, 7)), d)
        pi = float(rng.uniform(0.2, 0.8))
        kernel = LinearKernel(offset=1.0) if trial % 2 else RbfKernel(bandwidth=0.8)
        a = MixupToPoint(lam=0.6, target=np.zeros(d)) if trial % 3 else None
        loss = get_loss(("log", "square", "matsushita")[trial % 3])
        closed = beta_rkhs(loss, kernel, a, P, N, pi)
        assert abs(witness_gamma(loss, kernel, a, P, N, pi) - closed) <= 1e-9


def test_sampled_ball_never_exceeds_closed_form(rng):
    for trial in range(6):
        P = random_marginal(rng, 5, 2)
        N = random_marginal(rng, 4, 2)
        pi = float(rng.uniform(0.2, 0.8))
        kernel = RbfKernel(bandwidth=1.0) if trial % 2 else LinearKernel(offset=1.0)
        loss = get_loss("log")
        closed = beta_rkhs(loss, kernel, None, P, N, pi)
        sampled = sampled_ball_gamma(kernel, None, P, N, pi,
                                     2.0 * loss.cbr_at_1, 2.0 * loss.cbr_at_0,
                                     n_samples=512, seed=trial)
        assert sampled <= closed + 1e-9


def test_witness_has_unit_norm_and_degenerate_case(rng):
    P = random_marginal(rng, 4, 2)
    N = random_marginal(rng, 5, 2)
    kernel = RbfKernel(bandwidth=0.7)
    h_star, norm = rkhs_witness(kernel, None, P, N, 0.4)
    assert norm > 0.0
    # Recompute the RKHS norm of the returned expansion directly.
    centers = np.vstack([P.support, N.support])
    coef = np.concatenate([0.4 * P.mass, -0.6 * N.mass]) / norm
    again = math.sqrt(float(coef @ kernel.gram(centers) @ coef))
    assert abs(again - 1.0) <= 1e-9
    # Coinciding weighted embeddings give the zero witness, and the two
    # routes still agree: the distortion reduces to the offset terms.
    loss = get_loss("square")
    zero_h, zero_norm = rkhs_witness(kernel, None, P, P, 0.5)
    assert zero_norm <= 1e-9
    assert np.allclose(zero_h(P.support), 0.0)
    assert abs(witness_gamma(loss, kernel, None, P, P, 0.5)
               - beta_rkhs(loss, kernel, None, P, P, 0.5)) <= 1e-12


def test_gamma_finite_breaks_ties_toward_lowest_index():
    P = EmpiricalMarginal([[1.0]], [1.0])
    N = EmpiricalMarginal([[-1.0]], [1.0])
    h = lambda pts: np.asarray(pts)[:, 0]
    result = gamma_finite(FiniteSampleClass([h, h, h]), lambda s: s,
                          None, P, N, 0.5, 0.0, 0.0)
    assert result.witness_index == 0


def test_finite_class_rejects_nonfinite_scorer():
    cls = FiniteSampleClass([lambda pts: np.full(len(pts), np.nan)])
    with pytest.raises(ValidationError):
        cls.evaluate(np.zeros((3, 1)))
    with pytest.raises(DomainError):
        FiniteSampleClass([])


def test_phi_functional_manual_value():
    Q = EmpiricalMarginal([[0.0], [1.0]], [0.25, 0.75])
    f = lambda pts: np.asarray(pts)[:, 0]
    # sum mass * u * (f + v) = 0.25*2*(0+1) + 0.75*2*(1+1)
    assert abs(phi_functional(Q, f, 2.0, 1.0) - 3.5) <= 1e-15
    with pytest.raises(ValidationError):
        phi_functional(Q, lambda pts: np.zeros(3), 1.0, 0.0)


def test_beta_dispatch_linear_ball_matches_scaled_mmd(rng):
    P = random_marginal(rng, 4, 2)
    N = random_marginal(rng, 3, 2)
    loss = get_loss("log")
    link = canonical_link(loss)
    wmmd = weighted_mmd(LinearKernel(offset=1.0), None, P, N, 0.5)
    for radius in (0.5, 1.0, 3.0):
        value = beta(loss, link, LinearBall(radius, 2), None, P, N, 0.5)
        assert abs(value - radius * wmmd) <= 1e-12
    with pytest.raises(ValidationError):
        beta(loss, link, LinearBall(1.0, 5), None, P, N, 0.5)


def test_beta_dispatch_rkhs_and_finite_agree_on_witness(rng):
    P = random_marginal(rng, 4, 2)
    N = random_marginal(rng, 4, 2)
    loss = get_loss("log")
    link = canonical_link(loss)
    kernel = RbfKernel(bandwidth=1.0)
    ball_value = beta(loss, link, RKHSUnitBall(kernel), None, P, N, 0.5)
    h_star, _ = rkhs_witness(kernel, None, P, N, 0.5)
    finite_value = beta(loss, link, FiniteSampleClass([h_star]), None, P, N, 0.5)
    assert abs(ball_value - finite_value) <= 1e-9


def test_ball_closed_forms_require_canonical_link(rng):
    P = random_marginal(rng, 3, 1)
    N = random_marginal(rng, 3, 1)
    loss = get_loss("log")
    logit = get_link(loss, "logit")
    with pytest.raises(DomainError):
        beta(loss, logit, RKHSUnitBall(LinearKernel()), None, P, N, 0.5)
    with pytest.raises(DomainError):
        beta(loss, logit, LinearBall(1.0, 1), None, P, N, 0.5)


def test_hardness_bound_clamps_at_zero():
    loss = get_loss("log")
    assert hardness_bound(loss, [10.0, 3.0]) == 0.0
    assert abs(hardness_bound(loss, [0.4, 0.2])
               - (math.log(2.0) - 0.1)) <= 1e-12
    with pytest.raises(DomainError):
        hardness_bound(loss, [])


def test_defeat_certificate_verdict_and_tamper_checks():
    loss = get_loss("log")
    link = canonical_link(loss)
    blunt = blunt_loss(loss)
    cert = defeat_certificate(loss, link, 0.05, 0.05, adversary_id="a1")
    assert cert.verdict is (0.05 <= 2.0 * 0.05 * blunt)
    assert abs(cert.bound - (blunt - 0.025)) <= 1e-12
    # Boundary is inclusive.
    boundary = defeat_certificate(loss, link, 2.0 * 0.05 * blunt, 0.05, "a2")
    assert boundary.verdict
    with pytest.raises(ValidationError):
        DefeatCertificate(loss="log", link="canonical", epsilon=0.05,
                          beta=10.0, blunt=blunt, bound=0.0, verdict=True,
                          adversary_id="x", method="m")
    with pytest.raises(ValidationError):
        DefeatCertificate(loss="log", link="canonical", epsilon=0.05,
                          beta=0.0, blunt=blunt, bound=0.123, verdict=True,
                          adversary_id="x", method="m")
    with pytest.raises(DomainError):
        defeat_certificate(loss, link, 0.0, 1.5, "x")


@given(
    beta_value=st.floats(min_value=0.0, max_value=2.0),
    eps=st.floats(min_value=0.0, max_value=1.0),
    eps_up=st.floats(min_value=0.0, max_value=1.0),
    name=st.sampled_from(["log", "square", "matsushita"]),
)
def test_verdict_monotone_in_epsilon(beta_value, eps, eps_up, name):
    lo, hi = sorted((eps, eps_up))
    loss = get_loss(name)
    link = canonical_link(loss)
    if defeat_certificate(loss, link, beta_value, lo, "a").verdict:
        assert defeat_certificate(loss, link, beta_value, hi, "a").verdict


def test_joint_certificate_registered_losses():
    losses = [get_loss(n) for n in ("log", "square", "matsushita")]
    report = joint_defeat_certificate(losses, 0.0, 0.0)
    assert report.verdict
    assert report.shared_endpoint == 0.0
    assert report.blunts == (math.log(2.0), 0.25, 0.5)
    # A positive distortion at epsilon 0 cannot certify joint defeat.
    assert not joint_defeat_certificate(losses, 0.01, 0.0).verdict
    with pytest.raises(DomainError):
        joint_defeat_certificate([], 0.0, 0.0)
    with pytest.raises(DomainError):
        joint_defeat_certificate(losses, 0.0, 2.0)


def test_joint_certificate_rejects_asymmetric_loss():
    grid = np.linspace(0.0, 1.0, 4001)
    asym = tabulated_loss("tilted_square", grid,
                          0.25 + grid * (1.0 - grid) + 0.1 * grid,
                          1.1 - 2.0 * grid)
    with pytest.raises(DomainError):
        joint_defeat_certificate([get_loss("log"), asym], 0.0, 0.0)


def test_ipm_rkhs_ball_closed_form():
    P = EmpiricalMarginal([[0.0]], [1.0])
    N = EmpiricalMarginal([[1.0]], [1.0])
    kernel = LinearKernel(offset=1.0)
    # Plain MMD of two point masses: sqrt(k00 - 2 k01 + k11) = 1.
    value = ipm(RKHSUnitBall(kernel), lambda s: s, None, P, N)
    assert abs(value - 1.0) <= 1e-12


def test_ipm_finite_class_symmetrises(rng):
    P = random_marginal(rng, 4, 1)
    N = random_marginal(rng, 5, 1)
    h = lambda pts: np.asarray(pts)[:, 0]
    value = ipm(FiniteSampleClass([h]), lambda s: s, None, P, N)
    manual = abs(float(P.mass @ P.support[:, 0]) - float(N.mass @ N.support[:, 0]))
    assert abs(value - manual) <= 1e-12


def test_ipm_negation_closure_is_verified(rng):
    P = random_marginal(rng, 3, 1)
    N = random_marginal(rng, 3, 1)
    h = lambda pts: np.asarray(pts)[:, 0] + 1.0
    flagged = FiniteSampleClass([h], closed_by_negation=True)
    with pytest.raises(ValidationError):
        ipm(flagged, lambda s: s, None, P, N)
    ok = FiniteSampleClass([h, lambda pts: -(np.asarray(pts)[:, 0] + 1.0)],
                           closed_by_negation=True)
    ipm(ok, lambda s: s, None, P, N)


def test_ipm_cross_check_premises(rng):
    P = random_marginal(rng, 4, 1)
    N = random_marginal(rng, 4, 1)
    loss = get_loss("log")
    link = canonical_link(loss)
    ball = RKHSUnitBall(LinearKernel(offset=1.0))
    held = ipm_cross_check(loss, link, ball, None, P, N, 0.5)
    assert held["premises_hold"]
    assert held["gap"] <= 1e-9
    skipped = ipm_cross_check(loss, link, ball, None, P, N, 0.3)
    assert not skipped["premises_hold"]
    assert skipped["flag"] == "premises_not_met"


def test_constant_adversary_zero_distortion_at_half(rng):
    # The radicand cancels only up to float noise with random masses, so the
    # observable floor is sqrt(eps)-sized rather than exactly zero.
    P = random_marginal(rng, 4, 2)
    N = random_marginal(rng, 5, 2)
    constant = MixupToPoint(lam=0.0, target=np.array([0.3, -0.2]))
    assert weighted_mmd(LinearKernel(offset=1.0), constant, P, N, 0.5) <= 1e-7
    for name in ("log", "square", "matsushita"):
        assert beta_rkhs(get_loss(name), LinearKernel(offset=1.0),
                         constant, P, N, 0.5) <= 1e-7


def test_identity_adversary_transform_is_noop(rng):
    P = random_marginal(rng, 4, 2)
    N = random_marginal(rng, 4, 2)
    kernel = RbfKernel(bandwidth=1.0)
    assert abs(weighted_mmd(kernel, IdentityAdversary(), P, N, 0.4)
               - weighted_mmd(kernel, None, P, N, 0.4)) <= 1e-15


def test_marginal_digest_stability(rng):
    pts = rng.normal(size=(4, 2))
    a = EmpiricalMarginal(pts, np.full(4, 0.25))
    b = EmpiricalMarginal(pts.copy(), np.full(4, 0.25))
    c = EmpiricalMarginal(pts, np.array([0.1, 0.2, 0.3, 0.4]))
    assert marginal_digest(a) == marginal_digest(b)
    assert marginal_digest(a) != marginal_digest(c)
