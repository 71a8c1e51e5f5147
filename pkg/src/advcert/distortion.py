"""Adversarial distortion, hardness bounds, and defeat certificates.

The central quantity is the distortion

    gamma(P, N, pi, b, c) = max_h [ phi(P, g o h o a, pi, b)
                                    - phi(N, g o h o a, 1-pi, -c) ],

with ``phi(Q, f, u, v) = sum_i mass_i * u * (f(x_i) + v)``.  Evaluated at the
offsets ``b = 2*cbr(1)``, ``c = 2*cbr(0)`` it yields ``beta_a``; a scorer
class minimising the proper loss under adversary ``a`` cannot beat
``(blunt - beta_a/2)_+``, and ``beta_a <= 2*eps*blunt`` certifies defeat.

For the RKHS unit ball under the canonical link the maximum is attained at
the normalised difference of adversarial mean embeddings, giving the closed
form ``beta = 2*delta_ell_pi + weighted_mmd`` computed purely through Gram
sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .data import EmpiricalMarginal
from .errors import DomainError, IndefiniteKernelError, ValidationError
from .kernels import Kernel, LinearKernel, check_psd
from .losses import (
    Link,
    ProperLoss,
    blunt_loss,
    delta_ell_pi,
    g_map,
    shared_endpoint_value,
)
from .util import json_ready, stable_digest

__all__ = [
    "FiniteSampleClass",
    "RKHSUnitBall",
    "LinearBall",
    "DefeatCertificate",
    "JointDefeatReport",
    "GammaResult",
    "phi_functional",
    "gamma_finite",
    "beta",
    "weighted_mmd",
    "beta_rkhs",
    "hardness_bound",
    "defeat_certificate",
    "ipm",
    "ipm_cross_check",
    "joint_defeat_certificate",
    "rkhs_witness",
    "witness_gamma",
    "sampled_ball_gamma",
    "marginal_digest",
]

RADICAND_CLAMP = -1e-10
WITNESS_NORM_FLOOR = 1e-15


def _pi_value(pi) -> float:
    val = float(getattr(pi, "pi", pi))
    if not (0.0 <= val <= 1.0):
        raise DomainError("pi must lie in [0, 1]")
    return val


def _transformed(a, m: EmpiricalMarginal) -> np.ndarray:
    return m.support if a is None else np.asarray(a.transform(m.support), dtype=float)


# ---------------------------------------------------------------------------
# Hypothesis classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSampleClass:
    """A finite set of scorers; members must be evaluable on any support."""

    scorers: tuple
    closed_by_negation: bool = False

    def __init__(self, scorers: Sequence, closed_by_negation: bool = False):
        scorers = tuple(scorers)
        if not scorers:
            raise DomainError("finite hypothesis class must be non-empty")
        object.__setattr__(self, "scorers", scorers)
        object.__setattr__(self, "closed_by_negation", bool(closed_by_negation))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Score matrix of shape (n_scorers, n_points)."""
        rows = [np.asarray(h(points), dtype=float).reshape(-1) for h in self.scorers]
        out = np.vstack(rows)
        if out.shape != (len(self.scorers), points.shape[0]):
            raise ValidationError("a scorer returned the wrong number of scores")
        if not np.all(np.isfinite(out)):
            raise ValidationError("a scorer returned non-finite values")
        return out


@dataclass(frozen=True)
class RKHSUnitBall:
    """The unit ball of the RKHS of a PSD kernel (closed by negation)."""

    kernel: Kernel
    closed_by_negation: bool = True


@dataclass(frozen=True)
class LinearBall:
    """Affine scorers h(x) = w.x + b with ||(w, b)|| <= radius.

    Identical to the radius-scaled RKHS ball of the offset-1 linear kernel,
    which is how its closed forms are computed.
    """

    radius: float
    dimension: int
    closed_by_negation: bool = True

    def __post_init__(self):
        if self.radius < 0.0:
            raise DomainError("linear ball radius must be >= 0")


# ---------------------------------------------------------------------------
# Distortion
# ---------------------------------------------------------------------------


def phi_functional(Q: EmpiricalMarginal, f: Callable, u: float, v: float) -> float:
    """The weighted shifted integral ``sum_i mass_i * u * (f(x_i) + v)``."""
    vals = np.asarray(f(Q.support), dtype=float).reshape(-1)
    if vals.shape != (Q.size,):
        raise ValidationError("f must return one score per support point")
    return float(np.sum(Q.mass * (u * (vals + v))))


class GammaResult(NamedTuple):
    value: float
    witness_index: int
    witness: Callable


def gamma_finite(cls: FiniteSampleClass, g: Callable, a, P: EmpiricalMarginal,
                 N: EmpiricalMarginal, pi, b: float, c: float) -> GammaResult:
    """Distortion over a finite class, with the arg-max witness.

    Ties break toward the lowest scorer index so the witness is
    deterministic.
    """
    pi = _pi_value(pi)
    tp = _transformed(a, P)
    tn = _transformed(a, N)
    hp = cls.evaluate(tp)
    hn = cls.evaluate(tn)
    gp = np.asarray(g(hp), dtype=float)
    gn = np.asarray(g(hn), dtype=float)
    per_h = pi * (gp @ P.mass + b) - (1.0 - pi) * (gn @ N.mass - c)
    best = int(np.argmax(per_h))
    return GammaResult(float(per_h[best]), best, cls.scorers[best])


def weighted_mmd(kernel: Kernel, a, P: EmpiricalMarginal, N: EmpiricalMarginal,
                 pi) -> float:
    """Norm of the weighted difference of adversarial mean embeddings.

    ``|| pi * mu_{a,P} - (1-pi) * mu_{a,N} ||`` via Gram sums; the kernel is
    PSD-probed on the pooled transformed support.  A slightly negative
    radicand (above -1e-10) clamps to zero; anything lower raises.
    """
    pi = _pi_value(pi)
    tp = _transformed(a, P)
    tn = _transformed(a, N)
    check_psd(kernel, np.vstack([tp, tn]))
    s_pp = float(P.mass @ kernel.gram(tp) @ P.mass)
    s_pn = float(P.mass @ kernel.gram(tp, tn) @ N.mass)
    s_nn = float(N.mass @ kernel.gram(tn) @ N.mass)
    radicand = pi * pi * s_pp - 2.0 * pi * (1.0 - pi) * s_pn + (1.0 - pi) ** 2 * s_nn
    if radicand < RADICAND_CLAMP:
        raise IndefiniteKernelError(
            f"weighted MMD radicand {radicand:g} below the clamp threshold"
        )
    return math.sqrt(max(radicand, 0.0))


def beta_rkhs(loss: ProperLoss, kernel: Kernel, a, P: EmpiricalMarginal,
              N: EmpiricalMarginal, pi) -> float:
    """Closed-form beta for the RKHS unit ball under the canonical link.

    ``beta = 2 * delta_ell_pi + weighted_mmd``: the distortion maximum over
    the unit ball is attained at the normalised mean-embedding difference
    (see :func:`rkhs_witness`), whose integral difference is exactly the
    weighted MMD, and the offsets contribute
    ``pi*2*cbr(1) + (1-pi)*2*cbr(0)``.
    """
    pi = _pi_value(pi)
    return 2.0 * float(delta_ell_pi(loss, pi)) + weighted_mmd(kernel, a, P, N, pi)


def beta(loss: ProperLoss, link: Link, cls, a, P: EmpiricalMarginal,
         N: EmpiricalMarginal, pi) -> float:
    """``beta_a``: the distortion at offsets ``(2*cbr(1), 2*cbr(0))``.

    Dispatches on the class kind: finite classes are enumerated, RKHS and
    linear balls use the closed form (canonical link required; sample the
    ball explicitly via :func:`sampled_ball_gamma` for other links).
    """
    pi = _pi_value(pi)
    b = 2.0 * loss.cbr_at_1
    c = 2.0 * loss.cbr_at_0
    if isinstance(cls, FiniteSampleClass):
        g = _make_g(loss, link)
        return gamma_finite(cls, g, a, P, N, pi, b, c).value
    if isinstance(cls, RKHSUnitBall):
        _require_canonical(link, "the RKHS closed form")
        return beta_rkhs(loss, cls.kernel, a, P, N, pi)
    if isinstance(cls, LinearBall):
        _require_canonical(link, "the linear-ball closed form")
        _check_dimension(cls, P, N)
        wmmd = weighted_mmd(LinearKernel(offset=1.0), a, P, N, pi)
        return 2.0 * float(delta_ell_pi(loss, pi)) + cls.radius * wmmd
    raise DomainError(f"unknown hypothesis class {type(cls).__name__}")


def _make_g(loss: ProperLoss, link: Link) -> Callable:
    def g(scores):
        return g_map(loss, link, scores)

    return g


def _require_canonical(link: Link, what: str) -> None:
    if link.kind != "canonical":
        raise DomainError(
            f"{what} requires the canonical link; sample the ball explicitly "
            "for other links"
        )


def _check_dimension(cls: LinearBall, P: EmpiricalMarginal, N: EmpiricalMarginal) -> None:
    if cls.dimension not in (P.dim, N.dim):
        raise ValidationError(
            f"linear ball dimension {cls.dimension} does not match data dim {P.dim}"
        )


def hardness_bound(loss: ProperLoss, betas: Sequence[float]) -> float:
    """The guaranteed floor ``(blunt - min(betas)/2)_+`` on the min-max loss."""
    betas = [float(x) for x in betas]
    if not betas:
        raise DomainError("hardness_bound needs at least one beta")
    return max(0.0, blunt_loss(loss) - min(betas) / 2.0)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DefeatCertificate:
    loss: str
    link: str
    epsilon: float
    beta: float
    blunt: float
    bound: float
    verdict: bool
    adversary_id: str
    method: str
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise DomainError("epsilon must lie in [0, 1]")
        if self.verdict != (self.beta <= 2.0 * self.epsilon * self.blunt):
            raise ValidationError("certificate verdict contradicts its fields")
        if abs(self.bound - max(0.0, self.blunt - self.beta / 2.0)) > 1e-12:
            raise ValidationError("certificate bound contradicts its fields")

    def to_dict(self) -> dict:
        return json_ready(
            {
                "loss": self.loss,
                "link": self.link,
                "epsilon": self.epsilon,
                "beta": self.beta,
                "blunt": self.blunt,
                "bound": self.bound,
                "verdict": self.verdict,
                "adversary_id": self.adversary_id,
                "method": self.method,
                "inputs": self.inputs,
            }
        )


def defeat_certificate(loss: ProperLoss, link: Link, beta_value: float,
                       epsilon: float, adversary_id: str,
                       method: str = "closed_form_mmd",
                       inputs: dict | None = None) -> DefeatCertificate:
    """Certificate of the defeat condition ``beta <= 2*eps*blunt`` (inclusive).

    A negative beta is recorded as-is; it only strengthens the bound.
    """
    blunt = blunt_loss(loss)
    return DefeatCertificate(
        loss=loss.name,
        link=link.kind,
        epsilon=float(epsilon),
        beta=float(beta_value),
        blunt=blunt,
        bound=max(0.0, blunt - float(beta_value) / 2.0),
        verdict=bool(float(beta_value) <= 2.0 * float(epsilon) * blunt),
        adversary_id=adversary_id,
        method=method,
        inputs=dict(inputs or {}),
    )


@dataclass(frozen=True)
class JointDefeatReport:
    losses: tuple
    blunts: tuple
    shared_endpoint: float
    gamma0: float
    epsilon: float
    verdict: bool

    def to_dict(self) -> dict:
        return json_ready(
            {
                "losses": list(self.losses),
                "blunts": list(self.blunts),
                "shared_endpoint": self.shared_endpoint,
                "gamma0": self.gamma0,
                "epsilon": self.epsilon,
                "verdict": self.verdict,
            }
        )


def joint_defeat_certificate(losses: Sequence[ProperLoss], gamma0: float,
                             epsilon: float) -> JointDefeatReport:
    """Joint defeat of a set of symmetric losses by one adversary.

    Premise: every loss has equal endpoint risks sharing one value.  The
    single verdict is ``gamma0 <= epsilon * min(blunt) - shared`` -- one
    zero-offset distortion certifies the whole set at once.
    """
    if not losses:
        raise DomainError("joint certificate needs at least one loss")
    if not (0.0 <= epsilon <= 1.0):
        raise DomainError("epsilon must lie in [0, 1]")
    shared = shared_endpoint_value(losses, tol=1e-9)
    blunts = tuple(blunt_loss(loss) for loss in losses)
    verdict = bool(float(gamma0) <= epsilon * min(blunts) - shared)
    return JointDefeatReport(
        losses=tuple(loss.name for loss in losses),
        blunts=blunts,
        shared_endpoint=shared,
        gamma0=float(gamma0),
        epsilon=float(epsilon),
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# IPM view
# ---------------------------------------------------------------------------


def ipm(cls, g: Callable, a, P: EmpiricalMarginal, N: EmpiricalMarginal) -> float:
    """Integral probability metric ``max_h |int g.h.a dP - int g.h.a dN|``.

    Finite classes are symmetrized with their negations unless already
    flagged and verified closed; the RKHS unit ball is negation-closed and
    admits the Gram closed form (identity ``g`` only).
    """
    if isinstance(cls, RKHSUnitBall):
        # For the ball the supremum is the plain MMD: weights (1, 1).
        tp = _transformed(a, P)
        tn = _transformed(a, N)
        check_psd(cls.kernel, np.vstack([tp, tn]))
        s_pp = float(P.mass @ cls.kernel.gram(tp) @ P.mass)
        s_pn = float(P.mass @ cls.kernel.gram(tp, tn) @ N.mass)
        s_nn = float(N.mass @ cls.kernel.gram(tn) @ N.mass)
        radicand = s_pp - 2.0 * s_pn + s_nn
        if radicand < RADICAND_CLAMP:
            raise IndefiniteKernelError("MMD radicand below the clamp threshold")
        return math.sqrt(max(radicand, 0.0))
    if not isinstance(cls, FiniteSampleClass):
        raise DomainError(f"ipm does not support {type(cls).__name__}")
    tp = _transformed(a, P)
    tn = _transformed(a, N)
    hp = cls.evaluate(tp)
    hn = cls.evaluate(tn)
    if cls.closed_by_negation:
        _verify_negation_closure(hp, hn)
    else:
        hp = np.vstack([hp, -hp])
        hn = np.vstack([hn, -hn])
    gp = np.asarray(g(hp), dtype=float)
    gn = np.asarray(g(hn), dtype=float)
    diffs = gp @ P.mass - gn @ N.mass
    return float(np.max(np.abs(diffs)))


def _verify_negation_closure(hp: np.ndarray, hn: np.ndarray, tol: float = 1e-9) -> None:
    table = np.hstack([hp, hn])
    for row in table:
        gaps = np.max(np.abs(table + row), axis=1)
        if float(gaps.min()) > tol:
            raise ValidationError(
                "class flagged closed_by_negation but a negation is missing"
            )


def ipm_cross_check(loss: ProperLoss, link: Link, cls, a, P: EmpiricalMarginal,
                    N: EmpiricalMarginal, pi) -> dict:
    """Compare the IPM with twice the offset distortion.

    The identity ``ipm = 2 * gamma(..., 2*cbr(1), 2*cbr(0))`` needs both
    ``delta_ell_pi = 0`` and ``pi = 1/2``; when either premise fails the
    check is skipped and flagged instead of asserted.
    """
    pi = _pi_value(pi)
    delta = float(delta_ell_pi(loss, pi))
    premises = abs(delta) <= 1e-12 and abs(pi - 0.5) <= 1e-12
    ipm_value = ipm(cls, _make_g(loss, link), a, P, N)
    beta_value = beta(loss, link, cls, a, P, N, pi)
    report = {
        "ipm": ipm_value,
        "beta": beta_value,
        "premises_hold": premises,
        "delta_ell_pi": delta,
        "pi": pi,
    }
    if premises:
        gap = abs(ipm_value - 2.0 * beta_value)
        report["gap"] = gap
        if gap > 1e-9:
            raise ValidationError(
                f"ipm/distortion factor-2 identity violated by {gap:g}"
            )
    else:
        report["flag"] = "premises_not_met"
    return report


# ---------------------------------------------------------------------------
# Witness and sampled-supremum routes
# ---------------------------------------------------------------------------


def rkhs_witness(kernel: Kernel, a, P: EmpiricalMarginal, N: EmpiricalMarginal,
                 pi) -> tuple[Callable, float]:
    """The maximiser of the ball distortion, as an evaluable function.

    ``h* = (pi*mu_{a,P} - (1-pi)*mu_{a,N}) / norm`` expanded over the
    transformed supports.  Returns ``(h*, norm)``; a zero difference yields
    the zero function.
    """
    pi = _pi_value(pi)
    tp = _transformed(a, P)
    tn = _transformed(a, N)
    centers = np.vstack([tp, tn])
    coef = np.concatenate([pi * P.mass, -(1.0 - pi) * N.mass])
    norm_sq = float(coef @ kernel.gram(centers) @ coef)
    norm = math.sqrt(max(norm_sq, 0.0))
    scale = 0.0 if norm < WITNESS_NORM_FLOOR else 1.0 / norm

    def h_star(points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return scale * (kernel.gram(pts, centers) @ coef)

    return h_star, norm


def witness_gamma(loss: ProperLoss, kernel: Kernel, a, P: EmpiricalMarginal,
                  N: EmpiricalMarginal, pi) -> float:
    """Offset distortion evaluated at the explicit ball witness.

    An independent evaluation route for :func:`beta_rkhs`: the witness is
    expanded pointwise and pushed through the finite-class machinery.
    """
    pi = _pi_value(pi)
    h_star, _ = rkhs_witness(kernel, a, P, N, pi)
    singleton = FiniteSampleClass([h_star])
    result = gamma_finite(
        singleton, lambda s: s, a, P, N, pi, 2.0 * loss.cbr_at_1, 2.0 * loss.cbr_at_0
    )
    return result.value


def sampled_ball_gamma(kernel: Kernel, a, P: EmpiricalMarginal, N: EmpiricalMarginal,
                       pi, b: float, c: float, n_samples: int = 4096,
                       seed: int = 0) -> float:
    """Distortion supremum over a sampled subset of the RKHS unit ball.

    Members ``h = sum_t beta_t k(z_t, .)`` with centers on the pooled
    transformed support and coefficients normalised to unit RKHS norm.
    Always a lower bound on the ball distortion (the closed form dominates).
    """
    pi = _pi_value(pi)
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    tp = _transformed(a, P)
    tn = _transformed(a, N)
    centers = np.vstack([tp, tn])
    gram = kernel.gram(centers)
    check_psd(kernel, centers)
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((centers.shape[0], n_samples))
    norms_sq = np.einsum("ts,tu,us->s", B, gram, B)
    keep = norms_sq > 1e-18
    if not np.any(keep):
        raise DomainError("all sampled members degenerate to zero norm")
    B = B[:, keep] / np.sqrt(norms_sq[keep])[None, :]
    u = pi * (gram[:, : tp.shape[0]] @ P.mass) - (1.0 - pi) * (
        gram[:, tp.shape[0]:] @ N.mass
    )
    values = B.T @ u + pi * b + (1.0 - pi) * c
    return float(np.max(values))


def marginal_digest(m: EmpiricalMarginal) -> str:
    """Stable content digest of a marginal (support and mass)."""
    return stable_digest({"support": m.support, "mass": m.mass})
