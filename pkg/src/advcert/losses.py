"""Proper losses defined by their conditional Bayes risk.

A proper loss is represented by its conditional Bayes risk ``cbr`` (the
concave function usually written L-bar) together with its analytic
derivative.  Everything else is derived from that single curve:

* partial losses, via the Savage construction
  ``l_1(c)  = (1-c)*cbr'(c) + cbr(c) - cbr(1)`` and
  ``l_-1(c) = cbr(c) - c*cbr'(c) - cbr(0)``;
* the canonical link ``psi = -cbr'`` and composite losses on real scores;
* the scalars consumed by defeat certificates: the blunt loss
  ``cbr(1/2)`` and the endpoint offset ``pi*cbr(1) + (1-pi)*cbr(0)``.

Registered losses: ``log``, ``square``, ``matsushita``; custom losses can be
built from a tabulated curve (see :func:`tabulated_loss`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import expit, xlogy

from .errors import DomainError, ValidationError

__all__ = [
    "ProperLoss",
    "Link",
    "PropernessReport",
    "get_loss",
    "registered_losses",
    "tabulated_loss",
    "load_tabulated_loss",
    "cbr_value",
    "blunt_loss",
    "delta_ell_pi",
    "partial_loss",
    "canonical_link",
    "logit_link",
    "get_link",
    "g_map",
    "composite_loss",
    "composite_loss_unchecked",
    "composite_grad_unchecked",
    "fenchel_identity_check",
    "properness_check",
    "validate_loss",
    "is_symmetric",
    "shared_endpoint_value",
]

# Fixed tolerances of the loss calculus (mirrored by the test suite).
CONCAVITY_TOL = 1e-9
DERIVATIVE_TOL = 1e-5
PARTIAL_NONNEG_TOL = 1e-9
ROUNDTRIP_TOL = 1e-9
BISECTION_TOL = 1e-12
PROPERNESS_TOL = 1e-7
SYMMETRY_TOL = 1e-12

_FD_STEP = 1e-6  # central-difference step for the derivative probe


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class Link:
    """An invertible score mapping ``psi: (0,1) -> scores``.

    ``forward`` must be strictly increasing; ``inverse`` undoes it.  Scores
    are only accepted inside the declared closed interval
    ``[score_lo, score_hi]``; out-of-interval scores are rejected, never
    clamped.
    """

    kind: str  # canonical | logit | custom
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    score_lo: float = -math.inf
    score_hi: float = math.inf

    def check_scores(self, v) -> np.ndarray:
        arr, _ = _as_array(v)
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"{self.kind} link: scores must be finite")
        if np.any(arr < self.score_lo) or np.any(arr > self.score_hi):
            raise DomainError(
                f"{self.kind} link: score outside declared interval "
                f"[{self.score_lo}, {self.score_hi}]"
            )
        return arr

    def validate(self, grid: int = 97) -> None:
        """Round-trip and monotonicity probes (invariants of the type)."""
        c = np.linspace(0.01, 0.99, grid)
        v = self.forward(c)
        if np.any(np.diff(v) <= 0):
            raise ValidationError(f"{self.kind} link: forward not strictly increasing")
        back = self.inverse(v)
        if np.max(np.abs(back - c)) > ROUNDTRIP_TOL:
            raise ValidationError(f"{self.kind} link: inverse(forward(c)) != c")


@dataclass(frozen=True)
class ProperLoss:
    """A proper loss given by its conditional Bayes risk and derivative.

    ``cbr``/``cbr_prime``/``cbr_second`` are vectorised callables on the open
    interval (0,1).  ``cbr_at_0``/``cbr_at_1`` are the continuous extensions
    to the endpoints (convention ``0*log 0 = 0`` for the log loss).

    ``endpoint_partials`` maps ``(y, c)`` with ``c in {0,1}`` to the finite
    limit of the partial loss there; ``None`` means endpoint evaluation is
    rejected (the log loss has infinite limits, so it rejects).

    The canonical-link extras (``canonical_inverse`` and the declared score
    interval) are analytic registrations; absent, the canonical inverse is
    computed by monotone bisection.  ``canonical_composite`` and
    ``canonical_composite_grad`` are numerically stable closed forms of the
    canonical composite loss ``l(y, v)`` and its score derivative, defined on
    all of R (they analytically extend the Savage polynomials past a bounded
    score interval; see :func:`composite_loss_unchecked`).
    """

    name: str
    cbr: Callable[[np.ndarray], np.ndarray]
    cbr_prime: Callable[[np.ndarray], np.ndarray]
    cbr_at_0: float
    cbr_at_1: float
    cbr_second: Callable[[np.ndarray], np.ndarray] | None = None
    endpoint_partials: dict[tuple[int, int], float] | None = None
    canonical_inverse: Callable[[np.ndarray], np.ndarray] | None = None
    canonical_interval: tuple[float, float] = (-math.inf, math.inf)
    canonical_composite: Callable[[int, np.ndarray], np.ndarray] | None = None
    canonical_composite_grad: Callable[[int, np.ndarray], np.ndarray] | None = None


# ---------------------------------------------------------------------------
# Registered losses
# ---------------------------------------------------------------------------


def _log_cbr(c):
    return -(xlogy(c, c) + xlogy(1.0 - c, 1.0 - c))


def _log_cbr_prime(c):
    with np.errstate(divide="ignore"):
        return np.log1p(-c) - np.log(c)


def _log_composite(y: int, v):
    # l(+1, v) = log(1 + e^-v), l(-1, v) = log(1 + e^v)
    return np.logaddexp(0.0, -y * np.asarray(v, dtype=float))


def _log_composite_grad(y: int, v):
    return expit(np.asarray(v, dtype=float)) - (y + 1) / 2.0


def _square_composite(y: int, v):
    return ((1.0 - y * np.asarray(v, dtype=float)) / 2.0) ** 2


def _square_composite_grad(y: int, v):
    return (np.asarray(v, dtype=float) - y) / 2.0


def _mats_cbr(c):
    return np.sqrt(c * (1.0 - c))


def _mats_cbr_prime(c):
    with np.errstate(divide="ignore"):
        return (1.0 - 2.0 * c) / (2.0 * np.sqrt(c * (1.0 - c)))


def _mats_cbr_second(c):
    with np.errstate(divide="ignore"):
        return -1.0 / (4.0 * (c * (1.0 - c)) ** 1.5)


def _mats_canonical_inverse(v):
    v = np.asarray(v, dtype=float)
    return 0.5 * (1.0 + v / np.sqrt(1.0 + v * v))


def _mats_composite(y: int, v):
    # Closed form of the canonical composite: (sqrt(1+v^2) - y*v) / 2.
    v = np.asarray(v, dtype=float)
    return (np.sqrt(1.0 + v * v) - y * v) / 2.0


def _mats_composite_grad(y: int, v):
    v = np.asarray(v, dtype=float)
    return (v / np.sqrt(1.0 + v * v) - y) / 2.0


_REGISTRY: dict[str, ProperLoss] = {}


def _register(loss: ProperLoss) -> ProperLoss:
    _REGISTRY[loss.name] = loss
    return loss


LOG_LOSS = _register(
    ProperLoss(
        name="log",
        cbr=_log_cbr,
        cbr_prime=_log_cbr_prime,
        cbr_at_0=0.0,
        cbr_at_1=0.0,
        cbr_second=lambda c: -1.0 / (c * (1.0 - c)),
        endpoint_partials=None,  # infinite limits: reject endpoint evaluation
        canonical_inverse=expit,
        canonical_interval=(-math.inf, math.inf),
        canonical_composite=_log_composite,
        canonical_composite_grad=_log_composite_grad,
    )
)

SQUARE_LOSS = _register(
    ProperLoss(
        name="square",
        cbr=lambda c: c * (1.0 - c),
        cbr_prime=lambda c: 1.0 - 2.0 * c,
        cbr_at_0=0.0,
        cbr_at_1=0.0,
        cbr_second=lambda c: np.full_like(np.asarray(c, dtype=float), -2.0),
        endpoint_partials={(1, 0): 1.0, (1, 1): 0.0, (-1, 0): 0.0, (-1, 1): 1.0},
        canonical_inverse=lambda v: (np.asarray(v, dtype=float) + 1.0) / 2.0,
        canonical_interval=(-1.0, 1.0),
        canonical_composite=_square_composite,
        canonical_composite_grad=_square_composite_grad,
    )
)

MATSUSHITA_LOSS = _register(
    ProperLoss(
        name="matsushita",
        cbr=_mats_cbr,
        cbr_prime=_mats_cbr_prime,
        cbr_at_0=0.0,
        cbr_at_1=0.0,
        cbr_second=_mats_cbr_second,
        endpoint_partials=None,
        canonical_inverse=_mats_canonical_inverse,
        canonical_interval=(-math.inf, math.inf),
        canonical_composite=_mats_composite,
        canonical_composite_grad=_mats_composite_grad,
    )
)


def get_loss(name: str) -> ProperLoss:
    """Look up a registered loss by name."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise DomainError(
            f"unknown loss {name!r}; registered: {sorted(_REGISTRY)}"
        ) from None


def registered_losses() -> list[str]:
    return sorted(_REGISTRY)


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def cbr_value(loss: ProperLoss, pi):
    """Conditional Bayes risk at base rate ``pi`` (endpoints by extension)."""
    arr, scalar = _as_array(pi)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise DomainError("cbr_value: pi must lie in [0, 1]")
    out = np.empty_like(arr)
    interior = (arr > 0.0) & (arr < 1.0)
    if np.any(interior):
        out[interior] = loss.cbr(arr[interior])
    out[arr == 0.0] = loss.cbr_at_0
    out[arr == 1.0] = loss.cbr_at_1
    return _ret(out, scalar)


def blunt_loss(loss: ProperLoss) -> float:
    """The blunt loss: conditional Bayes risk of the maximally uncertain rate 1/2."""
    return float(loss.cbr(np.asarray(0.5)))


def delta_ell_pi(loss: ProperLoss, pi) -> float:
    """Endpoint offset ``pi*cbr(1) + (1-pi)*cbr(0)``."""
    arr, scalar = _as_array(pi)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("delta_ell_pi: pi must lie in [0, 1]")
    out = arr * loss.cbr_at_1 + (1.0 - arr) * loss.cbr_at_0
    return _ret(out, scalar)


# ---------------------------------------------------------------------------
# Partial and composite losses
# ---------------------------------------------------------------------------


def _check_label(y: int) -> int:
    if y not in (-1, 1):
        raise DomainError(f"label must be -1 or +1, got {y!r}")
    return int(y)


def _check_label_array(y):
    """Labels as a scalar or array; every entry must be -1 or +1."""
    arr = np.asarray(y)
    if not np.all(np.isin(arr, (-1, 1))):
        raise DomainError("labels must be -1 or +1")
    return arr.astype(float)


def partial_loss(loss: ProperLoss, y: int, c):
    """Savage partial loss ``l_y(c)``.

    Endpoint arguments ``c in {0, 1}`` are accepted only when the loss
    registers finite limits there (the square loss does; log and Matsushita
    reject).
    """
    y = _check_label(y)
    arr, scalar = _as_array(c)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise DomainError("partial_loss: c must lie in [0, 1]")
    at_edge = (arr == 0.0) | (arr == 1.0)
    if np.any(at_edge) and loss.endpoint_partials is None:
        raise DomainError(
            f"partial_loss: {loss.name} loss has no finite endpoint extension"
        )
    out = np.empty_like(arr)
    interior = ~at_edge
    if np.any(interior):
        ci = arr[interior]
        cbr = loss.cbr(ci)
        prime = loss.cbr_prime(ci)
        if y == 1:
            out[interior] = (1.0 - ci) * prime + cbr - loss.cbr_at_1
        else:
            out[interior] = cbr - ci * prime - loss.cbr_at_0
    if np.any(at_edge):
        table = loss.endpoint_partials
        out[arr == 0.0] = table[(y, 0)]
        out[arr == 1.0] = table[(y, 1)]
    return _ret(out, scalar)


def _bisection_inverse(forward: Callable, lo: float = 1e-15, hi: float = 1.0 - 1e-15):
    def inverse(v):
        arr, scalar = _as_array(v)
        flat = np.atleast_1d(arr).astype(float)
        a = np.full_like(flat, lo)
        b = np.full_like(flat, hi)
        # 64 halvings take the bracket well below the 1e-12 target.
        for _ in range(64):
            mid = 0.5 * (a + b)
            below = forward(mid) < flat
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        mid = 0.5 * (a + b)
        return _ret(mid.reshape(arr.shape), scalar)

    return inverse


def canonical_link(loss: ProperLoss) -> Link:
    """The canonical link ``psi = -cbr'`` with its inverse.

    Uses the registered analytic inverse when available, otherwise monotone
    bisection.  Fails if the derivative is not strictly decreasing on the
    probe grid (the loss must be strictly concave).
    """
    probe = np.linspace(0.001, 0.999, 199)
    psi_vals = -loss.cbr_prime(probe)
    if np.any(np.diff(psi_vals) <= 0):
        raise ValidationError(
            f"canonical_link: {loss.name} cbr_prime is not strictly decreasing"
        )

    def forward(c):
        return -loss.cbr_prime(np.asarray(c, dtype=float))

    if loss.canonical_inverse is not None:
        inverse = loss.canonical_inverse
        lo, hi = loss.canonical_interval
    else:
        inverse = _bisection_inverse(forward)
        eps = 1e-12
        lo = float(forward(np.asarray(eps)))
        hi = float(forward(np.asarray(1.0 - eps)))
    return Link(kind="canonical", forward=forward, inverse=inverse,
                score_lo=lo, score_hi=hi)


def logit_link() -> Link:
    def forward(c):
        c = np.asarray(c, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(c) - np.log1p(-c)

    return Link(kind="logit", forward=forward, inverse=expit)


def get_link(loss: ProperLoss, kind: str) -> Link:
    """Build the link named by ``kind`` ("canonical" or "logit")."""
    if kind == "canonical":
        return canonical_link(loss)
    if kind == "logit":
        return logit_link()
    raise DomainError(f"unknown link kind {kind!r} (use 'canonical' or 'logit')")


def g_map(loss: ProperLoss, link: Link, v):
    """The correction map ``g = (-cbr') o inverse-link``.

    Exactly the identity under the canonical link.
    """
    arr = link.check_scores(v)
    _, scalar = _as_array(v)
    if link.kind == "canonical":
        return _ret(arr.copy(), scalar)
    c = np.asarray(link.inverse(arr), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -loss.cbr_prime(c)
    return _ret(out, scalar)


def composite_loss(loss: ProperLoss, link: Link, y: int, v):
    """Composite loss ``l(y, inverse-link(v))`` on validated scores."""
    y = _check_label(y)
    arr = link.check_scores(v)
    _, scalar = _as_array(v)
    if link.kind == "canonical" and loss.canonical_composite is not None:
        return _ret(np.asarray(loss.canonical_composite(y, arr), dtype=float), scalar)
    c = np.asarray(link.inverse(arr), dtype=float)
    return _ret(np.asarray(partial_loss(loss, y, c), dtype=float), scalar)


def composite_loss_unchecked(loss: ProperLoss, y: int, v):
    """Canonical composite loss on all of R, bypassing interval validation.

    For losses whose canonical link has a bounded score interval (square),
    this is the analytic extension of the Savage polynomials; it coincides
    with :func:`composite_loss` inside the interval and stays convex and
    finite outside.  Used by the learner, whose gradient iterates may leave
    the closed interval.  ``y`` may be a label array matching ``v``.
    """
    y = _check_label_array(y)
    if loss.canonical_composite is None:
        raise DomainError(
            f"{loss.name} loss has no stable canonical composite registered"
        )
    arr, scalar = _as_array(v)
    return _ret(np.asarray(loss.canonical_composite(y, arr), dtype=float), scalar)


def composite_grad_unchecked(loss: ProperLoss, y: int, v):
    """Score derivative of :func:`composite_loss_unchecked`."""
    y = _check_label_array(y)
    if loss.canonical_composite_grad is None:
        raise DomainError(
            f"{loss.name} loss has no stable canonical gradient registered"
        )
    arr, scalar = _as_array(v)
    return _ret(np.asarray(loss.canonical_composite_grad(y, arr), dtype=float), scalar)


# ---------------------------------------------------------------------------
# Identity checks
# ---------------------------------------------------------------------------


def fenchel_identity_check(loss: ProperLoss, y: int, v: float, tol: float) -> bool:
    """Verify the Fenchel-Young form of the canonical composite loss.

    Checks ``l(y,v) = conj(v) - ((y+1)/2)*v - ((1-y)*cbr(0)+(1+y)*cbr(1))/2``
    where ``conj(v) = v*inv(v) + cbr(inv(v))`` and ``inv`` is the canonical
    inverse link.  The left side is evaluated through the Savage partials, so
    the two routes are independent.
    """
    y = _check_label(y)
    link = canonical_link(loss)
    arr = link.check_scores(v)
    c = float(np.asarray(link.inverse(arr)))
    lhs = float(partial_loss(loss, y, c))
    conj = float(v) * c + float(cbr_value(loss, c))
    rhs = conj - ((y + 1) / 2.0) * float(v) - 0.5 * (
        (1 - y) * loss.cbr_at_0 + (1 + y) * loss.cbr_at_1
    )
    return abs(lhs - rhs) <= tol


@dataclass(frozen=True)
class PropernessReport:
    grid_size: int
    violations: tuple[tuple[float, str, float], ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def properness_check(loss: ProperLoss, grid_size: int) -> PropernessReport:
    """Probe properness on a grid.

    For each interior grid rate ``pi``: (a) the expected partial loss at the
    honest prediction ``c = pi`` equals ``cbr(pi) - delta_ell_pi(pi)`` within
    1e-7 (exact Savage identity for the normalised construction; the offset
    vanishes for every registered loss); (b) the grid minimiser of the
    expected loss lies within one grid step of ``pi``.
    """
    if grid_size < 3:
        raise DomainError("properness_check: grid_size must be >= 3")
    grid = np.linspace(0.0, 1.0, grid_size)
    interior = grid[1:-1]
    step = grid[1] - grid[0]
    l_pos = np.asarray(partial_loss(loss, 1, interior))
    l_neg = np.asarray(partial_loss(loss, -1, interior))
    violations: list[tuple[float, str, float]] = []
    for k, pi in enumerate(interior):
        expected = pi * l_pos + (1.0 - pi) * l_neg  # over predictions c
        target = float(cbr_value(loss, pi)) - float(delta_ell_pi(loss, pi))
        gap = abs(float(expected[k]) - target)
        if gap > PROPERNESS_TOL:
            violations.append((float(pi), "bayes_risk_mismatch", gap))
        c_star = float(interior[int(np.argmin(expected))])
        if abs(c_star - pi) > step + 1e-12:
            violations.append((float(pi), "minimiser_off_rate", abs(c_star - pi)))
    return PropernessReport(grid_size=grid_size, violations=tuple(violations))


def validate_loss(loss: ProperLoss, grid: int = 199) -> None:
    """Assert the declared invariants of a ProperLoss.

    Concavity on the probe grid, derivative-vs-finite-difference agreement,
    and non-negativity of both partial losses.  Raises ``ValidationError``.
    """
    c = np.linspace(0.0, 1.0, grid + 2)
    vals = np.asarray(cbr_value(loss, c))
    # Concavity on consecutive triples p < q < r.
    chord = (vals[:-2] + vals[2:]) / 2.0
    if np.any(vals[1:-1] < chord - CONCAVITY_TOL):
        raise ValidationError(f"{loss.name}: cbr fails the concavity probe")
    interior = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    h = np.minimum(_FD_STEP, np.minimum(interior, 1.0 - interior) / 2.0)
    fd = (loss.cbr(interior + h) - loss.cbr(interior - h)) / (2.0 * h)
    if np.max(np.abs(fd - loss.cbr_prime(interior))) > DERIVATIVE_TOL:
        raise ValidationError(f"{loss.name}: cbr_prime disagrees with finite differences")
    for y in (1, -1):
        if np.min(np.asarray(partial_loss(loss, y, interior))) < -PARTIAL_NONNEG_TOL:
            raise ValidationError(f"{loss.name}: partial loss l_{y} goes negative")


def is_symmetric(loss: ProperLoss, tol: float = SYMMETRY_TOL) -> bool:
    """Whether the endpoint risks coincide (premise of the joint certificate)."""
    return abs(loss.cbr_at_0 - loss.cbr_at_1) <= tol


def shared_endpoint_value(losses: Sequence[ProperLoss], tol: float = 1e-9) -> float:
    """The common endpoint risk of a set of symmetric losses.

    Raises ``DomainError`` if any loss is asymmetric beyond ``tol`` or the
    sets' endpoint values disagree.
    """
    values = []
    for loss in losses:
        if abs(loss.cbr_at_0 - loss.cbr_at_1) > tol:
            raise DomainError(f"{loss.name}: endpoint risks differ; loss is asymmetric")
        values.append(loss.cbr_at_0)
    if max(values) - min(values) > tol:
        raise DomainError("losses do not share a common endpoint risk")
    return float(values[0])


# ---------------------------------------------------------------------------
# Tabulated custom losses
# ---------------------------------------------------------------------------


def tabulated_loss(name: str, pi: Sequence[float], cbr: Sequence[float],
                   cbr_prime: Sequence[float]) -> ProperLoss:
    """Build a custom loss from a tabulated curve.

    ``pi`` must be strictly increasing and span [0, 1] inclusive; values in
    between are filled by monotone-cubic (PCHIP) interpolation of each
    column.  The result is validated against the ProperLoss invariants.
    """
    pi = np.asarray(pi, dtype=float)
    cbr = np.asarray(cbr, dtype=float)
    cbr_prime = np.asarray(cbr_prime, dtype=float)
    if pi.ndim != 1 or pi.shape != cbr.shape or pi.shape != cbr_prime.shape:
        raise ValidationError("tabulated_loss: columns must be 1-d and equal length")
    if pi.size < 4:
        raise ValidationError("tabulated_loss: need at least 4 rows")
    if np.any(np.diff(pi) <= 0):
        raise ValidationError("tabulated_loss: pi column must be strictly increasing")
    if pi[0] != 0.0 or pi[-1] != 1.0:
        raise ValidationError("tabulated_loss: pi column must span [0, 1] inclusive")
    cbr_interp = PchipInterpolator(pi, cbr, extrapolate=False)
    prime_interp = PchipInterpolator(pi, cbr_prime, extrapolate=False)
    loss = ProperLoss(
        name=name,
        cbr=lambda c: np.asarray(cbr_interp(np.asarray(c, dtype=float)), dtype=float),
        cbr_prime=lambda c: np.asarray(prime_interp(np.asarray(c, dtype=float)), dtype=float),
        cbr_at_0=float(cbr[0]),
        cbr_at_1=float(cbr[-1]),
        cbr_second=None,
        endpoint_partials=None,
        canonical_inverse=None,
    )
    validate_loss(loss)
    canonical_link(loss).validate()
    return loss


def load_tabulated_loss(path, name: str = "custom") -> ProperLoss:
    """Load a tabulated loss CSV with header ``pi,cbr,cbr_prime``."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [col.strip() for col in header] != ["pi", "cbr", "cbr_prime"]:
            raise ValidationError(f"{path}: expected header pi,cbr,cbr_prime")
        rows = [[float(cell) for cell in row] for row in reader if row]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    cols = np.asarray(rows, dtype=float)
    return tabulated_loss(name, cols[:, 0], cols[:, 1], cols[:, 2])
