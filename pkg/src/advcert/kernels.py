"""Kernels, Gram matrices, and the kernel feature-space metric.

Registered kinds: ``linear`` (dot product plus an optional constant offset;
offset 1 corresponds to augmenting every point with a constant 1 feature)
and ``rbf`` (Gaussian; bandwidth defaults to the median pairwise distance of
the probed support).  Feature maps are never materialised: everything is
expressed through kernel evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IndefiniteKernelError, ValidationError

__all__ = [
    "Kernel",
    "LinearKernel",
    "RbfKernel",
    "kernel_from_spec",
    "median_bandwidth",
    "check_psd",
    "feature_cost",
]

PSD_TOL = -1e-8
FEATURE_COST_CLAMP = -1e-10


def _as_points(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DomainError("kernel inputs must be vectors or point arrays")
    return arr


def _sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xx = np.sum(x * x, axis=1)[:, None]
    yy = np.sum(y * y, axis=1)[None, :]
    d2 = xx + yy - 2.0 * (x @ y.T)
    return np.maximum(d2, 0.0)


@dataclass(frozen=True)
class Kernel:
    """Base kernel; subclasses implement :meth:`gram`."""

    def gram(self, x, y=None) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, y) -> float:
        a = _as_points(x)
        b = _as_points(y)
        return float(self.gram(a, b)[0, 0])

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearKernel(Kernel):
    """k(x, y) = x.y + offset.  Offset must be non-negative to stay PSD."""

    offset: float = 0.0

    def __post_init__(self):
        if self.offset < 0.0:
            raise ValidationError("linear kernel offset must be >= 0")

    def gram(self, x, y=None) -> np.ndarray:
        a = _as_points(x)
        b = a if y is None else _as_points(y)
        return a @ b.T + self.offset

    def spec(self) -> str:
        return f"linear:{self.offset:g}" if self.offset else "linear"


@dataclass(frozen=True)
class RbfKernel(Kernel):
    """k(x, y) = exp(-||x - y||^2 / (2 * bandwidth^2))."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0.0:
            raise ValidationError("rbf bandwidth must be > 0")

    def gram(self, x, y=None) -> np.ndarray:
        a = _as_points(x)
        b = a if y is None else _as_points(y)
        return np.exp(-_sq_dists(a, b) / (2.0 * self.bandwidth**2))

    def spec(self) -> str:
        return f"rbf:{self.bandwidth:g}"


def median_bandwidth(points) -> float:
    """Median pairwise distance of a pooled support (the median heuristic)."""
    pts = _as_points(points)
    if pts.shape[0] < 2:
        raise DomainError("median_bandwidth needs at least two points")
    d2 = _sq_dists(pts, pts)
    upper = d2[np.triu_indices(pts.shape[0], k=1)]
    med = float(np.sqrt(np.median(upper)))
    if med <= 0.0:
        raise DomainError("median pairwise distance is zero; pass a bandwidth")
    return med


def kernel_from_spec(spec: str, points=None) -> Kernel:
    """Parse ``linear``, ``linear:<offset>``, ``rbf`` or ``rbf:<bandwidth>``.

    ``rbf`` without a bandwidth applies the median heuristic to ``points``.
    """
    parts = spec.split(":")
    kind = parts[0]
    if kind == "linear":
        if len(parts) == 1:
            return LinearKernel()
        if len(parts) == 2:
            return LinearKernel(offset=float(parts[1]))
    elif kind == "rbf":
        if len(parts) == 2:
            return RbfKernel(bandwidth=float(parts[1]))
        if len(parts) == 1:
            if points is None:
                raise DomainError("rbf without bandwidth needs support points")
            return RbfKernel(bandwidth=median_bandwidth(points))
    raise DomainError(f"unknown kernel spec {spec!r}")


def check_psd(kernel: Kernel, points) -> None:
    """Probe positive semidefiniteness of the Gram matrix on a support.

    Raises :class:`IndefiniteKernelError` when any eigenvalue falls below
    the -1e-8 tolerance.
    """
    gram = kernel.gram(_as_points(points))
    if not np.allclose(gram, gram.T, atol=1e-12, rtol=0.0):
        raise IndefiniteKernelError("Gram matrix is not symmetric")
    eigs = np.linalg.eigvalsh((gram + gram.T) / 2.0)
    if float(eigs.min()) < PSD_TOL:
        raise IndefiniteKernelError(
            f"Gram matrix has eigenvalue {float(eigs.min()):g} below tolerance"
        )


def feature_cost(kernel: Kernel):
    """The feature-space metric ``c(x, y) = ||phi(x) - phi(y)||``.

    Computed through kernel evaluations as
    ``sqrt(k(x,x) - 2 k(x,y) + k(y,y))``; a radicand above the -1e-10 clamp
    is truncated to zero, anything lower raises.
    """

    def cost(x, y) -> np.ndarray:
        a = _as_points(x)
        b = _as_points(y)
        kxx = np.diagonal(kernel.gram(a)).copy()
        kyy = np.diagonal(kernel.gram(b)).copy()
        kxy = kernel.gram(a, b)
        rad = kxx[:, None] - 2.0 * kxy + kyy[None, :]
        low = float(rad.min())
        if low < FEATURE_COST_CLAMP:
            raise IndefiniteKernelError(
                f"feature cost radicand {low:g} below clamp; kernel indefinite"
            )
        return np.sqrt(np.maximum(rad, 0.0))

    cost.kernel_spec = kernel.spec()
    return cost
