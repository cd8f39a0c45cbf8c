"""Smoothing kernels used to turn summary-statistic distances into acceptance
probabilities.

Each family is a symmetric density ``K(u)`` on the real line. The scaled kernel
is ``K_h(u) = K(u / h) / h``. Rejection samplers only ever need the ratio
``K_h(rho) / K_h(0) = K(rho / h) / K(0)``, which lies in ``[0, 1]``.

The biweight family uses ``(15/16)(1 - u^2)^2``, the normalised form. A cubed
version ``(15/16)(1 - u^2)^3`` integrates to 6/7 and is not a density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import InvalidScaleError

__all__ = [
    "KernelFamily",
    "SmoothingKernel",
    "get_kernel",
    "eval_base",
    "eval_scaled",
    "acceptance_ratio",
    "kernel_variance",
    "min_scale_to_accept",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class KernelFamily(str, Enum):
    UNIFORM = "uniform"
    TRIANGULAR = "triangular"
    EPANECHNIKOV = "epanechnikov"
    BIWEIGHT = "biweight"
    GAUSSIAN = "gaussian"


# K(0) and the second moment int u^2 K(u) du for each family.
_PEAK = {
    KernelFamily.UNIFORM: 0.5,
    KernelFamily.TRIANGULAR: 1.0,
    KernelFamily.EPANECHNIKOV: 0.75,
    KernelFamily.BIWEIGHT: 15.0 / 16.0,
    KernelFamily.GAUSSIAN: 1.0 / _SQRT_2PI,
}
_VARIANCE = {
    KernelFamily.UNIFORM: 1.0 / 3.0,
    KernelFamily.TRIANGULAR: 1.0 / 6.0,
    KernelFamily.EPANECHNIKOV: 1.0 / 5.0,
    KernelFamily.BIWEIGHT: 1.0 / 7.0,
    KernelFamily.GAUSSIAN: 1.0,
}


@dataclass(frozen=True)
class SmoothingKernel:
    """A kernel family. Scale ``h`` is passed to each evaluation."""

    family: KernelFamily

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))

    @property
    def name(self) -> str:
        return self.family.value

    @property
    def compact(self) -> bool:
        return self.family is not KernelFamily.GAUSSIAN

    @property
    def peak(self) -> float:
        """K(0)."""
        return _PEAK[self.family]

    def __call__(self, u):
        return eval_base(self, u)

    def ratio(self, x):
        """``K(x) / K(0)`` for the standardised argument ``x = rho / h``."""
        x = np.abs(np.asarray(x, dtype=float))
        fam = self.family
        if fam is KernelFamily.GAUSSIAN:
            return np.exp(-0.5 * x * x)
        inside = x <= 1.0
        if fam is KernelFamily.UNIFORM:
            out = inside.astype(float)
        elif fam is KernelFamily.TRIANGULAR:
            out = np.where(inside, 1.0 - x, 0.0)
        elif fam is KernelFamily.EPANECHNIKOV:
            out = np.where(inside, 1.0 - x * x, 0.0)
        else:
            out = np.where(inside, (1.0 - x * x) ** 2, 0.0)
        return out

    def inverse_ratio(self, u):
        """Largest ``x >= 0`` with ``K(x) / K(0) >= u``, for ``u`` in (0, 1].

        Returns ``inf`` for the Gaussian kernel only when ``u`` is 0, and 0
        for the non-uniform kernels when ``u`` is 1.
        """
        u = np.asarray(u, dtype=float)
        fam = self.family
        with np.errstate(divide="ignore"):
            if fam is KernelFamily.UNIFORM:
                return np.ones_like(u)
            if fam is KernelFamily.TRIANGULAR:
                return 1.0 - u
            if fam is KernelFamily.EPANECHNIKOV:
                return np.sqrt(1.0 - u)
            if fam is KernelFamily.BIWEIGHT:
                return np.sqrt(1.0 - np.sqrt(u))
            return np.sqrt(-2.0 * np.log(u))


def get_kernel(kernel) -> SmoothingKernel:
    """Coerce a family name (``"uniform"``, ``"gaussian"``, ...) to a kernel."""
    if isinstance(kernel, SmoothingKernel):
        return kernel
    try:
        return SmoothingKernel(KernelFamily(str(kernel).lower()))
    except ValueError:
        names = ", ".join(f.value for f in KernelFamily)
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {names}") from None


def _check_scale(h):
    h_arr = np.asarray(h, dtype=float)
    if np.any(~(h_arr > 0)):
        raise InvalidScaleError(f"kernel scale must be positive, got {h!r}")


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def eval_base(kernel, u):
    """Evaluate the unscaled density ``K(u)``."""
    k = get_kernel(kernel)
    return _scalar(k.peak * k.ratio(u))


def eval_scaled(kernel, h, u):
    """Evaluate ``K_h(u) = K(u / h) / h``."""
    k = get_kernel(kernel)
    _check_scale(h)
    h = np.asarray(h, dtype=float)
    return _scalar(k.peak * k.ratio(np.asarray(u, dtype=float) / h) / h)


def acceptance_ratio(kernel, h, rho):
    """``K_h(rho) / K_h(0)``, the ABC acceptance probability under a prior proposal."""
    k = get_kernel(kernel)
    _check_scale(h)
    return _scalar(k.ratio(np.asarray(rho, dtype=float) / np.asarray(h, dtype=float)))


def kernel_variance(kernel) -> float:
    """Second moment of the base kernel."""
    return _VARIANCE[get_kernel(kernel).family]


def min_scale_to_accept(kernel, rho, u):
    """Smallest ``h`` for which a particle at distance ``rho`` with acceptance
    uniform ``u`` is accepted, i.e. ``u <= K_h(rho) / K_h(0)``.

    Vectorised over ``rho`` and ``u``. A particle at ``rho = 0`` is accepted
    at every scale, so its infimum is 0. A non-uniform kernel with ``u = 1``
    needs ``h = inf`` unless ``rho = 0``.
    """
    k = get_kernel(kernel)
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(rho < 0):
        raise ValueError("distance must be non-negative")
    if np.any(~((u > 0) & (u <= 1))):
        raise ValueError("acceptance uniform must lie in (0, 1]; u=0 is never acceptable")
    x = k.inverse_ratio(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(rho == 0, 0.0, rho / x)
    return _scalar(h)
