"""Distances between summary vectors, and the pilot estimates used to scale them.

The Mahalanobis metric returns the quadratic form ``(s - s0)' Sigma^{-1} (s - s0)``
without a square root by default. For the uniform kernel this only changes the
meaning of ``h`` (a scale ``h`` on the squared distance equals ``sqrt(h)`` on
the unsquared one). Smooth kernels applied to the squared form are flatter
near zero, so ``Mahalanobis(sigma, root=True)`` is available when the kernel
should act on the distance itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import DegenerateSummaryError

__all__ = [
    "Euclidean",
    "WeightedEuclidean",
    "Mahalanobis",
    "distance",
    "estimate_covariance",
    "prior_predictive_scales",
    "build_metric",
]


def _as_rows(s, dim=None):
    s = np.asarray(s, dtype=float)
    rows = np.atleast_2d(s)
    if dim is not None and rows.shape[-1] != dim:
        raise ValueError(f"summary has dimension {rows.shape[-1]}, metric expects {dim}")
    return rows, s.ndim <= 1


def _check_pair(s, s_obs):
    s_obs = np.atleast_1d(np.asarray(s_obs, dtype=float))
    rows, single = _as_rows(s, s_obs.shape[0])
    return rows - s_obs, single


class Euclidean:
    """Plain Euclidean distance."""

    name = "euclidean"
    dim = None

    def __call__(self, s, s_obs):
        diff, single = _check_pair(s, s_obs)
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return float(d[0]) if single else d

    def __repr__(self):
        return "Euclidean()"


@dataclass
class WeightedEuclidean:
    """Euclidean distance after multiplying coordinate ``i`` by ``weights[i]``."""

    weights: np.ndarray
    name: str = field(default="weighted-euclidean", init=False)

    def __post_init__(self):
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("weights must be finite and strictly positive")

    @property
    def dim(self):
        return self.weights.shape[0]

    @classmethod
    def from_scales(cls, scales):
        """Weights ``1 / sd`` from per-coordinate standard deviations."""
        scales = np.asarray(scales, dtype=float)
        bad = np.flatnonzero(~(scales > 0))
        if bad.size:
            raise DegenerateSummaryError(
                f"summary coordinate(s) {bad.tolist()} have zero scale", bad.tolist()
            )
        return cls(1.0 / scales)

    def __call__(self, s, s_obs):
        diff, single = _check_pair(s, s_obs)
        diff = diff * self.weights
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return float(d[0]) if single else d


class Mahalanobis:
    """Quadratic form ``(s - s_obs)' Sigma^{-1} (s - s_obs)``.

    With ``root=True`` the square root of the form is returned instead. The
    two orderings agree, so uniform-kernel decisions are identical up to
    ``h -> h^2``, but a smooth kernel applied to the squared form has a
    different shape in summary space (a Gaussian kernel becomes
    ``exp(-rho^4 / 2h^2)``).
    """

    name = "mahalanobis"

    def __init__(self, sigma, root=False):
        self.root = bool(root)
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if sigma.shape[0] != sigma.shape[1]:
            raise ValueError("covariance matrix must be square")
        if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-14):
            raise ValueError("covariance matrix must be symmetric")
        # raises LinAlgError when not positive definite
        self._chol = linalg.cholesky(sigma, lower=True)
        self.sigma = sigma

    @property
    def dim(self):
        return self.sigma.shape[0]

    def __call__(self, s, s_obs):
        diff, single = _check_pair(s, s_obs)
        z = linalg.solve_triangular(self._chol, diff.T, lower=True)
        d = np.einsum("ij,ij->j", z, z)
        if self.root:
            d = np.sqrt(d)
        return float(d[0]) if single else d

    def __repr__(self):
        return f"Mahalanobis(sigma={self.sigma.tolist()!r}, root={self.root})"


def distance(metric, s, s_obs):
    """Distance between summary ``s`` (one vector or rows of vectors) and ``s_obs``."""
    return metric(s, s_obs)


def _degenerate_coordinates(values):
    sd = np.nanstd(values, axis=0, ddof=1)
    return np.flatnonzero(~(sd > 0)), sd


def estimate_covariance(model, scheme, theta_star, m, rng, jitter=1e-10):
    """Sample covariance of ``m`` summary vectors simulated at ``theta_star``.

    When the sample covariance is not positive definite (e.g. a coordinate
    never varies), ``jitter * trace / dim`` is added to the diagonal, falling
    back to ``jitter`` itself for an all-zero matrix, and a warning names the
    offending coordinates.
    """
    theta_star = np.atleast_1d(np.asarray(theta_star, dtype=float))
    thetas = np.broadcast_to(theta_star, (int(m), theta_star.shape[0]))
    s = model.simulate_summaries(thetas, scheme, rng)
    dim = s.shape[1]
    if m < dim + 1:
        raise ValueError(f"need m >= dim + 1 = {dim + 1} draws, got {m}")
    cov = np.atleast_2d(np.cov(s, rowvar=False))
    cov = 0.5 * (cov + cov.T)
    try:
        linalg.cholesky(cov, lower=True)
        return cov
    except linalg.LinAlgError:
        pass
    bad, _ = _degenerate_coordinates(s)
    if bad.size:
        warnings.warn(
            f"summary coordinate(s) {bad.tolist()} of scheme {scheme!r} do not vary at "
            f"theta={theta_star.tolist()}; adding diagonal jitter",
            RuntimeWarning,
            stacklevel=2,
        )
    eps = jitter * np.trace(cov) / dim
    if not eps > 0:
        eps = jitter
    while True:
        repaired = cov + eps * np.eye(dim)
        try:
            linalg.cholesky(repaired, lower=True)
            return repaired
        except linalg.LinAlgError:
            eps *= 10.0


def prior_predictive_scales(model, scheme, m, rng, fill_undefined=None):
    """Per-coordinate standard deviations of summaries under the prior predictive.

    Undefined summary values (NaN, e.g. Tajima's D with no segregating sites)
    are ignored, or replaced by ``fill_undefined`` when it is given. A coordinate with zero spread raises
    :class:`DegenerateSummaryError` naming it.
    """
    if m < 2:
        raise ValueError("need at least two prior-predictive draws")
    thetas = model.prior_sample(rng, int(m))
    s = model.simulate_summaries(thetas, scheme, rng)
    if fill_undefined is not None:
        s = np.where(np.isnan(s), float(fill_undefined), s)
    bad, sd = _degenerate_coordinates(s)
    if bad.size:
        raise DegenerateSummaryError(
            f"summary coordinate(s) {bad.tolist()} of scheme {scheme!r} have zero "
            "prior-predictive spread",
            bad.tolist(),
        )
    return sd


def build_metric(spec, model=None, scheme=None, rng=None, theta_star=None, m=None,
                 fill_undefined=None):
    """Build a metric from its config name.

    ``"euclidean"``, ``"scaled"`` (weights from prior-predictive scales, needs
    ``m``) or ``"pilot-mahalanobis"`` (covariance at ``theta_star``, needs ``m``).
    """
    spec = str(spec).lower()
    if spec == "euclidean":
        return Euclidean()
    if spec == "scaled":
        return WeightedEuclidean.from_scales(
            prior_predictive_scales(model, scheme, int(m or 10_000), rng, fill_undefined)
        )
    if spec == "pilot-mahalanobis":
        if theta_star is None:
            raise ValueError("pilot-mahalanobis metric needs theta_star")
        return Mahalanobis(estimate_covariance(model, scheme, theta_star, int(m or 2_000), rng))
    raise ValueError(f"unknown metric {spec!r}; expected euclidean, scaled or pilot-mahalanobis")
