"""Reference values: closed-form ABC likelihoods and posteriors, exact match
probabilities, quadrature versions of the ABC likelihood and the
second-order bias expansion.

Everything here is deterministic and cheap, which makes these functions the
ground truth for the test suite.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np
from scipy import integrate, special, stats
from scipy.interpolate import PchipInterpolator

from .exceptions import AbcError
from .kernels import get_kernel, kernel_variance

__all__ = [
    "QuadratureError",
    "TruncatedGamma",
    "expgamma_abc_likelihood",
    "expgamma_bias2",
    "expgamma_abc_posterior",
    "expgamma_abc_posterior_cdf",
    "gaussian_abc_likelihood",
    "gaussian_abc_posterior",
    "uniform_kernel_posterior_cdfdiff",
    "binomial_match_prob",
    "quadrature_abc_likelihood",
    "second_order_bias",
    "second_order_posterior_bias",
    "expgamma_posterior_bias",
    "count_posterior",
    "prior_predictive_count_probs",
    "discrete_mixture_posterior",
    "DiscreteMixture",
    "cdf_from_pdf",
]

GAUSSIAN_TRUNCATION = 12.0


class QuadratureError(AbcError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


# ------------------------------------------------------------ exp-gamma

def _log_two_sinh(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):  # x = 0 gives -inf, i.e. a zero factor
        return x + np.log(-np.expm1(-2.0 * x))


def expgamma_abc_likelihood(y, theta, h):
    """ABC likelihood of one Exp(theta) observation ``y`` under a uniform kernel on [-h, h].

    For ``0 < h < y`` this is ``exp(-theta y) (exp(theta h) - exp(-theta h)) / (2h)``;
    for ``h >= y`` the window is cut at 0 and the exact CDF difference is used.
    ``h = 0`` gives the likelihood ``theta exp(-theta y)``.
    """
    theta = np.asarray(theta, dtype=float)
    if h < 0:
        raise ValueError("h must be non-negative")
    if h == 0:
        out = theta * np.exp(-theta * y)
    elif h < y:
        out = np.exp(-theta * y + _log_two_sinh(theta * h)) / (2.0 * h)
    else:
        out = -np.expm1(-theta * (y + h)) / (2.0 * h)
    return float(out) if out.ndim == 0 else out


def second_order_bias(kernel, h, p_dd):
    """``h^2 sigma_K^2 p'' / 2``, the leading term of ``p_ABC - p`` as ``h -> 0``."""
    return 0.5 * h * h * kernel_variance(kernel) * np.asarray(p_dd, dtype=float)


def expgamma_bias2(y, theta, h):
    """Second-order bias of the uniform-kernel ABC likelihood: ``h^2 theta^3 exp(-theta y) / 6``."""
    theta = np.asarray(theta, dtype=float)
    out = second_order_bias("uniform", h, theta**3 * np.exp(-theta * y))
    return float(out) if out.ndim == 0 else out


def expgamma_abc_posterior(theta, y, alpha, beta, h):
    """ABC posterior density for one Exp(theta) observation, Gamma(alpha, beta) prior,
    uniform kernel of half-width ``h``.

    ``pi(theta) ∝ theta^(alpha-1) exp(-theta (y + beta)) (exp(theta h) - exp(-theta h))``,
    normalised by ``Gamma(alpha) ((y + beta - h)^-alpha - (y + beta + h)^-alpha)``.
    Requires ``0 <= h < y + beta``; ``h = 0`` gives the Gamma(alpha + 1, y + beta)
    posterior. Evaluated in logs so small ``h`` stays accurate.
    """
    theta = np.asarray(theta, dtype=float)
    a, b = y + beta - h, y + beta + h
    if not 0 <= h < y + beta:
        raise ValueError("need 0 <= h < y + beta")
    if h == 0:
        out = stats.gamma.pdf(theta, alpha + 1, scale=1.0 / (y + beta))
        return float(out) if out.ndim == 0 else out
    pos = theta > 0
    t = np.where(pos, theta, 1.0)
    log_norm = special.gammaln(alpha) - alpha * np.log(b) + np.log(np.expm1(alpha * np.log1p(2 * h / a)))
    logp = (alpha - 1) * np.log(t) - t * (y + beta) + _log_two_sinh(t * h) - log_norm
    out = np.where(pos, np.exp(logp), 0.0)
    return float(out) if out.ndim == 0 else out


def cdf_from_pdf(pdf, lo, hi, n=2001):
    """Tabulate the CDF of ``pdf`` on ``[lo, hi]`` by piecewise adaptive quadrature.

    Returns a vectorised callable that interpolates the table with a
    monotone cubic. The table is normalised by its total mass.
    """
    grid = np.linspace(lo, hi, n)
    pieces = np.array([
        integrate.quad(pdf, grid[i], grid[i + 1], epsabs=1e-14, epsrel=1e-12)[0]
        for i in range(n - 1)
    ])
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    interp = PchipInterpolator(grid, cum / cum[-1])

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.clip(interp(np.clip(x, lo, hi)), 0.0, 1.0)

    cdf.mass = cum[-1]
    return cdf


def expgamma_abc_posterior_cdf(y, alpha, beta, h, upper=None):
    """CDF of :func:`expgamma_abc_posterior`, by numerical integration."""
    if upper is None:
        upper = stats.gamma.ppf(1 - 1e-14, alpha + 1, scale=1.0 / (y + beta - h))
    return cdf_from_pdf(lambda t: expgamma_abc_posterior(t, y, alpha, beta, h), 0.0, upper)


# -------------------------------------------------------------- gaussian

def gaussian_abc_likelihood(ybar_obs, theta, sigma0, n, h, omega=1.0):
    """Gaussian-kernel ABC likelihood of the sample mean: N(theta, sigma0^2/(omega n) + h^2) at ``ybar_obs``."""
    var = sigma0**2 / (omega * n) + h * h
    out = stats.norm.pdf(ybar_obs, loc=np.asarray(theta, dtype=float), scale=np.sqrt(var))
    return float(out) if np.ndim(out) == 0 else out


def gaussian_abc_posterior(theta, ybar, sigma0, n, h, m0=0.0, s0=None, omega=1.0):
    """ABC posterior for a normal mean with Gaussian kernel of scale ``h``.

    The summary is a mean of ``omega * n`` observations, so the effective
    likelihood variance is ``sigma0^2 / (omega n) + h^2``. ``s0=None`` means a
    flat prior; otherwise the prior is N(m0, s0^2).

    Returns
    -------
    density : float or ndarray
    """
    mean, var = gaussian_abc_moments(ybar, sigma0, n, h, m0, s0, omega)
    out = stats.norm.pdf(np.asarray(theta, dtype=float), mean, np.sqrt(var))
    return float(out) if np.ndim(out) == 0 else out


def gaussian_abc_moments(ybar, sigma0, n, h, m0=0.0, s0=None, omega=1.0):
    if not (sigma0 > 0 and n > 0 and 0 < omega <= 1 and h >= 0):
        raise ValueError("need sigma0 > 0, n > 0, 0 < omega <= 1 and h >= 0")
    lik_prec = 1.0 / (sigma0**2 / (omega * n) + h * h)
    if s0 is None or np.isinf(s0):
        return float(ybar), 1.0 / lik_prec
    if not s0 > 0:
        raise ValueError("prior standard deviation must be positive")
    prec = s0**-2 + lik_prec
    return (m0 * s0**-2 + ybar * lik_prec) / prec, 1.0 / prec


def uniform_kernel_posterior_cdfdiff(P, prior_pdf, theta, y, h):
    """Unnormalised uniform-kernel ABC posterior ``pi(theta) (P(y + h) - P(y - h)) / (2h)``.

    ``P(x, theta)`` is the CDF of the data given ``theta``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    theta = np.asarray(theta, dtype=float)
    out = prior_pdf(theta) * (P(y + h, theta) - P(y - h, theta)) / (2.0 * h)
    return float(out) if np.ndim(out) == 0 else out


# ------------------------------------------------------------- binomial

def _beta_fn(a, b):
    """B(a, b) for positive integers as an exact fraction."""
    return Fraction(special.factorial(a - 1, exact=True) * special.factorial(b - 1, exact=True),
                    special.factorial(a + b - 1, exact=True))


def binomial_match_prob(scheme, s_obs, n=5):
    """Prior-predictive probability that a summary equals ``s_obs`` exactly.

    Two Binomial(n, theta) counts with theta ~ U(0, 1). ``s1`` is the ordered
    pair, ``s2`` the sorted pair and ``s3`` the total.
    """
    s_obs = tuple(int(v) for v in np.atleast_1d(s_obs))
    if any(v < 0 for v in s_obs):
        raise ValueError("counts must be non-negative")
    if scheme == "s3":
        if len(s_obs) != 1 or s_obs[0] > 2 * n:
            raise ValueError(f"s3 is a single total in 0..{2 * n}")
        return Fraction(1, 2 * n + 1)
    if len(s_obs) != 2 or max(s_obs) > n:
        raise ValueError(f"{scheme} is a pair of counts in 0..{n}")
    y1, y2 = s_obs
    p1 = comb(n, y1) * comb(n, y2) * _beta_fn(y1 + y2 + 1, 2 * n - y1 - y2 + 1)
    if scheme == "s1":
        return p1
    if scheme == "s2":
        if y1 > y2:
            raise ValueError("s2 is the sorted pair, smaller count first")
        return p1 if y1 == y2 else 2 * p1
    raise ValueError(f"unknown scheme {scheme!r}")


# ------------------------------------------------------------ quadrature

def quadrature_abc_likelihood(pdf, theta, y_obs, kernel, h, support=(-np.inf, np.inf),
                              rtol=1e-9):
    """``integral K_h(y - y_obs) p(y | theta) dy`` by adaptive quadrature.

    The integral is restricted to the kernel window (``+-12 h`` for the
    Gaussian kernel, whose neglected tail mass is below 1e-32) intersected
    with ``support``. ``h = 0`` returns ``pdf(y_obs, theta)``.
    """
    kern = get_kernel(kernel)
    if h == 0:
        return float(pdf(y_obs, theta))
    if not h > 0:
        raise ValueError("h must be non-negative")
    half = h if kern.compact else GAUSSIAN_TRUNCATION * h
    lo, hi = max(y_obs - half, support[0]), min(y_obs + half, support[1])
    if lo >= hi:
        return 0.0

    def integrand(y):
        return kern.peak * kern.ratio((y - y_obs) / h) / h * pdf(y, theta)

    pts = [y_obs] if lo < y_obs < hi else None
    val, err = integrate.quad(integrand, lo, hi, points=pts, epsabs=0.0, epsrel=rtol, limit=500)
    if err > max(rtol * abs(val), 1e-300) * 10:
        raise QuadratureError(f"quadrature error estimate {err:.3g} for value {val:.3g}")
    return float(val)


def second_order_posterior_bias(theta, y_obs, h, lik, lik_dd, abc_lik, prior_pdf,
                                kernel="uniform", support=(0.0, np.inf)):
    """Exact and second-order ABC posterior bias at ``theta``.

    Parameters
    ----------
    lik, lik_dd, abc_lik : callables
        ``p(y | theta)``, its second derivative in ``y``, and ``p_ABC(y | theta)``
        at scale ``h``, each called as ``f(y_obs, theta)``.
    prior_pdf : callable
    support : tuple
        Parameter range for the normalising integrals.

    Returns
    -------
    a_exact, a_second : ndarray
        ``pi_ABC(theta | y) - pi(theta | y)``, and the same with the exact
        likelihood bias replaced by its second-order term, i.e.
        ``b_hat pi / c_ABC + pi(theta | y) (c / c_ABC - 1)``.
    """
    theta = np.asarray(theta, dtype=float)

    def norm(f):
        val, err = integrate.quad(lambda t: f(y_obs, t) * prior_pdf(t), *support,
                                  epsabs=0.0, epsrel=1e-12, limit=500)
        return val

    c = norm(lik)
    c_abc = norm(abc_lik)
    prior = prior_pdf(theta)
    post = lik(y_obs, theta) * prior / c
    post_abc = abc_lik(y_obs, theta) * prior / c_abc
    b_hat = second_order_bias(kernel, h, lik_dd(y_obs, theta))
    a_exact = post_abc - post
    a_second = b_hat * prior / c_abc + post * (c / c_abc - 1.0)
    return a_exact, a_second


def expgamma_posterior_bias(theta, y, alpha, beta, h):
    """:func:`second_order_posterior_bias` for the exp-gamma model with a uniform kernel."""
    prior = stats.gamma(alpha, scale=1.0 / beta).pdf
    return second_order_posterior_bias(
        theta, y, h,
        lik=lambda yy, t: t * np.exp(-t * yy),
        lik_dd=lambda yy, t: t**3 * np.exp(-t * yy),
        abc_lik=lambda yy, t: expgamma_abc_likelihood(yy, t, h),
        prior_pdf=prior,
    )


# ------------------------------------------------------- count posteriors

class TruncatedGamma:
    """Gamma(shape, rate) restricted to ``(lo, hi)``."""

    def __init__(self, shape, rate, lo, hi):
        self.shape, self.rate, self.lo, self.hi = float(shape), float(rate), lo, hi
        self._base = stats.gamma(self.shape, scale=1.0 / self.rate)
        self._flo = self._base.cdf(lo)
        self._mass = self._base.cdf(hi) - self._flo
        if not self._mass > 0:
            raise ValueError("truncation interval carries no mass")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.lo) & (x < self.hi)
        return np.where(inside, self._base.pdf(x) / self._mass, 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return (self._base.cdf(x) - self._flo) / self._mass

    def mean(self):
        a, r = self.shape, self.rate
        num = special.gammainc(a + 1, r * self.hi) - special.gammainc(a + 1, r * self.lo)
        den = special.gammainc(a, r * self.hi) - special.gammainc(a, r * self.lo)
        return a / r * num / den


def count_posterior(n, c, lam_max=100.0):
    """Posterior of lambda given ``n ~ Poisson(c lambda)`` and lambda ~ U(0, lam_max)."""
    return TruncatedGamma(n + 1, c, 0.0, lam_max)


def prior_predictive_count_probs(counts, c, lam_max=100.0):
    """``Pr(n = k)`` for ``n ~ Poisson(c lambda)``, lambda ~ U(0, lam_max)."""
    k = np.asarray(counts, dtype=float)
    return np.where(k >= 0, special.gammainc(k + 1, c * lam_max) / (c * lam_max), 0.0)


class DiscreteMixture:
    """Average of count posteriors ``pi(lambda | n_obs + j)`` for ``|j| <= h``,
    weighted by the prior-predictive probability of each count."""

    def __init__(self, n_obs, h, c, lam_max=100.0):
        hs = int(np.floor(h))
        counts = np.arange(n_obs - hs, n_obs + hs + 1)
        counts = counts[counts >= 0]
        w = prior_predictive_count_probs(counts, c, lam_max)
        if counts.size == 0 or not w.sum() > 0:
            raise ValueError("no attainable count within the tolerance")
        self.counts = counts
        self.weights = w / w.sum()
        self.components = [count_posterior(int(k), c, lam_max) for k in counts]

    def pdf(self, lam):
        return sum(w * comp.pdf(lam) for w, comp in zip(self.weights, self.components))

    def cdf(self, lam):
        return sum(w * comp.cdf(lam) for w, comp in zip(self.weights, self.components))

    def mean(self):
        return float(sum(w * comp.mean() for w, comp in zip(self.weights, self.components)))


def discrete_mixture_posterior(lam, n_obs, h, c, lam_max=100.0):
    """Density at ``lam`` of the uniform-kernel ABC posterior for a Poisson count summary."""
    out = DiscreteMixture(n_obs, h, c, lam_max).pdf(np.asarray(lam, dtype=float))
    return float(out) if np.ndim(out) == 0 else out
