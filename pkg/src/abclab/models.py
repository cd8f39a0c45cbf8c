"""Generative models used by the samplers, with their summary-statistic schemes.

Every model works on batches: ``simulate(thetas, rng)`` takes an array of
shape (B, p) and returns one dataset per row, and each scheme maps that batch
of datasets to a (B, d) array of summaries. A model also carries its prior,
the observed dataset and, where one exists, the exact posterior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, stats

from . import coalescent
from .exceptions import CatalogError, DegenerateSummaryError
from .oracles import TruncatedGamma

__all__ = [
    "ProductPrior",
    "Model",
    "GandKParams",
    "gk_quantile",
    "gk_simulate",
    "gk_octile_summaries",
    "InclusionModelParams",
    "inclusion_simulate",
    "inclusion_count_coefficient",
    "binomial_pair",
    "exp_gamma",
    "gaussian_known_var",
    "poisson_gamma",
    "gaussian_split_means",
    "gandk",
    "spherical_inclusions",
    "coalescent_growth",
    "builtin_models",
    "get_model",
]


class ProductPrior:
    """Independent prior over the coordinates of theta.

    Parameters
    ----------
    components : sequence of frozen ``scipy.stats`` distributions
        One distribution per parameter coordinate.
    """

    def __init__(self, components):
        self.components = list(components)

    @property
    def dim(self):
        return len(self.components)

    def sample(self, rng, size):
        cols = [d.rvs(size=int(size), random_state=rng) for d in self.components]
        return np.column_stack(cols).astype(float)

    def density(self, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        dens = np.ones(thetas.shape[0])
        for j, d in enumerate(self.components):
            dens = dens * d.pdf(thetas[:, j])
        return dens


@dataclass
class Model:
    """A prior, a batch simulator and named summary schemes.

    Attributes
    ----------
    name : str
        Catalog id.
    param_names : tuple of str
    prior : ProductPrior
    simulator : callable
        ``simulator(thetas, rng) -> data`` for thetas of shape (B, p).
    schemes : mapping
        Scheme id to ``f(data) -> (B, d)`` summaries.
    observed : ndarray
        The observed dataset, in the same layout as one row of simulated data.
    posterior_pdf, posterior_cdf : callable, optional
        Exact posterior for one-parameter models (given the observed data).
    batch_size : int
        Suggested number of simulations per vectorised call.
    """

    name: str
    param_names: tuple
    prior: ProductPrior
    simulator: Callable
    schemes: Mapping[str, Callable]
    observed: np.ndarray
    posterior_pdf: Callable | None = None
    posterior_cdf: Callable | None = None
    batch_size: int = 100_000
    info: dict = field(default_factory=dict)

    @property
    def dim(self):
        return len(self.param_names)

    def prior_sample(self, rng, size):
        return self.prior.sample(rng, size)

    def prior_density(self, thetas):
        return self.prior.density(thetas)

    def simulate(self, thetas, rng):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return self.simulator(thetas, rng)

    def scheme(self, scheme):
        try:
            return self.schemes[scheme]
        except KeyError:
            raise CatalogError(
                f"model {self.name!r} has no scheme {scheme!r}; "
                f"available: {', '.join(self.schemes)}"
            ) from None

    def summarize(self, data, scheme):
        """Summaries of a batch of datasets, shape (B, d)."""
        s = np.asarray(self.scheme(scheme)(data), dtype=float)
        return s.reshape(s.shape[0], -1)

    def simulate_summaries(self, thetas, scheme, rng):
        return self.summarize(self.simulate(thetas, rng), scheme)

    def observed_summary(self, scheme):
        obs = np.asarray(self.observed)
        return self.summarize(obs[None, ...], scheme)[0]


# ---------------------------------------------------------------- g-and-k

@dataclass(frozen=True)
class GandKParams:
    """Location ``A``, scale ``B``, asymmetry ``g`` and kurtosis ``k`` (``c`` fixed at 0.8)."""

    A: float
    B: float
    g: float
    k: float
    c: float = 0.8

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("g-and-k scale B must be positive")
        if not self.k > -0.5:
            raise ValueError("g-and-k kurtosis k must exceed -1/2")
        if self.c != 0.8:
            raise ValueError("c is fixed at 0.8")


def _gk_transform(z, A, B, g, k, c=0.8):
    # (1 - exp(-gz)) / (1 + exp(-gz)) == tanh(gz / 2), which does not overflow
    return A + B * (1.0 + c * np.tanh(g * z / 2.0)) * (1.0 + z * z) ** k * z


def gk_quantile(q, p):
    """Quantile function of the g-and-k distribution at probability ``q``."""
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)):
        raise ValueError("quantile level must lie strictly between 0 and 1")
    out = _gk_transform(stats.norm.ppf(q), p.A, p.B, p.g, p.k, p.c)
    return float(out) if out.ndim == 0 else out


def gk_simulate(n, p, rng):
    """``n`` independent g-and-k draws, obtained by transforming standard normals."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return _gk_transform(rng.standard_normal(int(n)), p.A, p.B, p.g, p.k, p.c)


def _octile_ranks(n):
    # E_i = y_(ceil(i n / 8)), 1-based order statistics
    return np.array([int(np.ceil(i * n / 8.0)) - 1 for i in range(1, 8)])


def _octile_combinations(E):
    sb = E[..., 5] - E[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sg = (E[..., 5] + E[..., 1] - 2.0 * E[..., 3]) / sb
        sk = (E[..., 6] - E[..., 4] + E[..., 2] - E[..., 0]) / sb
    return np.stack([E[..., 3], sb, sg, sk], axis=-1), sb


def gk_octile_summaries(y):
    """Robust location, scale, skewness and kurtosis summaries from the octiles of ``y``.

    With ``E_1 <= ... <= E_7`` the sample octiles, returns
    ``(E_4, E_6 - E_2, (E_6 + E_2 - 2 E_4) / S_B, (E_7 - E_5 + E_3 - E_1) / S_B)``.
    """
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if y.size < 8:
        raise ValueError("need at least 8 observations for octiles")
    summ, sb = _octile_combinations(y[_octile_ranks(y.size)])
    if sb == 0:
        raise DegenerateSummaryError("octile scale S_B is zero", [1])
    return tuple(float(v) for v in summ)


def _octiles_batch(data):
    data = np.asarray(data, dtype=float)
    ranks = _octile_ranks(data.shape[1])
    E = np.partition(data, ranks, axis=1)[:, ranks]
    summ, _ = _octile_combinations(E)
    return summ


# ------------------------------------------------------- spherical inclusions

@dataclass(frozen=True)
class InclusionModelParams:
    """Poisson rate of sphere centres and the generalised Pareto diameter law.

    Diameters are ``v0 + X`` with ``X`` generalised Pareto (scale ``sigma``,
    shape ``xi``). ``area`` is the size of the observed cross-section, in the
    same units as the rate.
    """

    lam: float
    sigma: float = 1.5
    xi: float = 0.1
    v0: float = 5.0
    area: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("Poisson rate must be non-negative")
        if not self.sigma > 0:
            raise ValueError("GPD scale must be positive")
        if not 0 < self.xi < 1:
            raise ValueError("size-biased sampling needs 0 < xi < 1")
        if not self.area > 0:
            raise ValueError("area must be positive")

    @property
    def mean_diameter(self):
        return self.v0 + self.sigma / (1.0 - self.xi)


def _size_biased_diameters(m, sigma, xi, v0, rng):
    """``m`` draws from the density proportional to ``v f(v)``, f the shifted GPD.

    ``v f(v) = v0 f(v) + x f(x)``: a mixture of the plain law (weight
    ``v0 / E[V]``) and the length-biased exceedance. The GPD is an
    exponential with Gamma(1/xi, rate sigma/xi) rate, so its length-biased
    version is Gamma(2, rate R) with R ~ Gamma(1/xi - 1, rate sigma/xi).
    """
    mean_x = sigma / (1.0 - xi)
    plain = rng.random(m) < v0 / (v0 + mean_x)
    n_plain = int(plain.sum())
    x = np.empty(m)
    x[plain] = sigma / xi * ((1.0 - rng.random(n_plain)) ** (-xi) - 1.0)
    rate = rng.gamma(1.0 / xi - 1.0, xi / sigma, size=m - n_plain)
    x[~plain] = rng.gamma(2.0, 1.0, size=m - n_plain) / rate
    return v0 + x


def inclusion_simulate(p, rng):
    """Observed cross-section diameters above ``v0`` and their count.

    Spheres hitting the section plane number Poisson(``lam * area * E[V]``)
    and have size-biased diameters; a sphere of diameter ``V`` cut at a
    uniform depth shows a disc of diameter ``V sqrt(1 - U^2)``. Discs no larger
    than ``v0`` are not recorded.
    """
    m = int(rng.poisson(p.lam * p.area * p.mean_diameter))
    v = _size_biased_diameters(m, p.sigma, p.xi, p.v0, rng)
    y = v * np.sqrt(1.0 - rng.random(m) ** 2)
    y = y[y > p.v0]
    return y, int(y.size)


def inclusion_count_coefficient(sigma=1.5, xi=0.1, v0=5.0, area=1.0):
    """``c`` in ``E[n | lam] = c lam``: ``area * E[sqrt(V^2 - v0^2)]`` by quadrature."""
    gpd = stats.genpareto(xi, loc=v0, scale=sigma)
    val, _ = integrate.quad(
        lambda v: np.sqrt(v * v - v0 * v0) * gpd.pdf(v), v0, np.inf, epsabs=0, epsrel=1e-11
    )
    return area * val


def _inclusion_counts(lams, sigma, xi, v0, area, rng, chunk=2_000_000):
    mean_v = v0 + sigma / (1.0 - xi)
    m = rng.poisson(lams * area * mean_v)
    counts = np.zeros(lams.shape[0], dtype=np.int64)
    # candidates are generated in blocks of whole replicates to bound memory
    starts = np.concatenate([[0], np.cumsum(m)])
    lo = 0
    while lo < lams.shape[0]:
        hi = int(np.searchsorted(starts, starts[lo] + chunk, side="right")) - 1
        hi = max(hi, lo + 1)
        hi = min(hi, lams.shape[0])
        tot = int(starts[hi] - starts[lo])
        v = _size_biased_diameters(tot, sigma, xi, v0, rng)
        keep = v * np.sqrt(1.0 - rng.random(tot) ** 2) > v0
        owner = np.repeat(np.arange(lo, hi), m[lo:hi])
        counts[lo:hi] = np.bincount(owner[keep] - lo, minlength=hi - lo)
        lo = hi
    return counts


# ------------------------------------------------------------ model builders

def _uniform(lo, hi):
    return stats.uniform(loc=lo, scale=hi - lo)


def binomial_pair(n=5, y_obs=(1, 2)):
    """Two Binomial(n, theta) counts with a uniform prior on theta.

    Schemes: ``s1`` the pair itself, ``s2`` the sorted pair, ``s3`` the sum.
    """
    def simulate(thetas, rng):
        return rng.binomial(n, np.repeat(thetas[:, :1], 2, axis=1))

    schemes = {
        "s1": lambda d: d,
        "s2": lambda d: np.sort(d, axis=1),
        "s3": lambda d: d.sum(axis=1, keepdims=True),
    }
    y_obs = np.asarray(y_obs)
    post = stats.beta(1 + y_obs.sum(), 1 + 2 * n - y_obs.sum())
    return Model("binomial-pair", ("theta",), ProductPrior([_uniform(0, 1)]), simulate,
                 schemes, y_obs, post.pdf, post.cdf, info={"n": n})


def exp_gamma(alpha=1.2, beta=1.2, y_obs=2.0):
    """One Exp(theta) observation with a Gamma(alpha, rate beta) prior."""
    def simulate(thetas, rng):
        return rng.standard_exponential((thetas.shape[0], 1)) / thetas[:, :1]

    post = stats.gamma(alpha + 1, scale=1.0 / (beta + y_obs))
    return Model("exp-gamma", ("theta",), ProductPrior([stats.gamma(alpha, scale=1.0 / beta)]),
                 simulate, {"y": lambda d: d}, np.array([y_obs]), post.pdf, post.cdf,
                 info={"alpha": alpha, "beta": beta, "y_obs": y_obs})


def gaussian_known_var(n=10, sigma0=np.sqrt(10.0), n_partial=5, prior="flat",
                       m0=0.0, s0=1.0, flat_range=10.0, y_obs=None):
    """``n`` draws from N(theta, sigma0^2) with known ``sigma0``.

    Schemes: ``mean`` (the sufficient full-sample mean) and ``partial`` (the
    mean of the first ``n_partial`` observations). ``prior="flat"`` is a
    uniform prior on ``(-flat_range, flat_range)``, wide enough to stand in for
    the improper flat prior; ``prior="normal"`` is N(m0, s0^2).
    """
    if prior == "flat":
        pr = _uniform(-flat_range, flat_range)
    elif prior == "normal":
        pr = stats.norm(m0, s0)
    else:
        raise ValueError(f"unknown prior {prior!r}")
    y_obs = np.zeros(n) if y_obs is None else np.asarray(y_obs, dtype=float)

    def simulate(thetas, rng):
        return thetas[:, :1] + sigma0 * rng.standard_normal((thetas.shape[0], n))

    schemes = {
        "mean": lambda d: d.mean(axis=1, keepdims=True),
        "partial": lambda d: d[:, :n_partial].mean(axis=1, keepdims=True),
    }
    return Model("gaussian-known-var", ("theta",), ProductPrior([pr]), simulate, schemes,
                 y_obs, info={"n": n, "sigma0": sigma0, "n_partial": n_partial,
                              "prior": prior, "m0": m0, "s0": s0})


def poisson_gamma(alpha=1.0, beta=1.0, y_obs=(0, 0, 0, 0, 5)):
    """Poisson(lambda) counts with a Gamma(alpha, rate beta) prior.

    Schemes: ``mean``, ``sd`` (sample standard deviation with an ``n - 1``
    denominator) and ``mean-sd``.
    """
    y_obs = np.asarray(y_obs)
    n = y_obs.size

    def simulate(thetas, rng):
        return rng.poisson(np.repeat(thetas[:, :1], n, axis=1))

    def mean(d):
        return d.mean(axis=1, keepdims=True)

    def sd(d):
        # integer sums make the value independent of the order of the counts,
        # so exact matching of permuted samples is reliable
        d = np.asarray(d, dtype=np.int64)
        tot = d.sum(axis=1, keepdims=True)
        ss = (d * d).sum(axis=1, keepdims=True)
        return np.sqrt((n * ss - tot * tot) / (n * (n - 1.0)))

    schemes = {"mean": mean, "sd": sd, "mean-sd": lambda d: np.hstack([mean(d), sd(d)])}
    post = stats.gamma(alpha + y_obs.sum(), scale=1.0 / (beta + n))
    return Model("poisson-gamma", ("lambda",), ProductPrior([stats.gamma(alpha, scale=1.0 / beta)]),
                 simulate, schemes, y_obs, post.pdf, post.cdf,
                 batch_size=200_000, info={"alpha": alpha, "beta": beta})


SPLIT_MEANS_COV = {
    "s1": np.array([[1 / 40, 0.0], [0.0, 1 / 10]]),
    "s2": np.array([[2 / 25, -1 / 25], [-1 / 25, 1 / 25]]),
}


def gaussian_split_means(n=50, bound=5.0):
    """``n = 50`` draws from N(theta, 1) with theta ~ U(-5, 5).

    Both schemes are sufficient: ``s1 = (mean y[0:40], mean y[40:50])`` and
    ``s2 = (mean y[0:25] - mean y[25:50], mean y[25:50])``. The exact
    posterior given all-zero data is N(0, 1/50) truncated to the prior range.
    """
    def simulate(thetas, rng):
        return thetas[:, :1] + rng.standard_normal((thetas.shape[0], n))

    def s1(d):
        return np.column_stack([d[:, :40].mean(axis=1), d[:, 40:].mean(axis=1)])

    def s2(d):
        tail = d[:, 25:].mean(axis=1)
        return np.column_stack([d[:, :25].mean(axis=1) - tail, tail])

    sd = 1.0 / np.sqrt(n)
    post = stats.truncnorm(-bound / sd, bound / sd, loc=0.0, scale=sd)
    return Model("gaussian-split-means", ("theta",), ProductPrior([_uniform(-bound, bound)]),
                 simulate, {"s1": s1, "s2": s2}, np.zeros(n), post.pdf, post.cdf,
                 batch_size=20_000, info={"cov": SPLIT_MEANS_COV})


GK_TRUTH = GandKParams(3.0, 1.0, 2.0, 0.5)


def gandk(n=1000, truth=GK_TRUTH, data_seed=20_170_309):
    """g-and-k model with priors A ~ N(1, 5), B ~ N(0.25, 2) restricted to B > 0,
    g ~ U(0, 10), k ~ U(0, 1); normal priors are given as (mean, variance).

    The observed sample is ``n`` draws at ``truth`` from a fixed seed.
    """
    sd_b = np.sqrt(2.0)
    prior = ProductPrior([
        stats.norm(1.0, np.sqrt(5.0)),
        stats.truncnorm(-0.25 / sd_b, np.inf, loc=0.25, scale=sd_b),
        _uniform(0.0, 10.0),
        _uniform(0.0, 1.0),
    ])

    def simulate(thetas, rng):
        z = rng.standard_normal((thetas.shape[0], n))
        A, B, g, k = (thetas[:, j:j + 1] for j in range(4))
        return _gk_transform(z, A, B, g, k)

    y_obs = gk_simulate(n, truth, np.random.default_rng(data_seed))
    return Model("gandk", ("A", "B", "g", "k"), prior, simulate, {"octiles": _octiles_batch},
                 y_obs, batch_size=2_000, info={"truth": truth, "n": n})


def spherical_inclusions(n_obs=112, sigma=1.5, xi=0.1, v0=5.0, area=0.5, lam_max=100.0):
    """Count of inclusion cross-sections above ``v0`` with lambda ~ U(0, lam_max).

    ``n | lambda`` is Poisson(``c lambda``) with ``c`` from
    :func:`inclusion_count_coefficient`; the default ``area = 0.5`` gives
    ``c`` close to 2. The only scheme, ``count``, is sufficient for lambda.
    """
    c = inclusion_count_coefficient(sigma, xi, v0, area)

    def simulate(thetas, rng):
        return _inclusion_counts(thetas[:, 0], sigma, xi, v0, area, rng)[:, None]

    post = TruncatedGamma(n_obs + 1, c, 0.0, lam_max)
    return Model("spherical-inclusions", ("lambda",), ProductPrior([_uniform(0.0, lam_max)]),
                 simulate, {"count": lambda d: d}, np.array([n_obs]), post.pdf, post.cdf,
                 batch_size=50_000,
                 info={"c": c, "sigma": sigma, "xi": xi, "v0": v0, "area": area,
                       "lam_max": lam_max})


_DATASETS = {"table1": "table1_simulated.txt", "biaka": "biaka_9pMB8.txt"}


def _dataset_path(name):
    from importlib import resources

    return resources.files("abclab").joinpath("data", _DATASETS[name])


def coalescent_growth(dataset="table1", prior_max=200.0):
    """Coalescent with exponential growth, parameters ``(theta0, alpha)``.

    ``alpha`` is the ms growth rate, so the rate in 2N0 units is ``alpha / 2``.
    Both parameters have U(0, prior_max) priors. Simulated datasets are
    site-frequency spectra, which determine all four summaries; scheme
    ``stats`` gives ``(pi0, S, D, H0)``. Tajima's D is NaN without segregating
    sites; ``info["fill_undefined"]`` records the value (0, as ms reports it)
    used in its place when estimating prior-predictive scales.
    """
    seqs = coalescent.parse_seq_table(_dataset_path(dataset).read_text())
    n = seqs.n
    sfs_obs = np.bincount(seqs.derived_counts, minlength=n + 1)[1:n]

    def simulate(thetas, rng):
        beta = thetas[:, 1] / 2.0
        return coalescent.simulate_sfs(n, thetas[:, 0], beta, rng, reps=thetas.shape[0])

    prior = ProductPrior([_uniform(0.0, prior_max), _uniform(0.0, prior_max)])
    return Model("coalescent-growth", ("theta0", "alpha"), prior, simulate,
                 {"stats": lambda d: coalescent.sfs_summaries(d, n)}, sfs_obs,
                 batch_size=5_000, info={"n": n, "dataset": dataset, "fill_undefined": 0.0})


_BUILDERS = {
    "binomial-pair": binomial_pair,
    "exp-gamma": exp_gamma,
    "gaussian-known-var": gaussian_known_var,
    "poisson-gamma": poisson_gamma,
    "gaussian-split-means": gaussian_split_means,
    "gandk": gandk,
    "spherical-inclusions": spherical_inclusions,
    "coalescent-growth": coalescent_growth,
}


def builtin_models():
    """Default-configured instances of every catalogued model, keyed by id."""
    return {name: build() for name, build in _BUILDERS.items()}


def get_model(name, **options):
    """Build catalogued model ``name``; ``options`` go to its constructor."""
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise CatalogError(
            f"unknown model {name!r}; available: {', '.join(sorted(_BUILDERS))}"
        ) from None
    return build(**options)
