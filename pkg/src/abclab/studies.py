"""Named built-in studies, run at desk scale.

Each study returns a :class:`StudyResult` whose rows are plot- or table-ready
records. ``scale`` multiplies the default sample sizes; the defaults are
chosen to finish in seconds to a few minutes rather than to match the
original sample sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from . import oracles
from .harness import ks_distance
from .metrics import Euclidean, Mahalanobis, WeightedEuclidean, estimate_covariance, prior_predictive_scales
from .models import SPLIT_MEANS_COV, get_model
from .samplers import CdfDiscrepancy, abc_adaptive, abc_quantile, abc_rejection
from .exceptions import CatalogError

__all__ = ["StudyResult", "STUDIES", "run_study"]


@dataclass
class StudyResult:
    name: str
    rows: list
    meta: dict = field(default_factory=dict)

    @property
    def columns(self):
        cols = []
        for row in self.rows:
            cols.extend(k for k in row if k not in cols)
        return cols

    def to_csv(self):
        cols = self.columns
        lines = [f"# study = {self.name}"]
        lines += [f"# {k} = {v}" for k, v in self.meta.items()]
        lines.append(",".join(cols))
        for row in self.rows:
            lines.append(",".join(_fmt(row.get(c, "")) for c in cols))
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


def _n(base, scale, minimum=10):
    return max(minimum, int(round(base * scale)))


# ----------------------------------------------------------------- studies

def binomial_rates(scale=1.0, seed=1):
    """Exact-match acceptance rates of the three binomial summary schemes."""
    model = get_model("binomial-pair")
    rng = _rng(seed, 1)
    draws = _n(1_000_000, scale)
    thetas = model.prior_sample(rng, draws)
    data = model.simulate(thetas, rng)
    rows = []
    for scheme in ("s1", "s2", "s3"):
        s = model.summarize(data, scheme)
        hit = int(np.all(s == model.observed_summary(scheme), axis=1).sum())
        exact = float(oracles.binomial_match_prob(scheme, model.observed_summary(scheme), 5))
        se = np.sqrt(exact * (1 - exact) / draws)
        rows.append({"scheme": scheme, "draws": draws, "matches": hit, "rate": hit / draws,
                     "exact": exact, "se": se, "z": (hit / draws - exact) / se})
    return StudyResult("binomial-rates", rows)


def expgamma_posterior(scale=1.0, seed=1, hs=(0.01, 0.91, 1.8, 2.7)):
    """Uniform-kernel ABC for one exponential observation at several scales."""
    model = get_model("exp-gamma")
    a, b, y = model.info["alpha"], model.info["beta"], model.info["y_obs"]
    N = _n(50_000, scale)
    rows = []
    for i, h in enumerate(hs):
        out = abc_rejection(model, "y", [y], Euclidean(), "uniform", h, N, _rng(seed, 2, i))
        th = out.thetas[:, 0]
        pdf = lambda t: oracles.expgamma_abc_posterior(t, y, a, b, h)  # noqa: E731
        mean = integrate.quad(lambda t: t * pdf(t), 0, np.inf)[0]
        var = integrate.quad(lambda t: (t - mean) ** 2 * pdf(t), 0, np.inf)[0]
        ks = ks_distance(th, oracles.expgamma_abc_posterior_cdf(y, a, b, h))
        rows.append({"h": h, "N": N, "sims": out.sims_used, "mean": th.mean(),
                     "oracle_mean": mean, "var": th.var(ddof=1), "oracle_var": var, "ks": ks})
    return StudyResult("expgamma-posterior", rows, {"alpha": a, "beta": b, "y_obs": y})


def gaussian_variance(scale=1.0, seed=1, hs=(0.1, 0.5, 1.0)):
    """Gaussian-kernel ABC for a normal mean: the posterior variance grows by ``h^2``."""
    model = get_model("gaussian-known-var")
    info = model.info
    base_var = info["sigma0"] ** 2 / info["n"]
    N = _n(20_000, scale)
    rows = []
    for i, h in enumerate(hs):
        out = abc_rejection(model, "mean", model.observed_summary("mean"), Euclidean(),
                            "gaussian", h, N, _rng(seed, 3, i))
        th = out.thetas[:, 0]
        target = base_var + h * h
        rows.append({"h": h, "N": N, "sims": out.sims_used, "mean": th.mean(),
                     "mean_se": np.sqrt(target / N), "var": th.var(ddof=1), "target_var": target,
                     "rel_err": th.var(ddof=1) / target - 1})
    return StudyResult("gaussian-variance", rows, {"sigma0^2/n": base_var})


def poisson_bias(scale=1.0, seed=1, replicates=20, h=0.3):
    """Poisson counts: the sufficient mean alone versus mean plus standard deviation."""
    model = get_model("poisson-gamma")
    post = stats.gamma(model.info["alpha"] + model.observed.sum(),
                       scale=1.0 / (model.info["beta"] + model.observed.size))
    N = _n(2_000, scale)
    rows = []
    for r in range(replicates):
        rng = _rng(seed, 4, r)
        row = {"replicate": r, "N": N}
        for scheme in ("mean", "sd", "mean-sd"):
            for hh in (0.0, h):
                out = abc_rejection(model, scheme, model.observed_summary(scheme), Euclidean(),
                                    "uniform", hh, N, rng)
                row[f"mean[{scheme},h={hh}]"] = out.thetas[:, 0].mean()
                if scheme == "mean" and hh == 0:
                    row["ks[mean,h=0]"] = ks_distance(out.thetas[:, 0], post.cdf)
        rows.append(row)
    return StudyResult("poisson-bias", rows, {"posterior_mean": post.mean()})


KERNELS = ("uniform", "epanechnikov", "triangular", "gaussian")
COV_FORMS = {"s1": ("identity", "true"), "s2": ("identity", "diagonal", "true")}


def _cov_matrix(scheme, form):
    cov = SPLIT_MEANS_COV[scheme]
    return {"identity": np.eye(2), "diagonal": np.diag(np.diag(cov)), "true": cov}[form]


def covariance_study(scale=1.0, seed=1, replicates=20, N=None, kernels=KERNELS, root=True):
    """Adaptive-sampler cost per particle for each kernel and covariance form.

    Every configuration of a replicate starts from the same seed, so the
    comparisons within a replicate use common random numbers. Kernels act on
    the square-rooted Mahalanobis distance unless ``root=False``.
    """
    model = get_model("gaussian-split-means")
    N = int(N or _n(100, scale, minimum=2))
    stop = CdfDiscrepancy(model.posterior_cdf)
    rows = []
    for r in range(replicates):
        for scheme, forms in COV_FORMS.items():
            s_obs = model.observed_summary(scheme)
            for form in forms:
                metric = Mahalanobis(_cov_matrix(scheme, form), root=root)
                for kern in kernels:
                    out = abc_adaptive(model, scheme, s_obs, metric, kern, N, stop,
                                       _rng(seed, 9, r))
                    rows.append({"replicate": r, "scheme": scheme, "sigma": form,
                                 "kernel": kern, "N": N, "h_final": out.h_final,
                                 "sims_per_particle": out.sims_per_particle})
    return StudyResult("covariance-study", rows, {"stop_level": stop.level(N), "root": root})


def gandk_study(scale=1.0, seed=1, quantile=0.005):
    """g-and-k inference with octile summaries and a pilot Mahalanobis distance."""
    model = get_model("gandk")
    truth = model.info["truth"]
    theta0 = np.array([truth.A, truth.B, truth.g, truth.k])
    rng = _rng(seed, 12)
    cov = estimate_covariance(model, "octiles", theta0, _n(2000, scale, 10), rng)
    out = abc_quantile(model, "octiles", model.observed_summary("octiles"), Mahalanobis(cov),
                       _n(100_000, scale, 200), quantile, rng)
    lo, hi = np.quantile(out.thetas, [0.025, 0.975], axis=0)
    rows = [{"param": name, "truth": t, "mean": m, "lo95": a, "hi95": b,
             "covered": bool(a <= t <= b)}
            for name, t, m, a, b in zip(model.param_names, theta0, out.thetas.mean(0), lo, hi)]
    return StudyResult("gandk", rows, {"h": out.h_final, "accepted": out.N,
                                       "sims": out.sims_used}), out


def stereology(scale=1.0, seed=1, hs=(0, 10, 20)):
    """Inclusion-count ABC at several tolerances against the count-posterior oracles."""
    model = get_model("spherical-inclusions")
    c, lam_max = model.info["c"], model.info["lam_max"]
    n_obs = int(model.observed[0])
    N = _n(20_000, scale)
    rows, samples = [], {}
    for i, h in enumerate(hs):
        out = abc_rejection(model, "count", [n_obs], Euclidean(), "uniform", h, N,
                            _rng(seed, 11, i))
        oracle = oracles.DiscreteMixture(n_obs, h, c, lam_max)
        samples[h] = out.thetas[:, 0]
        rows.append({"h": h, "N": N, "sims": out.sims_used, "accept_rate": out.accept_rate,
                     "oracle_rate": float(oracles.prior_predictive_count_probs(
                         oracle.counts, c, lam_max).sum()),
                     "mean": samples[h].mean(), "oracle_mean": oracle.mean(),
                     "ks": ks_distance(samples[h], oracle.cdf)})
    return StudyResult("stereology", rows, {"c": c, "n_obs": n_obs}), samples


def coalescent_growth(scale=1.0, seed=1, keep=1000):
    """Growth-rate inference from four summaries with prior-predictive scaling."""
    model = get_model("coalescent-growth")
    rng = _rng(seed, 8)
    scales = prior_predictive_scales(model, "stats", _n(100_000, scale, 100), rng,
                                     model.info["fill_undefined"])
    n_sims = _n(200_000, scale, 1000)
    out = abc_quantile(model, "stats", model.observed_summary("stats"),
                       WeightedEuclidean.from_scales(scales), n_sims,
                       min(1.0, keep / n_sims), rng)
    lo, hi = np.quantile(out.thetas, [0.025, 0.975], axis=0)
    rows = [{"param": name, "mean": m, "median": med, "lo95": a, "hi95": b}
            for name, m, med, a, b in zip(model.param_names, out.thetas.mean(0),
                                          np.median(out.thetas, 0), lo, hi)]
    meta = {"scale_" + k: v for k, v in zip(("pi0", "S", "D", "H0"), scales)}
    meta.update(h=out.h_final, accepted=out.N, sims=out.sims_used)
    return StudyResult("coalescent-growth", rows, meta), out


def _first(result):
    return result[0] if isinstance(result, tuple) else result


STUDIES = {
    "binomial-rates": binomial_rates,
    "expgamma-posterior": expgamma_posterior,
    "gaussian-variance": gaussian_variance,
    "poisson-bias": poisson_bias,
    "covariance-study": covariance_study,
    "gandk": gandk_study,
    "stereology": stereology,
    "coalescent-growth": coalescent_growth,
}


def run_study(name, scale=1.0, seed=1):
    """Run built-in study ``name`` and return its :class:`StudyResult`."""
    try:
        fn = STUDIES[name]
    except KeyError:
        raise CatalogError(f"unknown study {name!r}; available: {', '.join(STUDIES)}") from None
    return _first(fn(scale=scale, seed=seed))
