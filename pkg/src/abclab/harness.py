"""Experiment configuration, runs, CSV artifacts and output diagnostics."""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import integrate, stats

from . import metrics as metrics_mod
from .exceptions import CatalogError, ParseError
from .models import get_model
from .samplers import (
    DEFAULT_BUDGET,
    CdfDiscrepancy,
    MaxSims,
    TargetScale,
    WeightedSample,
    abc_adaptive,
    abc_rejection,
)

__all__ = [
    "silverman_bandwidth",
    "kde_estimate",
    "ks_distance",
    "ExperimentConfig",
    "parse_config",
    "RunReport",
    "run_experiment",
    "write_report_csv",
    "parse_report_csv",
    "replicate_seeds",
]


def silverman_bandwidth(samples):
    """Rule-of-thumb bandwidth ``1.06 sd n^(-1/5)``."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        return 1.0
    return 1.06 * np.std(samples, ddof=1) * samples.size ** (-0.2)


def kde_estimate(samples, grid, weights=None, bandwidth=None, normalize=True, chunk=4096):
    """Weighted Gaussian kernel density estimate evaluated on ``grid``.

    Parameters
    ----------
    samples : array_like
    grid : array_like
        Evaluation points, increasing.
    weights : array_like, optional
        Non-negative, not all zero. Defaults to equal weights.
    bandwidth : float, optional
        Defaults to :func:`silverman_bandwidth`.
    normalize : bool
        Rescale so the estimate integrates to 1 over ``grid`` (trapezoid rule).
    """
    samples = np.asarray(samples, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float)
    if samples.size == 0:
        raise ValueError("cannot estimate a density from an empty sample")
    if weights is None:
        weights = np.ones_like(samples)
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape != samples.shape or np.any(weights < 0) or not weights.sum() > 0:
        raise ValueError("weights must be non-negative, not all zero, one per sample")
    bw = silverman_bandwidth(samples) if bandwidth is None else float(bandwidth)
    if not bw > 0:
        raise ValueError("bandwidth must be positive")
    w = weights / weights.sum()
    dens = np.zeros(grid.shape)
    for lo in range(0, samples.size, chunk):
        z = (grid[:, None] - samples[None, lo:lo + chunk]) / bw
        dens += np.exp(-0.5 * z * z) @ w[lo:lo + chunk]
    dens /= bw * np.sqrt(2.0 * np.pi)
    if normalize and grid.size > 1:
        area = integrate.trapezoid(dens, grid)
        if area > 0:
            dens = dens / area
    return dens


def ks_distance(samples, cdf):
    """Kolmogorov distance ``sup |F_N - F|`` between a sample and a CDF."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("empty sample")
    return float(stats.kstest(samples, cdf).statistic)


def replicate_seeds(seed, count):
    """Independent child seed sequences for ``count`` replicates of a run."""
    return np.random.SeedSequence(seed).spawn(count)


# ------------------------------------------------------------------ config

def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


@dataclass
class ExperimentConfig:
    """One sampler run.

    ``h`` selects fixed-scale rejection; ``stop_rule`` selects the adaptive
    sampler and reads ``target:<h>``, ``max_sims:<count>`` or
    ``cdf[:<threshold>]`` (the last needs a model with a known posterior).
    ``metric`` is ``euclidean``, ``scaled``, ``pilot-mahalanobis`` or
    ``mahalanobis`` (model's analytic summary covariance, when it has one).
    """

    model: str
    scheme: str
    seed: int
    N: int = 1000
    metric: str = "euclidean"
    kernel: str = "uniform"
    h: float | None = None
    stop_rule: str | None = None
    budget: int = DEFAULT_BUDGET
    output: str | None = None
    theta_star: tuple | None = None
    pilot_m: int = 2000
    scale_m: int = 10000

    def __post_init__(self):
        self.N = int(self.N)
        self.seed = int(self.seed)
        self.budget = int(self.budget)
        self.pilot_m = int(self.pilot_m)
        self.scale_m = int(self.scale_m)
        if self.h is not None:
            self.h = float(self.h)
        if self.theta_star is not None and not isinstance(self.theta_star, tuple):
            self.theta_star = _floats(self.theta_star)
        if self.N < 1:
            raise ValueError("N must be positive")
        if (self.h is None) == (self.stop_rule is None):
            raise ValueError("give exactly one of h (fixed scale) or stop_rule (adaptive)")

    def items(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            if isinstance(val, tuple):
                val = ",".join(repr(v) for v in val)
            yield f.name, val


_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config(text):
    """Parse ``key = value`` lines (``#`` starts a comment) into an :class:`ExperimentConfig`."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        values[key] = val
    if "seed" not in values:
        raise ParseError("config must set a seed")
    for key in ("model", "scheme"):
        if key not in values:
            raise ParseError(f"config must set {key}")
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as err:
        raise ParseError(str(err)) from err


def _parse_stop_rule(spec, model):
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "target":
        return TargetScale(float(arg))
    if kind == "max_sims":
        return MaxSims(int(float(arg)))
    if kind == "cdf":
        if model.posterior_cdf is None:
            raise ValueError(f"model {model.name!r} has no exact posterior for the cdf stop rule")
        return CdfDiscrepancy(model.posterior_cdf, float(arg) if arg else 0.01825)
    raise ValueError(f"unknown stop rule {spec!r}")


def _build_metric(cfg, model, rng):
    if cfg.metric == "mahalanobis":
        cov = model.info.get("cov", {}).get(cfg.scheme)
        if cov is None:
            raise CatalogError(f"model {model.name!r} has no analytic covariance for {cfg.scheme!r}")
        return metrics_mod.Mahalanobis(cov)
    m = cfg.scale_m if cfg.metric == "scaled" else cfg.pilot_m
    fill = model.info.get("fill_undefined")
    return metrics_mod.build_metric(cfg.metric, model, cfg.scheme, rng, cfg.theta_star, m, fill)


# ------------------------------------------------------------------ report

@dataclass
class RunReport:
    """Result of one run: the sample, its cost and optional oracle agreement."""

    config: ExperimentConfig
    sample: WeightedSample
    ks_vs_oracle: float | None = None
    wall_time: float = 0.0
    param_names: tuple = ("theta",)
    extra: dict = field(default_factory=dict)

    @property
    def sims_per_particle(self):
        return self.sample.sims_per_particle

    def __eq__(self, other):
        if not isinstance(other, RunReport):
            return NotImplemented
        a, b = self.sample, other.sample
        return (
            dict(self.config.items()) == dict(other.config.items())
            and self.param_names == other.param_names
            and a.h_final == b.h_final
            and a.sims_used == b.sims_used
            and a.accept_rate == b.accept_rate
            and np.array_equal(a.thetas, b.thetas)
            and np.array_equal(a.weights, b.weights)
            and self.ks_vs_oracle == other.ks_vs_oracle
        )


def run_experiment(config, write=True):
    """Run the sampler described by ``config``; write its CSV when ``config.output`` is set."""
    cfg = config
    model = get_model(cfg.model)
    rng = np.random.default_rng(cfg.seed)
    s_obs = model.observed_summary(cfg.scheme)
    start = time.perf_counter()
    metric = _build_metric(cfg, model, rng)
    if cfg.stop_rule is None:
        sample = abc_rejection(model, cfg.scheme, s_obs, metric, cfg.kernel, cfg.h, cfg.N, rng,
                               budget=cfg.budget)
    else:
        stop = _parse_stop_rule(cfg.stop_rule, model)
        sample = abc_adaptive(model, cfg.scheme, s_obs, metric, cfg.kernel, cfg.N, stop, rng,
                              budget=cfg.budget)
    wall = time.perf_counter() - start
    ks = None
    if model.posterior_cdf is not None and sample.h_final == 0:
        ks = ks_distance(sample.thetas[:, 0], model.posterior_cdf)
    report = RunReport(cfg, sample, ks, wall, tuple(model.param_names))
    if write and cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(write_report_csv(report))
    return report


def write_report_csv(report):
    """CSV text: ``#`` header lines echoing the config and run metadata, then one row per draw."""
    out = io.StringIO()
    for key, val in report.config.items():
        out.write(f"# {key} = {val}\n")
    s = report.sample
    out.write(f"# h_final = {s.h_final!r}\n")
    out.write(f"# sims_used = {s.sims_used}\n")
    out.write(f"# accept_rate = {s.accept_rate!r}\n")
    if report.ks_vs_oracle is not None:
        out.write(f"# ks_vs_oracle = {report.ks_vs_oracle!r}\n")
    out.write(",".join(report.param_names) + ",weight\n")
    for row, w in zip(s.thetas, s.weights):
        out.write(",".join(repr(float(v)) for v in row) + f",{float(w)!r}\n")
    return out.getvalue()


_META = ("h_final", "sims_used", "accept_rate", "ks_vs_oracle")


def parse_report_csv(text):
    """Inverse of :func:`write_report_csv` (wall time is not stored)."""
    header, meta, rows, names = {}, {}, [], None
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            key, val = key.strip(), val.strip()
            (meta if key in _META else header)[key] = val
        elif names is None:
            names = tuple(line.split(",")[:-1])
        elif line.strip():
            rows.append([float(v) for v in line.split(",")])
    if names is None:
        raise ParseError("missing column header")
    cfg = ExperimentConfig(**header)
    data = np.array(rows, dtype=float).reshape(len(rows), len(names) + 1)
    sample = WeightedSample(
        data[:, :-1], data[:, -1], float(meta["h_final"]), int(meta["sims_used"]),
        float(meta["accept_rate"]),
    )
    ks = float(meta["ks_vs_oracle"]) if "ks_vs_oracle" in meta else None
    return RunReport(cfg, sample, ks, 0.0, names)
