"""Rejection samplers: plain, exact-match likelihood-free, kernel ABC and the
adaptive sampler that lowers the kernel scale until a stopping rule holds.

All samplers draw proposals in vectorised batches but report the simulation
count a one-at-a-time implementation would have used: a batch is truncated at
the acceptance that completes the sample, so ``sims_used`` does not depend on
the batch size. Outputs are deterministic given the generator state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import BudgetExhausted, EnvelopeError, InvalidScaleError
from .kernels import get_kernel, min_scale_to_accept
from .metrics import Euclidean

__all__ = [
    "WeightedSample",
    "Proposal",
    "prior_proposal",
    "standard_rejection",
    "lf_rejection_exact",
    "abc_rejection",
    "abc_adaptive",
    "abc_quantile",
    "TargetScale",
    "MaxSims",
    "CdfDiscrepancy",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 10**8
_ENVELOPE_SLACK = 1e-12


@dataclass
class WeightedSample:
    """Accepted parameter draws and how much simulation they cost.

    Attributes
    ----------
    thetas : ndarray, shape (N, p)
    weights : ndarray, shape (N,)
        All ones for the rejection samplers in this module.
    h_final : float
        Kernel scale the draws correspond to (0 for exact matching).
    sims_used : int
        Model simulations (or proposals, for plain rejection) consumed.
    accept_rate : float
        ``N / sims_used``.
    distances : ndarray or None
        Distance of each accepted draw's summaries to the observed ones.
    diagnostics : dict
    """

    thetas: np.ndarray
    weights: np.ndarray
    h_final: float
    sims_used: int
    accept_rate: float
    distances: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.thetas.shape[0]

    @property
    def sims_per_particle(self):
        return self.sims_used / self.N


@dataclass
class Proposal:
    """Proposal distribution ``g`` for rejection sampling.

    ``bound`` must be at least ``sup pi / g`` over the support of the prior.
    """

    sample: Callable
    density: Callable
    bound: float = 1.0


def prior_proposal(model):
    """Use the prior as the proposal; then ``pi / g = 1`` everywhere."""
    return Proposal(model.prior_sample, model.prior_density, 1.0)


def _prior_ratio(model, proposal, thetas):
    """``pi / (bound * g)`` for each row, or None when the proposal is the prior."""
    if proposal is None:
        return None
    pi = model.prior_density(thetas)
    g = np.asarray(proposal.density(thetas), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pi > 0, pi / (proposal.bound * g), 0.0)
    _check_envelope(ratio)
    return ratio


def _check_envelope(ratio):
    worst = float(np.max(ratio, initial=0.0))
    if not worst <= 1.0 + _ENVELOPE_SLACK:
        raise EnvelopeError(
            f"acceptance ratio {worst:.6g} exceeds 1: the envelope constant is too small"
        )


def _collect(step, N, batch_size, budget, what):
    """Run ``step(size) -> (thetas, accept_mask, extra)`` until ``N`` acceptances.

    Returns the accepted thetas, the matching ``extra`` rows and the number of
    trials a sequential loop would have used.
    """
    if N < 1:
        raise ValueError("N must be positive")
    kept, kept_extra = [], []
    have = used = 0
    while have < N:
        size = int(min(batch_size, budget - used))
        if size <= 0:
            raise BudgetExhausted(
                f"{what}: budget of {budget} simulations exhausted with {have} of {N} accepted",
                state=np.concatenate(kept) if kept else None,
                diagnostics={"sims_used": used, "accepted": have,
                             "accept_rate": have / used if used else 0.0},
            )
        thetas, accept, extra = step(size)
        idx = np.flatnonzero(accept)
        need = N - have
        if idx.size >= need:
            idx = idx[:need]
            used += int(idx[-1]) + 1
        else:
            used += size
        kept.append(thetas[idx])
        kept_extra.append(None if extra is None else extra[idx])
        have += idx.size
    thetas = np.concatenate(kept)
    extra = None if kept_extra[0] is None else np.concatenate(kept_extra)
    return thetas, extra, used


def standard_rejection(f, g, K, N, rng, batch_size=100_000, budget=DEFAULT_BUDGET):
    """Draw ``N`` samples from density ``f`` using proposal ``g`` and envelope ``K``.

    ``g`` is a :class:`Proposal` (its ``bound`` is ignored); each proposal is
    kept with probability ``f / (K g)``. A ratio above 1 raises
    :class:`EnvelopeError`.
    """
    def step(size):
        th = np.asarray(g.sample(rng, size), dtype=float)
        ratio = np.asarray(f(th), dtype=float) / (K * np.asarray(g.density(th), dtype=float))
        _check_envelope(ratio)
        u = rng.random(size)
        return th, u <= ratio, None

    thetas, _, used = _collect(step, N, batch_size, budget, "standard rejection")
    return WeightedSample(_as_rows(thetas), np.ones(N), 0.0, used, N / used)


def _as_rows(thetas):
    thetas = np.asarray(thetas, dtype=float)
    return thetas.reshape(thetas.shape[0], -1)


def _batch_size(model, batch_size):
    return int(batch_size or getattr(model, "batch_size", 100_000))


def lf_rejection_exact(model, scheme, s_obs, N, rng, proposal=None, budget=DEFAULT_BUDGET,
                       batch_size=None):
    """Likelihood-free rejection with exact matching of summaries.

    A proposal is kept when its simulated summaries equal ``s_obs`` in every
    coordinate and a uniform falls below ``pi / (bound g)``. This is only
    useful for discrete summaries; a continuous summary exhausts the budget.
    """
    s_obs = np.atleast_1d(np.asarray(s_obs, dtype=float))
    sample = model.prior_sample if proposal is None else proposal.sample
    matches = 0

    def step(size):
        nonlocal matches
        th = _as_rows(sample(rng, size))
        s = model.simulate_summaries(th, scheme, rng)
        u = rng.random(size)
        hit = np.all(s == s_obs, axis=1)
        matches += int(hit.sum())
        ratio = _prior_ratio(model, proposal, th)
        accept = hit if ratio is None else hit & (u <= ratio)
        return th, accept, None

    try:
        thetas, _, used = _collect(step, N, _batch_size(model, batch_size), budget,
                                   "exact-match rejection")
    except BudgetExhausted as err:
        if matches == 0:
            err.args = (err.args[0] + "; no simulated summary ever matched exactly "
                        "(is the summary continuous?)",)
        err.diagnostics["matches"] = matches
        raise
    return WeightedSample(thetas, np.ones(N), 0.0, used, N / used, np.zeros(N))


def abc_rejection(model, scheme, s_obs, metric=None, kernel="uniform", h=1.0, N=1000,
                  rng=None, proposal=None, budget=DEFAULT_BUDGET, batch_size=None):
    """Kernel ABC rejection sampling at fixed scale ``h``.

    A proposal with summary distance ``rho`` is kept with probability
    ``K_h(rho) / K_h(0) * pi / (bound g)``. ``h = 0`` falls back to
    :func:`lf_rejection_exact`.
    """
    if rng is None:
        raise ValueError("an explicit random generator is required")
    if h == 0:
        return lf_rejection_exact(model, scheme, s_obs, N, rng, proposal, budget, batch_size)
    if not h > 0:
        raise InvalidScaleError(f"kernel scale must be non-negative, got {h!r}")
    kern = get_kernel(kernel)
    metric = metric or Euclidean()
    s_obs = np.atleast_1d(np.asarray(s_obs, dtype=float))
    sample = model.prior_sample if proposal is None else proposal.sample

    def step(size):
        th = _as_rows(sample(rng, size))
        s = model.simulate_summaries(th, scheme, rng)
        u = rng.random(size)
        rho = _distances(metric, s, s_obs)
        prob = kern.ratio(rho / h)
        ratio = _prior_ratio(model, proposal, th)
        if ratio is not None:
            prob = prob * ratio
        return th, u <= prob, rho

    thetas, rho, used = _collect(step, N, _batch_size(model, batch_size), budget, "ABC rejection")
    return WeightedSample(thetas, np.ones(N), float(h), used, N / used, rho)


def abc_quantile(model, scheme, s_obs, metric, n_sims, quantile, rng, batch_size=None):
    """Keep the ``quantile`` fraction of ``n_sims`` prior draws closest to ``s_obs``.

    Equivalent to uniform-kernel rejection with ``h`` set, after the fact, to
    the empirical ``quantile`` of the simulated distances. Ties at the
    threshold are broken by simulation order.
    """
    if not 0 < quantile <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    s_obs = np.atleast_1d(np.asarray(s_obs, dtype=float))
    size = _batch_size(model, batch_size)
    thetas, rho = [], []
    for lo in range(0, int(n_sims), size):
        th = _as_rows(model.prior_sample(rng, min(size, int(n_sims) - lo)))
        thetas.append(th)
        rho.append(_distances(metric, model.simulate_summaries(th, scheme, rng), s_obs))
    thetas, rho = np.concatenate(thetas), np.concatenate(rho)
    keep = max(1, int(round(quantile * rho.size)))
    idx = np.sort(np.argsort(rho, kind="stable")[:keep])
    h = float(np.max(rho[idx]))
    return WeightedSample(thetas[idx], np.ones(keep), h, rho.size, keep / rho.size, rho[idx])


def _distances(metric, s, s_obs):
    rho = np.atleast_1d(np.asarray(metric(s, s_obs), dtype=float))
    return np.where(np.isnan(rho), np.inf, rho)


# ------------------------------------------------------------- stop rules

@dataclass(frozen=True)
class TargetScale:
    """Stop once the kernel scale has fallen to ``h`` or below."""

    h: float

    def satisfied(self, state):
        return state.h <= self.h


@dataclass(frozen=True)
class MaxSims:
    """Stop once ``max_sims`` simulations have been used."""

    max_sims: int

    def satisfied(self, state):
        return state.sims_used >= self.max_sims


@dataclass(frozen=True)
class CdfDiscrepancy:
    """Stop when the particles' empirical CDF is close to a known CDF.

    The discrepancy is the average over particles of ``|F_N(theta_i) -
    F(theta_i)|`` for the first parameter coordinate. The stopping level is
    ``threshold`` for ``reference_n`` particles and scales as ``N^{-1/2}``
    otherwise, since the discrepancy of an exact sample of size ``N`` shrinks
    at that rate. Pass ``reference_n=None`` to use ``threshold`` as is.
    """

    cdf: Callable
    threshold: float = 0.01825
    reference_n: int | None = 500

    def level(self, n):
        if self.reference_n is None:
            return self.threshold
        return self.threshold * np.sqrt(self.reference_n / n)

    @staticmethod
    def discrepancy(cdf, thetas):
        x = np.sort(np.asarray(thetas, dtype=float).reshape(len(thetas), -1)[:, 0])
        n = x.size
        emp = np.arange(1, n + 1) / n
        return float(np.mean(np.abs(emp - cdf(x))))

    def satisfied(self, state):
        return self.discrepancy(self.cdf, state.thetas) < self.level(state.thetas.shape[0])


@dataclass
class _AdaptiveState:
    thetas: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    h: float
    sims_used: int
    iterations: int = 0


def _draw_uniform(rng, size):
    # uniforms on (0, 1]: u = 0 could never be accepted at a finite scale
    return 1.0 - rng.random(size)


def abc_adaptive(model, scheme, s_obs, metric=None, kernel="uniform", N=500, stop=None,
                 rng=None, budget=DEFAULT_BUDGET, max_batch=None):
    """ABC rejection that lowers ``h`` one particle at a time until ``stop`` holds.

    Start from ``N`` prior particles, each with a distance ``rho`` and an
    acceptance uniform ``u``, and set ``h`` to the smallest scale accepting
    all of them. Each iteration finds the particle that a lower ``h`` would
    reject first, lowers ``h`` to the smallest value still accepting every
    other particle, and regenerates that particle from the prior until it is
    accepted at the new scale. The uniforms ``u`` of surviving particles are
    kept, so the final particles are a rejection sample at the final ``h``.

    The returned sample's ``distances`` are the particles' ``rho`` and
    ``diagnostics["u"]`` their acceptance uniforms. Raises
    :class:`BudgetExhausted`, carrying the current particles, when the
    simulation budget runs out first.
    """
    if rng is None:
        raise ValueError("an explicit random generator is required")
    if N < 2:
        raise ValueError("the adaptive sampler needs at least two particles")
    if stop is None:
        raise ValueError("a stopping rule is required")
    kern = get_kernel(kernel)
    metric = metric or Euclidean()
    s_obs = np.atleast_1d(np.asarray(s_obs, dtype=float))
    max_batch = int(max_batch or getattr(model, "batch_size", 100_000))

    thetas = _as_rows(model.prior_sample(rng, N))
    rho = _distances(metric, model.simulate_summaries(thetas, scheme, rng), s_obs)
    u = _draw_uniform(rng, N)
    scales = min_scale_to_accept(kern, rho, u)
    state = _AdaptiveState(thetas, rho, u, float(np.max(scales)), N)
    mean_trials = 1.0

    def snapshot(note=None):
        diag = {"iterations": state.iterations, "kernel": kern.name, "u": state.u.copy()}
        if note:
            diag["note"] = note
        return WeightedSample(state.thetas.copy(), np.ones(N), state.h, state.sims_used,
                              N / state.sims_used, state.rho.copy(), diag)

    while not stop.satisfied(state):
        r = int(np.argmax(scales))
        h_new = float(np.max(np.delete(scales, r)))
        if not h_new > 0:
            return snapshot("scale cannot be lowered further: remaining particles match exactly")
        trials = 0
        while True:
            size = int(np.clip(np.ceil(2.0 * mean_trials), 8, max_batch))
            size = min(size, budget - state.sims_used - trials)
            if size <= 0:
                raise BudgetExhausted(
                    f"adaptive ABC: budget of {budget} simulations exhausted at h={state.h:.6g}",
                    state=snapshot(),
                    diagnostics={"sims_used": state.sims_used + trials, "h": state.h,
                                 "iterations": state.iterations},
                )
            th = _as_rows(model.prior_sample(rng, size))
            rho_new = _distances(metric, model.simulate_summaries(th, scheme, rng), s_obs)
            u_new = _draw_uniform(rng, size)
            ok = np.flatnonzero(u_new <= kern.ratio(rho_new / h_new))
            if ok.size:
                j = int(ok[0])
                trials += j + 1
                break
            trials += size
        # running mean of trials per replacement sizes the next batch
        mean_trials = 0.9 * mean_trials + 0.1 * trials
        state.thetas[r] = th[j]
        state.rho[r] = rho_new[j]
        state.u[r] = u_new[j]
        scales[r] = min_scale_to_accept(kern, rho_new[j], u_new[j])
        state.h = h_new
        state.sims_used += trials
        state.iterations += 1
    return snapshot()
