"""Kingman coalescent with exponential growth, infinite-sites mutation, the
``count : bitstring`` sequence-table format, and four summary statistics
(mean pairwise difference, segregating sites, Tajima's D, Fay and Wu's H).

Time is measured in units of 2N0 generations. The population size backwards
in time is ``N0 * exp(-beta * t)``; with ``k`` lineages at time ``t0`` the next
coalescence is at ``t = t0 + log1p(beta * E * exp(-beta * t0) / C(k, 2)) / beta``
for ``E ~ Exp(1)``, and ``t0 + E / C(k, 2)`` when ``beta = 0``. Mutations fall as
a Poisson process of rate ``theta0 / 2`` per unit branch length, where
``theta0 = 4 N0 mu``. ms measures time in 4N0 generations, so its growth
parameter is ``alpha = 2 * beta``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .exceptions import ParseError

__all__ = [
    "GrowthParams",
    "Genealogy",
    "SeqMatrix",
    "SeqSummary",
    "simulate_genealogy",
    "drop_mutations",
    "simulate_sfs",
    "simulate_summaries",
    "summarize_seqs",
    "sfs_summaries",
    "parse_seq_table",
    "format_seq_table",
    "read_seq_table",
]


@dataclass(frozen=True)
class GrowthParams:
    """Scaled mutation rate and exponential growth rate.

    ``beta`` is the growth rate in 2N0 time units. ms's ``-G alpha`` uses 4N0
    time units, so ``alpha = 2 * beta``. Build from the ms value with
    :meth:`from_alpha`.
    """

    theta0: float
    beta: float = 0.0

    def __post_init__(self):
        if not self.theta0 > 0:
            raise ValueError("theta0 must be positive")
        if not self.beta >= 0:
            raise ValueError("growth rate must be non-negative")

    @classmethod
    def from_alpha(cls, theta0, alpha):
        return cls(theta0=theta0, beta=alpha / 2.0)

    @property
    def alpha(self):
        return 2.0 * self.beta


@dataclass(frozen=True)
class Genealogy:
    """A binary genealogy of ``n`` sampled sequences.

    Nodes ``0..n-1`` are the samples, node ``n + j`` is created by the
    ``j``-th coalescence and node ``2n - 2`` is the root.
    """

    n: int
    parent: np.ndarray
    time: np.ndarray
    leaves: np.ndarray

    @property
    def root(self):
        return 2 * self.n - 2

    @property
    def height(self):
        return float(self.time[self.root])

    @property
    def branch_lengths(self):
        nb = 2 * self.n - 2
        return self.time[self.parent[:nb]] - self.time[:nb]

    @property
    def total_length(self):
        return float(self.branch_lengths.sum())

    def descendants(self):
        """Boolean matrix ``D[v, i]``: leaf ``i`` lies below node ``v``."""
        n = self.n
        desc = np.zeros((2 * n - 1, n), dtype=bool)
        desc[np.arange(n), np.arange(n)] = True
        for node in range(n, 2 * n - 1):
            for child in np.flatnonzero(self.parent == node):
                desc[node] |= desc[child]
        return desc


def _draw_genealogies(n, beta, rng):
    beta = np.asarray(beta, dtype=np.float64)
    reps = beta.shape[0]
    expo = rng.standard_exponential((reps, n - 1))
    pick = rng.random((reps, n - 1, 2))
    return _backend.build_genealogies(n, beta, expo, pick)


def simulate_genealogy(n, params, rng):
    """One coalescent genealogy of ``n`` samples with branch lengths in 2N0 units."""
    if n < 2:
        raise ValueError("need at least two samples")
    parent, time, leaves = _draw_genealogies(n, np.array([params.beta]), rng)
    return Genealogy(n, parent[0], time[0], leaves[0])


def _mutation_branches(cum, pos):
    nb = cum.shape[0]
    if nb == 0 or pos.size == 0:
        return np.zeros(pos.shape, dtype=np.int64)
    target = pos * cum[-1]
    return np.minimum(np.searchsorted(cum, target, side="right"), nb - 1)


@dataclass(frozen=True)
class SeqMatrix:
    """Distinct binary haplotypes with their multiplicities.

    ``rows[j]`` is a 0/1 vector over the segregating sites (0 ancestral,
    1 derived) carried by ``multiplicities[j]`` sampled sequences.
    """

    rows: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.uint8))
        mult = np.asarray(self.multiplicities, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "multiplicities", mult)
        if rows.shape[0] != mult.shape[0]:
            raise ValueError("one multiplicity per row required")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be positive")
        if np.any(rows > 1):
            raise ValueError("rows must be binary")
        bad = np.flatnonzero(~self._segregating())
        if bad.size:
            raise ValueError(f"column(s) {bad.tolist()} are not segregating")

    def _segregating(self):
        k = self.derived_counts
        return (k > 0) & (k < self.n)

    @property
    def n(self):
        return int(self.multiplicities.sum())

    @property
    def S(self):
        return int(self.rows.shape[1])

    @property
    def derived_counts(self):
        """Number of sampled sequences carrying the derived allele at each site."""
        return self.multiplicities @ self.rows.astype(np.int64)

    def expanded(self):
        """One row per sampled sequence."""
        return np.repeat(self.rows, self.multiplicities, axis=0)

    def __eq__(self, other):
        if not isinstance(other, SeqMatrix):
            return NotImplemented
        return (
            self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.multiplicities, other.multiplicities)
        )

    @classmethod
    def from_sequences(cls, seqs):
        """Collapse an (n, S) 0/1 array into distinct rows, sorted lexicographically."""
        seqs = np.atleast_2d(np.asarray(seqs, dtype=np.uint8))
        if seqs.shape[1] == 0:
            return cls(np.zeros((1, 0), dtype=np.uint8), [seqs.shape[0]])
        uniq, counts = np.unique(seqs, axis=0, return_counts=True)
        return cls(uniq, counts)


def drop_mutations(tree, theta0, rng):
    """Scatter infinite-sites mutations on ``tree`` and return the sample's haplotypes.

    The number of mutations is Poisson with mean ``theta0 / 2`` times the total
    branch length; each mutation lands uniformly along the branches and marks
    every sample below it as derived. Columns appear in the order mutations are
    drawn.
    """
    if not theta0 > 0:
        raise ValueError("theta0 must be positive")
    cum = np.cumsum(tree.branch_lengths)
    total = cum[-1] if cum.size else 0.0
    m = int(rng.poisson(theta0 / 2.0 * total))
    pos = rng.random(m)
    branches = _mutation_branches(cum, pos)
    desc = tree.descendants()
    seqs = desc[branches].T.astype(np.uint8)
    return SeqMatrix.from_sequences(seqs.reshape(tree.n, m))


def simulate_sfs(n, theta0, beta, rng, reps=None):
    """Site-frequency spectra of ``reps`` independent simulated samples.

    ``theta0`` and ``beta`` may be scalars or per-replicate arrays. Returns an
    int array of shape (reps, n-1). With ``reps=1`` this consumes the random
    stream exactly as :func:`simulate_genealogy` followed by
    :func:`drop_mutations`.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=np.float64))
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    if reps is None:
        reps = max(theta0.shape[0], beta.shape[0])
    theta0 = np.broadcast_to(theta0, (reps,))
    beta = np.ascontiguousarray(np.broadcast_to(beta, (reps,)))
    if np.any(~(theta0 >= 0)) or np.any(~(beta >= 0)):
        raise ValueError("theta0 and growth rates must be non-negative")
    parent, time, leaves = _draw_genealogies(n, beta, rng)
    rows = np.arange(reps)[:, None]
    nb = 2 * n - 2
    total = np.cumsum(time[rows, parent[:, :nb]] - time[:, :nb], axis=1)[:, -1]
    n_mut = rng.poisson(theta0 / 2.0 * total)
    pos = rng.random(int(n_mut.sum()))
    return _backend.site_frequency_spectra(n, parent, time, leaves, n_mut, pos)


class SeqSummary(NamedTuple):
    pi0: float
    S: int
    D: float
    H0: float


def _harmonic(n):
    i = np.arange(1, n, dtype=np.float64)
    return np.sum(1.0 / i), np.sum(1.0 / i**2)


def sfs_summaries(sfs, n):
    """(pi0, S, D, H0) from site-frequency spectra, shape (..., n-1) -> (..., 4).

    pi0 is the mean pairwise difference, S the number of segregating sites,
    D is Tajima's D with Watterson's normalising constants, and
    H0 = pi0 - theta_H is Fay and Wu's unnormalised H. D is NaN when S = 0.
    """
    sfs = np.asarray(sfs, dtype=np.float64)
    k = np.arange(1, n, dtype=np.float64)
    S = sfs.sum(axis=-1)
    pairs = n * (n - 1) / 2.0
    pi0 = sfs @ (k * (n - k)) / pairs
    theta_h = sfs @ (k * k) / pairs
    a1, a2 = _harmonic(n)
    b1 = (n + 1) / (3.0 * (n - 1))
    b2 = 2.0 * (n * n + n + 3) / (9.0 * n * (n - 1))
    c1 = b1 - 1.0 / a1
    c2 = b2 - (n + 2) / (a1 * n) + a2 / a1**2
    e1 = c1 / a1
    e2 = c2 / (a1**2 + a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        D = (pi0 - S / a1) / np.sqrt(e1 * S + e2 * S * (S - 1))
    D = np.where(S > 0, D, np.nan)
    return np.stack([pi0, S, D, pi0 - theta_h], axis=-1)


def simulate_summaries(n, theta0, beta, rng, reps=None):
    """Summary statistics (pi0, S, D, H0) for ``reps`` simulated samples."""
    return sfs_summaries(simulate_sfs(n, theta0, beta, rng, reps=reps), n)


def summarize_seqs(m):
    """(pi0, S, D, H0) for a haplotype table; D is NaN when there are no segregating sites."""
    n = m.n
    if n < 2:
        raise ValueError("need at least two sequences")
    k = m.derived_counts
    sfs = np.bincount(k, minlength=n + 1)[1:n]
    pi0, S, D, H0 = sfs_summaries(sfs, n)
    return SeqSummary(float(pi0), int(S), float(D), float(H0))


_LINE = re.compile(r"^\s*(\d+)\s*:\s*(\S*)\s*$")


def parse_seq_table(text):
    """Parse ``count : bitstring`` lines into a :class:`SeqMatrix`."""
    mult, rows = [], []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        match = _LINE.match(line)
        if match is None:
            raise ParseError(f"line {lineno}: expected 'count : bitstring', got {line.strip()!r}")
        count, bits = match.groups()
        bad = [i for i, ch in enumerate(bits) if ch not in "01"]
        if bad:
            raise ParseError(f"line {lineno}, column {bad[0] + 1}: non-binary character {bits[bad[0]]!r}")
        if width is None:
            width = len(bits)
        elif len(bits) != width:
            raise ParseError(f"line {lineno}: row has {len(bits)} sites, expected {width}")
        if int(count) < 1:
            raise ParseError(f"line {lineno}: multiplicity must be positive")
        mult.append(int(count))
        rows.append([int(ch) for ch in bits])
    if not rows:
        raise ParseError("no sequences found")
    rows = np.array(rows, dtype=np.uint8).reshape(len(rows), width)
    mult = np.array(mult, dtype=np.int64)
    k = mult @ rows.astype(np.int64)
    bad = np.flatnonzero((k == 0) | (k == mult.sum()))
    if bad.size:
        raise ParseError(f"column {bad[0] + 1} is not segregating")
    return SeqMatrix(rows, mult)


def format_seq_table(m):
    """Render a :class:`SeqMatrix` in the ``count : bitstring`` format."""
    lines = [
        f"{int(c)} : {''.join(map(str, row.tolist()))}"
        for c, row in zip(m.multiplicities, m.rows)
    ]
    return "\n".join(lines) + "\n"


def read_seq_table(path):
    with open(path) as fh:
        return parse_seq_table(fh.read())
