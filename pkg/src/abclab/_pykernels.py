"""Pure-numpy versions of the coalescent hot loops.

Same signatures and the same arithmetic order as ``_ckernels.pyx``; fed the
same random inputs both produce the same tree topologies and site-frequency
spectra, with node times that agree to the last bit or two (numpy's
vectorised ``exp`` and ``log1p`` may round differently from the C library). Work is vectorised across replicates rather than across events.
"""

import numpy as np


def build_genealogies(n, beta, expo, pick):
    """Kingman coalescent genealogies under exponential growth.

    Parameters
    ----------
    n : int
        Sample size (number of leaves), at least 2.
    beta : float64[R]
        Growth rate per replicate, in units of 2N0 generations.
    expo : float64[R, n-1]
        Standard exponential variates, one per coalescence.
    pick : float64[R, n-1, 2]
        Uniform variates choosing the merging pair.

    Returns
    -------
    parent : int64[R, 2n-1]
        Parent node id (-1 for the root). Leaves are ``0..n-1``; the node made
        by coalescence ``j`` is ``n + j``, so the root is ``2n - 2``.
    time : float64[R, 2n-1]
        Node times, leaves at 0.
    leaves : int64[R, 2n-1]
        Number of sampled leaves below each node.
    """
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    reps = beta.shape[0]
    nodes = 2 * n - 1
    rows = np.arange(reps)
    parent = np.full((reps, nodes), -1, dtype=np.int64)
    time = np.zeros((reps, nodes), dtype=np.float64)
    leaves = np.zeros((reps, nodes), dtype=np.int64)
    leaves[:, :n] = 1
    active = np.tile(np.arange(n, dtype=np.int64), (reps, 1))
    growing = beta > 0
    safe_beta = np.where(growing, beta, 1.0)
    t = np.zeros(reps)
    for j in range(n - 1):
        k = n - j
        pairs = k * (k - 1) / 2.0
        e = expo[:, j]
        grown = t + np.log1p(safe_beta * e * np.exp(-safe_beta * t) / pairs) / safe_beta
        t = np.where(growing, grown, t + e / pairs)
        i = np.minimum((pick[:, j, 0] * k).astype(np.int64), k - 1)
        m = np.minimum((pick[:, j, 1] * (k - 1)).astype(np.int64), k - 2)
        m = m + (m >= i)
        a = active[rows, i]
        b = active[rows, m]
        node = n + j
        parent[rows, a] = node
        parent[rows, b] = node
        time[:, node] = t
        leaves[:, node] = leaves[rows, a] + leaves[rows, b]
        lo = np.minimum(i, m)
        hi = np.maximum(i, m)
        active[rows, lo] = node
        active[rows, hi] = active[rows, k - 1]
    return parent, time, leaves


def branch_lengths(parent, time):
    """Lengths of the ``2n - 2`` non-root branches, shape (R, 2n-2)."""
    nb = parent.shape[1] - 1
    rows = np.arange(parent.shape[0])[:, None]
    return time[rows, parent[:, :nb]] - time[:, :nb]


def site_frequency_spectra(n, parent, time, leaves, n_mut, pos, chunk=200_000):
    """Drop mutations on genealogies and tally derived-allele counts.

    Mutation ``m`` of replicate ``r`` sits at ``pos[m] * L_r`` along the
    concatenated branches ``0..2n-3`` and lands on the first branch whose
    cumulative length exceeds that point.

    Returns
    -------
    sfs : int64[R, n-1]
        ``sfs[r, k-1]`` counts mutations carried by ``k`` of the ``n`` leaves.
    """
    reps = parent.shape[0]
    nb = 2 * n - 2
    cum = np.cumsum(branch_lengths(parent, time), axis=1)
    n_mut = np.asarray(n_mut, dtype=np.int64)
    rep_of = np.repeat(np.arange(reps), n_mut)
    sfs = np.zeros(reps * (n - 1), dtype=np.int64)
    for start in range(0, rep_of.shape[0], chunk):
        r = rep_of[start:start + chunk]
        c = cum[r]
        target = pos[start:start + chunk] * c[:, -1]
        branch = np.minimum(np.count_nonzero(c <= target[:, None], axis=1), nb - 1)
        k = leaves[r, branch]
        np.add.at(sfs, r * (n - 1) + (k - 1), 1)
    return sfs.reshape(reps, n - 1)
