from importlib import resources

import numpy as np
import pytest

from abclab import _pykernels
from abclab.coalescent import (
    Genealogy,
    GrowthParams,
    SeqMatrix,
    drop_mutations,
    format_seq_table,
    parse_seq_table,
    sfs_summaries,
    simulate_genealogy,
    simulate_sfs,
    simulate_summaries,
    summarize_seqs,
)
from abclab.exceptions import ParseError


def _data(name):
    return resources.files("abclab").joinpath("data", name).read_text()


def test_table1_fixture():
    m = parse_seq_table(_data("table1_simulated.txt"))
    assert m.n == 30
    s = summarize_seqs(m)
    assert s.S == 42
    assert s.pi0 == pytest.approx(5.90, abs=0.01)
    assert s.D == pytest.approx(-1.64, abs=0.01)
    assert s.H0 == pytest.approx(3.67, abs=0.01)


def test_biaka_fixture():
    m = parse_seq_table(_data("biaka_9pMB8.txt"))
    s = summarize_seqs(m)
    assert s.S == 42
    assert s.pi0 == pytest.approx(7.52, abs=0.01)
    assert s.D == pytest.approx(-1.35, abs=0.01)
    assert s.H0 == pytest.approx(4.0, abs=0.01)


def test_parse_small_tables():
    m = parse_seq_table("1 : 01\n1 : 10\n")
    assert (m.n, m.S) == (2, 2)
    s = summarize_seqs(SeqMatrix([[0], [1]], [1, 1]))
    assert (s.S, s.pi0) == (1, 1.0)


@pytest.mark.parametrize("text", ["2 : 11", "1 : 0a\n1 : 10", "1 : 01\n1 : 1", "", "x : 01"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_seq_table(text)


def test_format_round_trip():
    text = _data("table1_simulated.txt")
    m = parse_seq_table(text)
    assert parse_seq_table(format_seq_table(m)) == m


def test_no_segregating_sites_gives_undefined_D():
    s = sfs_summaries(np.zeros(9), 10)
    assert s[1] == 0 and np.isnan(s[2]) and s[0] == 0


def test_growth_params_units():
    p = GrowthParams.from_alpha(5.0, 60.0)
    assert p.beta == 30.0 and p.alpha == 60.0
    with pytest.raises(ValueError):
        GrowthParams(-1.0, 0.0)


def test_pair_coalescence_time_is_exponential(rng):
    t = np.array([simulate_genealogy(2, GrowthParams(1.0, 0.0), rng).height for _ in range(20_000)])
    assert abs(t.mean() - 1.0) < 3 / np.sqrt(t.size)


def test_total_branch_length_constant_size(rng):
    reps = 20_000
    n = 20
    parent, time, _ = _pykernels.build_genealogies(
        n, np.zeros(reps), rng.standard_exponential((reps, n - 1)), rng.random((reps, n - 1, 2)))
    total = _pykernels.branch_lengths(parent, time).sum(axis=1)
    expected = 2 * np.sum(1 / np.arange(1, n))
    # Var of total length is 4 sum 1/i^2
    se = np.sqrt(4 * np.sum(1 / np.arange(1, n) ** 2) / reps)
    assert abs(total.mean() - expected) < 4 * se


def test_growth_shortens_trees(rng):
    heights = []
    for beta in (0.0, 10.0, 60.0):
        hs = [simulate_genealogy(20, GrowthParams(1.0, beta), rng).height for _ in range(2000)]
        heights.append(np.mean(hs))
    assert heights[0] > heights[1] > heights[2]


def test_genealogy_structure(rng):
    g = simulate_genealogy(8, GrowthParams(1.0, 3.0), rng)
    assert isinstance(g, Genealogy)
    assert g.parent[g.root] == -1
    assert np.all(g.branch_lengths >= 0)
    desc = g.descendants()
    assert desc[g.root].all() and desc.sum(axis=1)[:8].tolist() == [1] * 8


def test_drop_mutations_segregating(rng):
    g = simulate_genealogy(15, GrowthParams(30.0, 0.0), rng)
    m = drop_mutations(g, 30.0, rng)
    k = m.derived_counts
    assert m.n == 15 and np.all((k > 0) & (k < 15))


def test_single_replicate_stream_agrees_with_tree_path():
    a = simulate_sfs(12, 20.0, 4.0, np.random.default_rng(5), reps=1)[0]
    rng = np.random.default_rng(5)
    g = simulate_genealogy(12, GrowthParams(20.0, 4.0), rng)
    m = drop_mutations(g, 20.0, rng)
    sfs = np.bincount(m.derived_counts, minlength=13)[1:12]
    np.testing.assert_array_equal(a, sfs)


def test_zero_theta_gives_no_sites(rng):
    assert simulate_sfs(10, 0.0, 0.0, rng, reps=50).sum() == 0


def test_watterson_mean(rng):
    s = simulate_summaries(20, 50.0, 0.0, rng, reps=10_000)[:, 1]
    expected = 50 * np.sum(1 / np.arange(1, 20))
    assert abs(s.mean() - expected) < 3 * s.std(ddof=1) / np.sqrt(s.size)


def test_growth_signs(rng):
    s = simulate_summaries(20, 50.0, 60.0, rng, reps=1000)
    assert np.nanmean(s[:, 2]) < 0
    assert s[:, 3].mean() > 0
