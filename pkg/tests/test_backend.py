import os
import subprocess
import sys

import numpy as np
import pytest

from abclab import _backend, _pykernels

ck = pytest.importorskip("abclab._ckernels", reason="compiled extension not built")


def _inputs(n, reps, seed):
    rng = np.random.default_rng(seed)
    beta = rng.choice([0.0, 0.5, 30.0], size=reps)
    return beta, rng.standard_exponential((reps, n - 1)), rng.random((reps, n - 1, 2)), rng


@pytest.mark.parametrize("n", [2, 5, 30])
def test_genealogies_agree(n):
    beta, expo, pick, _ = _inputs(n, 200, n)
    (pp, pt, pl) = _pykernels.build_genealogies(n, beta, expo, pick)
    (cp, ct, cl) = ck.build_genealogies(n, beta, expo, pick)
    np.testing.assert_array_equal(pp, cp)
    np.testing.assert_array_equal(pl, cl)
    # numpy's vectorised exp/log1p may differ from the C library in the last bit
    np.testing.assert_allclose(pt, ct, rtol=1e-13, atol=0)


@pytest.mark.parametrize("n", [2, 12, 30])
def test_spectra_agree(n):
    beta, expo, pick, rng = _inputs(n, 300, 100 + n)
    parent, time, leaves = _pykernels.build_genealogies(n, beta, expo, pick)
    n_mut = rng.poisson(8.0, size=300)
    n_mut[:5] = 0
    pos = rng.random(int(n_mut.sum()))
    py = _pykernels.site_frequency_spectra(n, parent, time, leaves, n_mut, pos, chunk=97)
    cy = ck.site_frequency_spectra(n, parent, time, leaves, n_mut, pos)
    np.testing.assert_array_equal(py, cy)


def test_environment_selects_fallback():
    code = "import abclab; print(abclab.BACKEND)"
    env = dict(os.environ, ABCLAB_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"
    assert _backend.BACKEND == "cython"


def test_simulator_output_identical_across_backends():
    code = ("import numpy as np; from abclab.coalescent import simulate_summaries; "
            "print(simulate_summaries(20, 40.0, 10.0, np.random.default_rng(3), reps=50)"
            ".round(12).tolist())")
    outs = []
    for backend in ("python", "cython"):
        env = dict(os.environ, ABCLAB_BACKEND=backend)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                   text=True, check=True).stdout)
    assert outs[0] == outs[1]
