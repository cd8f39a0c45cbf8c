"""Pick the compiled coalescent kernels when available.

Set ``ABCLAB_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("ABCLAB_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as kernels  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _pykernels

build_genealogies = kernels.build_genealogies
site_frequency_spectra = kernels.site_frequency_spectra
