"""Backend selection for the EM kernel.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Setting ``MIXTEST_PURE_PYTHON=1`` forces the
fallback (useful for benchmarking and for cross-checking the two).
"""

import os

from . import _pykernels

ALPHA_NONE = 0
ALPHA_EMTEST = 1  # log(1 - |1 - 2a|)
ALPHA_MLRT = 2  # log(4a(1 - a))

if os.environ.get("MIXTEST_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
em_fit = _impl.em_fit
alpha_penalty = _impl.alpha_penalty
alpha_update = _impl.alpha_update
sigma_penalty = _impl.sigma_penalty
