"""Hot inner-loop kernels with a compiled core and a numpy fallback.

The Cython extension ``_ckernels`` is used when it imports; otherwise, or when
the environment variable ``LPE_KERNELS=python`` is set, the numpy versions in
``_pykernels`` are used.  ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("LPE_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

sbp_diff_y = _impl.sbp_diff_y
mode_tendency = _impl.mode_tendency
inject_characteristic = _impl.inject_characteristic
solve_tridiag = _impl.solve_tridiag

__all__ = [
    "BACKEND",
    "sbp_diff_y",
    "mode_tendency",
    "inject_characteristic",
    "solve_tridiag",
]
