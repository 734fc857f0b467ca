"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``NPSQD_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("NPSQD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

diag_energies = _impl.diag_energies
project_coo = _impl.project_coo
apply_givens = _impl.apply_givens
apply_one_qubit = _impl.apply_one_qubit
apply_rxx = _impl.apply_rxx
apply_cz = _impl.apply_cz
recover_strings = _impl.recover_strings


def backends() -> dict[str, object]:
    """All importable kernel modules keyed by backend name."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
