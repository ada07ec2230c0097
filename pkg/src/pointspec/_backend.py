"""Selects the compiled kernel backend, falling back to pure numpy.

Set ``POINTSPEC_BACKEND=python`` to force the fallback (useful for the
benchmark and for debugging) or ``POINTSPEC_BACKEND=cython`` to insist on the
extension (raises if it is not importable).
"""
from __future__ import annotations

import os

_choice = os.environ.get("POINTSPEC_BACKEND", "").strip().lower()

if _choice == "python":
    from . import _kernels_py as _impl
elif _choice == "cython":
    from . import _kernels as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as _impl  # type: ignore[no-redef]

dft_weighted = _impl.dft_weighted
pair_radial_sum = _impl.pair_radial_sum
bessel_j_values = _impl.bessel_j_values


def backend_name() -> str:
    """Name of the active kernel backend ("cython" or "python")."""
    return _impl.BACKEND_NAME
