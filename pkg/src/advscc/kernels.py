"""Backend selection for the hot kernels.

Imports the compiled extension when present, the numpy fallback otherwise.
``BACKEND`` reports which one is active; :func:`load` fetches a specific
backend by name (used by the benchmark and the parity tests).
"""

from __future__ import annotations

try:
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:  # extension not built on this platform
    from . import _kernels_fallback as _impl

    BACKEND = "fallback"

pivot_update = _impl.pivot_update
lattice_min_rho = _impl.lattice_min_rho


def load(name: str):
    """Return the named backend module ("compiled" or "fallback")."""
    if name == "fallback":
        from . import _kernels_fallback

        return _kernels_fallback
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
