"""Backend selection for the hot numeric kernels.

Set ``HEATCTL_BACKEND=numpy`` to force the vectorized numpy path; the default
uses the numba-compiled loops when numba imports cleanly.
"""
import os

from . import _ref

BACKEND_ENV = "HEATCTL_BACKEND"

_requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise RuntimeError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {_requested!r}")

_impl = _ref
if _requested == "numba":
    try:
        from . import _jit as _impl
    except ImportError:  # numba missing or broken
        _impl = _ref

BACKEND = "numba" if _impl is not _ref else "numpy"

goursat_sweep = _impl.goursat_sweep
solve_l_offsets = _impl.solve_l_offsets
gauss_conv_even = _impl.gauss_conv_even
heat_control_linear = _impl.heat_control_linear
heat_control_pc = _impl.heat_control_pc
