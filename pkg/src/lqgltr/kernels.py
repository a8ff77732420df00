"""Backend selection for the simulation kernels.

The compiled extension is preferred when importable; set the environment
variable ``LQGLTR_PURE_PYTHON=1`` to force the pure-Python fallback.  Both
backends implement identical semantics (see ``_kernels_py``); results agree
to rounding, and ``tests/test_kernels.py`` asserts the parity.
"""

import os

from . import _kernels_py

_FORCE_PY = os.environ.get("LQGLTR_PURE_PYTHON", "") not in ("", "0")

if not _FORCE_PY:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME
lti_loop = _impl.lti_loop
linear_rk4 = _impl.linear_rk4
ekf_run = _impl.ekf_run

# Per-step helpers are only defined in Python; they are the reference
# implementation the compiled loop mirrors.
ekf_dynamics = _kernels_py.ekf_dynamics
ekf_jacobian = _kernels_py.ekf_jacobian
ekf_predict_step = _kernels_py.ekf_predict_step
ekf_update_step = _kernels_py.ekf_update_step


def available_backends():
    """Names and modules of the importable kernel backends."""
    backends = {"python": _kernels_py}
    try:
        from . import _kernels
        backends["compiled"] = _kernels
    except ImportError:
        pass
    return backends
