"""Select the integrator kernel: compiled when available, pure Python otherwise.

Set ``ALKALISPIN_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _integrate_py

BACKEND = "python"
dp45 = _integrate_py.dp45
rk4_fixed = _integrate_py.rk4_fixed

if not os.environ.get("ALKALISPIN_PURE_PYTHON"):
    try:
        from . import _integrate as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        dp45 = _compiled.dp45
        rk4_fixed = _compiled.rk4_fixed

OK = _integrate_py.OK
STEP_UNDERFLOW = _integrate_py.STEP_UNDERFLOW
TOO_MANY_STEPS = _integrate_py.TOO_MANY_STEPS
