"""Time-stepping kernels with a numba path and a plain numpy fallback.

Conventions shared by both implementations:

* Controls are passed per step as left/right end values ``ua``, ``ub``; the
  control is linear on the step, so RK4 stages use ``ua``, the mean, and ``ub``.
* ``rk4_forward`` returns node states, the cubic Hermite midpoint of every
  step, and the index of the first non-finite node (-1 if none).
* ``rk4_adjoint`` takes transposed matrices ``At``, ``Nt`` and ``CtC = C^T C``.
* Quadratures use Simpson's rule on each step (left node, midpoint, right node).
* ``cost_gradient`` differentiates that discrete cost exactly (reverse mode
  through the RK4 step), so finite differences of the cost agree with it to
  rounding error.

The numba path is used when numba imports and ``RHC_NUMBA`` is not set to
0/false/off. ``BACKEND`` names the active path.
"""

import os

from . import _numpy

_flag = os.environ.get("RHC_NUMBA", "1").strip().lower()
_want_numba = _flag not in {"0", "false", "no", "off"}

_impl = _numpy
BACKEND = "numpy"
if _want_numba:
    try:
        from . import _numba

        _impl = _numba
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

rk4_forward = _impl.rk4_forward
rk4_adjoint = _impl.rk4_adjoint
state_cost = _impl.state_cost
cost_gradient = _impl.cost_gradient

__all__ = [
    "BACKEND",
    "rk4_forward",
    "rk4_adjoint",
    "state_cost",
    "cost_gradient",
]
