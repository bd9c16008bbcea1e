"""Optional numba acceleration.

Set ``FDRL_SLICE_NUMBA=0`` to force the pure-numpy kernels even when numba is
installed. The flag is read once at import time.
"""
import os
from warnings import warn

_requested = os.environ.get("FDRL_SLICE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    import numba as _nb
except ImportError:  # pragma: no cover - depends on the environment
    _nb = None
    if _requested:
        warn("numba not found, falling back to numpy kernels", RuntimeWarning)

USE_NUMBA = bool(_requested and _nb is not None)
HAVE_NUMBA = _nb is not None


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator.

    Functions compiled through here are only called when ``USE_NUMBA`` is
    true; the decorator still applies so the benchmark can compile them on
    demand even if the flag is off.
    """
    if _nb is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _nb.njit(*args, **kwargs)
