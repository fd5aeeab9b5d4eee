"""Numerical kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when it imports cleanly; set the
environment variable ``ISACWAVE_PURE=1`` to force the numpy implementation
(used by the backend parity tests and the ``bench`` subcommand).
"""

import os

from . import _fallback


def _select():
    if os.environ.get("ISACWAVE_PURE", "").strip() not in ("", "0"):
        return _fallback
    try:
        from . import _core
    except ImportError:
        return _fallback
    return _core


_impl = _select()

BACKEND = _impl.NAME
reg_lower_gamma = _impl.reg_lower_gamma
reg_upper_gamma = _impl.reg_upper_gamma
reg_lower_gamma_array = _impl.reg_lower_gamma_array
reg_upper_gamma_array = _impl.reg_upper_gamma_array
quad_form_batch = _impl.quad_form_batch


def available_backends():
    """Name -> module for every importable kernel implementation."""
    impls = {_fallback.NAME: _fallback}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        impls[_core.NAME] = _core
    return impls
