"""LSTM cell kernels with backend selection at import time.

The compiled Cython module is preferred when present; the pure-NumPy module
is the fallback. Set ``ARNN_KERNELS=python`` or ``ARNN_KERNELS=cython`` to
force one backend (forcing cython raises if the extension is missing).
"""

import os

from . import pykernels as _py

_forced = os.environ.get("ARNN_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = _py
elif _forced == "cython":
    from . import _core as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _py

lstm_cell_forward = _impl.lstm_cell_forward
lstm_cell_backward = _impl.lstm_cell_backward


def backend_name() -> str:
    """Name of the active kernel backend: "cython" or "python"."""
    return _impl.BACKEND


__all__ = ["lstm_cell_forward", "lstm_cell_backward", "backend_name", "pykernels"]
