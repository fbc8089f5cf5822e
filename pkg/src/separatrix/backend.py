"""Backend selection for the basin-classification stepper.

Prefers the compiled Cython module; falls back to the pure-Python twin
when the extension is unavailable or when ``SEPARATRIX_BACKEND=python``
is set (useful for the backend benchmark and for debugging).
"""
from __future__ import annotations

import os

from . import _stepper_py

if os.environ.get("SEPARATRIX_BACKEND", "").lower() == "python":
    stepper = _stepper_py
else:
    try:
        from . import _speedups as stepper  # type: ignore[no-redef]
    except ImportError:
        stepper = _stepper_py

BACKEND = stepper.BACKEND
classify_kernel = stepper.classify_kernel
pure_python_kernel = _stepper_py.classify_kernel
