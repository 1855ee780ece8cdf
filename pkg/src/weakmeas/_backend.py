"""Pick the stepping kernel at import time.

The compiled extension is used when importable.  Set ``WEAKMEAS_BACKEND`` to
``python`` to force the numpy fallback, or to ``cython`` to fail loudly when
the extension is missing.
"""

import os

_choice = os.environ.get("WEAKMEAS_BACKEND", "auto").lower()

if _choice == "python":
    from . import _kernels_py as kernels
elif _choice == "cython":
    from . import _kernels as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND


def get_kernels(name: str | None = None):
    """Return a kernel module by name, or the active one."""
    if name is None:
        return kernels
    if name == "python":
        from . import _kernels_py

        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
