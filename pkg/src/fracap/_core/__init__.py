"""Backend selection for the pair-interaction kernels.

The compiled extension is used when importable; otherwise the numpy
fallback takes over. Set ``FRACAP_BACKEND`` to ``cython`` or ``python``
to force one (``cython`` raises if the extension is missing); the default
is ``auto``.
"""

import os

from . import kernels_py

_requested = os.environ.get("FRACAP_BACKEND", "auto").lower()

if _requested not in ("auto", "cython", "python"):
    raise ValueError(f"FRACAP_BACKEND must be auto, cython or python, not {_requested!r}")

if _requested == "python":
    _impl = kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        if _requested == "cython":
            raise
        _impl = kernels_py

BACKEND = _impl.BACKEND_NAME
modular_terms = _impl.modular_terms
modular_gradient = _impl.modular_gradient


def available_backends() -> dict:
    """Name -> module for every importable kernel backend."""
    backends = {"python": kernels_py}
    try:
        from . import _kernels_cy

        backends["cython"] = _kernels_cy
    except ImportError:
        pass
    return backends
