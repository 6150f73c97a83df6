"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
reference takes over.  Setting ``CONTACTSCALE_BACKEND=python`` forces the
fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("CONTACTSCALE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels


def get(backend=None):
    """Kernel namespace for ``backend`` ("cython", "python" or None = active)."""
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {backend!r}")


def available_backends():
    out = ["python"]
    try:
        from . import _kernels  # noqa: F401
        out.insert(0, "cython")
    except ImportError:  # pragma: no cover
        pass
    return out


generate_lanes = _impl.generate_lanes
simulate_batch = _impl.simulate_batch
max_jumps_batch = _impl.max_jumps_batch
