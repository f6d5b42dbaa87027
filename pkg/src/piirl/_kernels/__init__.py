"""Hot planner kernels: compiled core with a NumPy fallback.

The compiled extension (`piirl._kernels._core`, Cython) is preferred when it
imported cleanly; otherwise the NumPy implementation (`_pyimpl`) is used.
Set ``PI_IRL_BACKEND=python`` or ``PI_IRL_BACKEND=ext`` to force a choice
(forcing ``ext`` raises if the extension is unavailable).
"""

import os

from . import _pyimpl


def _select():
    forced = os.environ.get("PI_IRL_BACKEND", "auto").strip().lower()
    if forced in ("python", "py"):
        return _pyimpl
    try:
        from . import _core
    except ImportError:
        if forced == "ext":
            raise
        return _pyimpl
    return _core


_impl = _select()

BACKEND = _impl.BACKEND_NAME
rollout_policies = _impl.rollout_policies
integrate_features = _impl.integrate_features
wrap_angle = _impl.wrap_angle


def available_backends():
    """Names of importable backends ('python' always; 'ext' if compiled)."""
    names = ["python"]
    try:
        from . import _core  # noqa: F401
        names.append("ext")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the kernel module for 'python' or 'ext' (for benchmarks/tests)."""
    if name == "python":
        return _pyimpl
    if name == "ext":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
