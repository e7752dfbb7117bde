"""Backend selection for the hot kernels.

At import time the compiled extension is preferred. Setting the environment
variable ``SPECROUND_BACKEND=python`` forces the pure-Python fallback, which
is also used automatically when the extension was not built.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:  # pragma: no cover - depends on whether the extension was built
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

_NAMES = ("compiled", "python")


def available_backends() -> tuple[str, ...]:
    """Names of the backends importable in this environment."""
    return _NAMES if _compiled is not None else ("python",)


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return ACTIVE
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}; expected one of {_NAMES}")


def _select() -> tuple[str, ModuleType]:
    forced = os.environ.get("SPECROUND_BACKEND", "").strip().lower()
    if forced == "python" or _compiled is None:
        return "python", _pykernels
    return "compiled", _compiled


BACKEND, ACTIVE = _select()
