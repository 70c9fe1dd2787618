"""Executor selection: compiled Cython core when available, numpy fallback.

The environment variable PAYPLAN_BACKEND forces a choice ("compiled" or
"pure"); by default the compiled extension is used if it imports.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import pure

_COMPILED: ModuleType | None
try:
    from . import _tapecore as _COMPILED
except ImportError:
    _COMPILED = None


class _Backend:
    def __init__(self, module, name: str):
        self._m = module
        self.name = name

    def forward(self, ct) -> float:
        return self._m.forward(ct)

    def backward(self, ct) -> None:
        self._m.backward(ct)

    def fd_gradient(self, ct, coords, h):
        return self._m.fd_gradient(ct, coords, h)


def available_backends() -> list[str]:
    names = ["pure"]
    if _COMPILED is not None:
        names.insert(0, "compiled")
    return names


def default_backend_name() -> str:
    forced = os.environ.get("PAYPLAN_BACKEND")
    if forced:
        if forced not in ("compiled", "pure"):
            raise ValueError(f"PAYPLAN_BACKEND must be 'compiled' or 'pure', got {forced!r}")
        return forced
    return "compiled" if _COMPILED is not None else "pure"


def get_backend(name: str | None = None) -> _Backend:
    name = name or default_backend_name()
    if name == "compiled":
        if _COMPILED is None:
            raise RuntimeError(
                "compiled tape executor requested but the extension is not built; "
                "reinstall the package or set PAYPLAN_BACKEND=pure"
            )
        return _Backend(_COMPILED, "compiled")
    if name == "pure":
        return _Backend(pure, "pure")
    raise ValueError(f"unknown backend {name!r}")
