"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy backend is
the fallback.  ``SIMJOIN_BACKEND=python|compiled`` forces a choice at
import time, and :func:`set_backend` switches at runtime (used by the
backend-comparison benchmark and the test suite).
"""

import os

from . import _pykern

try:
    from . import _ckern
except ImportError:  # pragma: no cover - depends on build environment
    _ckern = None

_BACKENDS = {"python": _pykern}
if _ckern is not None:
    _BACKENDS["compiled"] = _ckern


def _initial():
    forced = os.environ.get("SIMJOIN_BACKEND")
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(
                f"SIMJOIN_BACKEND={forced!r} unavailable; "
                f"have {sorted(_BACKENDS)}"
            )
        return _BACKENDS[forced]
    return _BACKENDS.get("compiled", _pykern)


_active = _initial()


def available_backends():
    return sorted(_BACKENDS)


def active_backend() -> str:
    return _active.NAME


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; have {sorted(_BACKENDS)}")


def set_backend(name: str) -> None:
    global _active
    _active = get_backend(name)


def __getattr__(name):
    # dispatch kernel lookups to the active backend
    return getattr(_active, name)
