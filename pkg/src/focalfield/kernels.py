"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels``.  Set ``FOCALFIELD_KERNEL=python`` to
force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

_BACKENDS = {"python": _pykernels.tilde_sums}

try:
    from ._ckernels import tilde_sums as _c_tilde_sums
except ImportError:  # extension not built
    _c_tilde_sums = None
else:
    _BACKENDS["cython"] = _c_tilde_sums

if os.environ.get("FOCALFIELD_KERNEL", "").lower() == "python" or _c_tilde_sums is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

tilde_sums = _BACKENDS[BACKEND]


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_tilde_sums(name: str | None = None):
    """Return the ``tilde_sums`` implementation of a named backend."""
    if name is None:
        return tilde_sums
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; "
                         f"available: {available_backends()}") from None
