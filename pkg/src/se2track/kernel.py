"""Backend selection for the simulation loop.

The compiled core is used when it imports; ``SE2TRACK_PURE_PYTHON=1`` forces
the pure-Python loop.  Both expose ``simulate`` with the same array contract
(see ``_pykernel``).
"""

from __future__ import annotations

import os

from . import _pykernel
from ._pykernel import COLUMNS, DIVERGED, NCOL

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS = {"python": _pykernel.simulate}
if _ckernel is not None:
    BACKENDS["cython"] = _ckernel.simulate

if os.environ.get("SE2TRACK_PURE_PYTHON", "") not in ("", "0") or _ckernel is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

simulate = BACKENDS[BACKEND]


def get_simulate(name: str | None = None):
    if name is None:
        return simulate
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


__all__ = ["BACKEND", "BACKENDS", "COLUMNS", "DIVERGED", "NCOL", "get_simulate", "simulate"]
