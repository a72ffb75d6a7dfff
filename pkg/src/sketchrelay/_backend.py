"""Kernel backend selection.

The replay kernels exist twice: compiled with numba and as pure numpy.
SKETCHRELAY_BACKEND picks one at import time:

  auto   (default) numba if importable, else numpy
  numba  require numba, fail loudly if missing
  numpy  force the pure-numpy fallback

Both backends are exact integer code paths and produce identical
simulation results; the env flag only trades compile time for speed.
"""

from __future__ import annotations

import os

_ENV_VAR = "SKETCHRELAY_BACKEND"
_choice = os.environ.get(_ENV_VAR, "auto").strip().lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"{_ENV_VAR} must be 'auto', 'numba' or 'numpy', got {_choice!r}"
    )

if _choice == "numpy":
    from . import _kernels_numpy as kernels
else:
    try:
        from . import _kernels_numba as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "numba":
            raise
        from . import _kernels_numpy as kernels  # type: ignore[no-redef]

BACKEND = kernels.NAME


def get_kernels(name: str | None = None):
    """Kernel module by name ('numba' or 'numpy'); default is the active one."""
    if name is None:
        return kernels
    if name == "numpy":
        from . import _kernels_numpy

        return _kernels_numpy
    if name == "numba":
        from . import _kernels_numba

        return _kernels_numba
    raise ValueError(f"unknown backend {name!r}")
