"""Grid-search kernel selection: compiled extension when built, numpy otherwise.

Set ``HYBRIDNOMA_PURE_PYTHON=1`` to force the numpy implementation.
"""

from __future__ import annotations

import os

from . import _grid_numpy

try:
    if os.environ.get("HYBRIDNOMA_PURE_PYTHON"):
        raise ImportError("pure-python mode requested")
    from . import _grid_kernel as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def get_kernel(name: str | None = None):
    """Return the ``maxmin_grid`` function for ``name`` (default: best available)."""
    name = name or BACKEND
    if name == "numpy":
        return _grid_numpy.maxmin_grid
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled grid kernel is not built; run `pip install -e .`")
        return _compiled.maxmin_grid
    raise ValueError(f"unknown kernel {name!r}")


maxmin_grid = get_kernel()
