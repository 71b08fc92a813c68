"""Hot loops with a compiled implementation and a numpy fallback.

The compiled extension is used when it imports; setting
``CHILDTALK_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names the
active choice, and ``get(name)`` returns either implementation explicitly.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

from . import _py_laplace, _py_tree
from ._py_laplace import link_terms, obs_terms

PYTHON = SimpleNamespace(best_splits=_py_tree.best_splits, laplace_mode=_py_laplace.laplace_mode)

try:
    from .._ext import _laplace as _c_laplace
    from .._ext import _tree as _c_tree
except ImportError:
    COMPILED = None
else:
    COMPILED = SimpleNamespace(best_splits=_c_tree.best_splits, laplace_mode=_c_laplace.laplace_mode)

_forced = os.environ.get("CHILDTALK_PURE_PYTHON", "") not in ("", "0")
_active = PYTHON if (_forced or COMPILED is None) else COMPILED
BACKEND = "python" if _active is PYTHON else "compiled"


def get(name: str | None = None) -> SimpleNamespace:
    if name is None:
        return _active
    if name == "python":
        return PYTHON
    if name == "compiled":
        if COMPILED is None:
            raise ImportError("compiled kernels are not built")
        return COMPILED
    raise ValueError(f"unknown kernel backend {name!r}")


def available() -> list[str]:
    return ["python"] + (["compiled"] if COMPILED is not None else [])


def best_splits(*args, **kwargs):
    return _active.best_splits(*args, **kwargs)


def laplace_mode(*args, **kwargs):
    return _active.laplace_mode(*args, **kwargs)


__all__ = ["BACKEND", "COMPILED", "PYTHON", "available", "best_splits", "get",
           "laplace_mode", "link_terms", "obs_terms"]
