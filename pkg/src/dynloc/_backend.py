"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``DYNLOC_BACKEND=python`` forces the pure-Python kernels.
"""
import importlib
import os

from dynloc import _pykernels

_compiled = None
try:
    _compiled = importlib.import_module("dynloc._kernels")
except ImportError:  # extension not built
    _compiled = None


def available() -> list:
    """Names of the usable backends, compiled first."""
    return (["cython"] if _compiled is not None else []) + ["python"]


def get(name: str | None = None):
    """Kernel module for ``name`` ('cython' or 'python'); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled kernels (dynloc._kernels) are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


if os.environ.get("DYNLOC_BACKEND", "").lower() == "python" or _compiled is None:
    kernels = _pykernels
    NAME = "python"
else:
    kernels = _compiled
    NAME = "cython"


def resolve(name: str | None = None) -> str:
    """Name of the backend that ``get(name)`` would return."""
    get(name)
    return NAME if name is None else name
