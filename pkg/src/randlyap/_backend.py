"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twins are used. ``use_backend`` switches explicitly (tests and benchmarks).
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_active = _ckernels if _ckernels is not None else _pykernels


def available():
    names = ["python"]
    if _ckernels is not None:
        names.insert(0, "compiled")
    return names


def use_backend(name):
    """Select ``"compiled"`` or ``"python"`` kernels; returns the previous name."""
    global _active
    prev = current()
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _ckernels
    elif name == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def current():
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def kernels():
    return _active
