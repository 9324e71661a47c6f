"""Power-set kernels with backend selection.

The compiled Cython module is used when it imports; otherwise the numpy
implementation in :mod:`radoncone._pykernels` is used.  Setting the
environment variable ``RADONCONE_NO_EXT=1`` skips the compiled module.  Both
expose

``subset_zeta(values)``
    Sum over submasks, ``out[S] = sum(values[T] for T <= S)``.
``subset_mobius(values)``
    Inverse of the above with alternating signs.
``star_value(g1, g2, s)`` / ``star_table(g1, g2)``
    Sum of ``g1[A] * g2[B]`` over mask pairs with ``A | B == S``.
``elementary_symmetric(w, nmax)``
    Elementary symmetric sums ``e_0 .. e_nmax`` of the entries of ``w``.
"""
import os
from types import ModuleType

import numpy as np

from radoncone import _pykernels

_ckernels = None
if os.environ.get("RADONCONE_NO_EXT", "") in ("", "0"):
    try:
        from radoncone import _ckernels
    except ImportError:  # pragma: no cover - depends on the build
        pass

_BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["native"] = _ckernels

_active_name = "native" if "native" in _BACKENDS else "python"
_active: ModuleType = _BACKENDS[_active_name]


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend() -> str:
    """Name of the backend currently in use."""
    return _active_name


def use_backend(name: str) -> None:
    """Switch every kernel to ``name`` ("native" or "python")."""
    global _active, _active_name
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _active = _BACKENDS[name]
    _active_name = name


def get_backend(name: str) -> ModuleType:
    return _BACKENDS[name]


def _f64(values):
    return np.ascontiguousarray(values, dtype=np.float64)


def subset_zeta(values) -> np.ndarray:
    return _active.subset_zeta(_f64(values))


def subset_mobius(values) -> np.ndarray:
    return _active.subset_mobius(_f64(values))


def star_value(g1, g2, s: int) -> float:
    return float(_active.star_value(_f64(g1), _f64(g2), int(s)))


def star_table(g1, g2) -> np.ndarray:
    return _active.star_table(_f64(g1), _f64(g2))


def elementary_symmetric(w, nmax: int) -> np.ndarray:
    return _active.elementary_symmetric(_f64(w), int(nmax))
