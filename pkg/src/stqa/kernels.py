"""Backend selection for the geometry kernels.

The compiled extension is used when it was built; otherwise the pure-Python
module provides the same functions. ``use_backend`` switches explicitly
(tests and the benchmark compare both).
"""
from __future__ import annotations

import numpy as np

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_impl = _ckernels if _ckernels is not None else _kernels_py


def available_backends() -> list[str]:
    names = ["python"]
    if _ckernels is not None:
        names.append("cython")
    return names


def backend() -> str:
    return _impl.BACKEND


def use_backend(name: str) -> None:
    global _impl
    if name == "python":
        _impl = _kernels_py
    elif name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        _impl = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def _arr(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64)


def max_displacement(cx, cy) -> float:
    return _impl.max_displacement(_arr(cx), _arr(cy))


def speed_stats(t, cx, cy) -> tuple[float, float, float]:
    return _impl.speed_stats(_arr(t), _arr(cx), _arr(cy))


def covers_grid(t, t0: float, t1: float, period: float, tol: float = 1e-6) -> bool:
    return bool(_impl.covers_grid(_arr(t), t0, t1, period, tol))


def nearest_annotated(annot_t, frame_t, half_window: float, tol: float = 1e-9) -> list[int]:
    return list(_impl.nearest_annotated(_arr(annot_t), _arr(frame_t), half_window, tol))


def extreme_index(values, maximize: bool, tol: float = 1e-9) -> int:
    return int(_impl.extreme_index(_arr(values), maximize, tol))


def iou(a, b) -> float:
    return float(_impl.iou(a, b))


def greedy_match(tx, ty, dx, dy, gate: float) -> list[tuple[int, int]]:
    return [(int(i), int(j)) for i, j in _impl.greedy_match(_arr(tx), _arr(ty), _arr(dx), _arr(dy), gate)]
