"""Dense float64 matrix helpers.

A "matrix" throughout the package is a 2-D C-contiguous float64 numpy
array (rows x cols, row-major).  Reductions delegate to numpy, whose
kernels are deterministic for a fixed platform and array shape, so every
run of the same program produces bitwise identical results.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def matrix(data) -> np.ndarray:
    """Build a validated 2-D float64 matrix from nested lists or an array."""
    m = np.array(data, dtype=np.float64, order="C")
    if m.ndim != 2:
        raise ShapeError(f"matrix must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {m.shape}")
    require_finite(m, "matrix")
    return m


def require_matrix(m: np.ndarray, name: str) -> np.ndarray:
    if not isinstance(m, np.ndarray) or m.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D array")
    return m


def require_finite(m: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise ShapeError(f"{name} contains non-finite entries")
    return m


def zeros(rows: int, cols: int) -> np.ndarray:
    return np.zeros((rows, cols), dtype=np.float64)


def eye(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.float64)


def ones(rows: int, cols: int) -> np.ndarray:
    return np.ones((rows, cols), dtype=np.float64)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with explicit shape checking."""
    require_matrix(a, "a")
    require_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"inner dimensions differ: {a.shape[0]}x{a.shape[1]} @ {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction for stability.

    Each output row is nonnegative and sums to 1 (within float rounding);
    adding a constant to an input row leaves its output row unchanged.
    """
    require_matrix(m, "m")
    require_finite(m, "softmax input")
    shifted = m - np.max(m, axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)
