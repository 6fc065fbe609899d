"""Input validation helpers shared by the data types and estimators."""
from __future__ import annotations

import numpy as np

from .errors import DegenerateDims, NonInvertibleAffine, ShapeMismatch


def check_affine(affine) -> np.ndarray:
    """Validate and return a 4x4 voxel-to-world affine as an owned float64 copy."""
    a = np.array(affine, dtype=np.float64, copy=True)
    if a.shape != (4, 4):
        raise ShapeMismatch(f"affine must be 4x4, got {a.shape}")
    if not np.allclose(a[3], [0.0, 0.0, 0.0, 1.0]):
        raise NonInvertibleAffine("affine last row must be (0, 0, 0, 1)")
    if not np.isfinite(a).all():
        raise NonInvertibleAffine("affine contains non-finite entries")
    if abs(np.linalg.det(a[:3, :3])) < 1e-12:
        raise NonInvertibleAffine("affine is singular")
    return a


def check_spacing(spacing) -> tuple[float, float, float]:
    s = tuple(float(v) for v in spacing)
    if len(s) != 3:
        raise ShapeMismatch(f"spacing must have 3 components, got {len(s)}")
    if any(not np.isfinite(v) or v <= 0 for v in s):
        raise DegenerateDims(f"spacing components must be positive and finite, got {s}")
    return s


def check_dims(dims) -> tuple[int, int, int]:
    d = tuple(int(v) for v in dims)
    if len(d) != 3:
        raise ShapeMismatch(f"dims must have 3 components, got {len(d)}")
    if any(v <= 0 for v in d):
        raise DegenerateDims(f"dims must be positive, got {d}")
    return d


def check_volume_data(data) -> np.ndarray:
    """Owned float64 copy, so freezing the volume never touches caller arrays."""
    arr = np.array(data, dtype=np.float64, copy=True)
    if arr.ndim != 3:
        raise ShapeMismatch(f"volume data must be 3D, got {arr.ndim}D")
    check_dims(arr.shape)
    return arr


def check_mask_data(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.ndim != 3:
        raise ShapeMismatch(f"mask data must be 3D, got {arr.ndim}D")
    if arr.dtype != bool:
        vals = np.unique(arr)
        if not np.isin(vals, (0, 1)).all():
            raise ShapeMismatch("mask values must all be 0 or 1")
    arr = arr.astype(bool)  # astype copies, keeping caller arrays writeable
    check_dims(arr.shape)
    return arr


def check_mask2d(mask, width: int | None = None, height: int | None = None) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ShapeMismatch(f"2D mask expected, got {arr.ndim}D")
    if arr.dtype != bool:
        vals = np.unique(arr)
        if not np.isin(vals, (0, 1)).all():
            raise ShapeMismatch("mask values must all be 0 or 1")
        arr = arr.astype(bool)
    if height is not None and width is not None and arr.shape != (height, width):
        raise ShapeMismatch(f"mask shape {arr.shape} does not match (h={height}, w={width})")
    return arr


def same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
