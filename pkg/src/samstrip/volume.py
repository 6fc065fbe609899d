"""Volumetric grid types and resampling onto a target lattice.

Conventions pinned once, for reproducibility across ports:

* voxel indices are zero-based; the affine maps homogeneous index
  (i, j, k, 1) to world millimeters;
* volume data is indexed ``data[x, y, z]`` (x fastest in storage order);
* samples falling outside the source lattice resample to 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonInvertibleAffine, ShapeMismatch
from .validation import (
    check_affine,
    check_dims,
    check_mask_data,
    check_spacing,
    check_volume_data,
)


def _freeze(obj, name, value):
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class GridSpec:
    """A target sampling lattice: dims, spacing, voxel-to-world affine."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    affine: np.ndarray

    def __post_init__(self):
        _freeze(self, "dims", check_dims(self.dims))
        _freeze(self, "spacing", check_spacing(self.spacing))
        aff = check_affine(self.affine)
        aff.flags.writeable = False
        _freeze(self, "affine", aff)


@dataclass(frozen=True)
class Volume:
    """A 3D scalar intensity grid with spacing and voxel-to-world affine."""

    data: np.ndarray = field(repr=False)
    spacing: tuple[float, float, float]
    affine: np.ndarray

    def __post_init__(self):
        arr = check_volume_data(self.data)
        arr.flags.writeable = False
        _freeze(self, "data", arr)
        _freeze(self, "spacing", check_spacing(self.spacing))
        aff = check_affine(self.affine)
        aff.flags.writeable = False
        _freeze(self, "affine", aff)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.dims, self.spacing, self.affine)


@dataclass(frozen=True)
class Mask3D:
    """A binary label grid aligned to a volume lattice."""

    data: np.ndarray = field(repr=False)
    affine: np.ndarray

    def __post_init__(self):
        arr = check_mask_data(self.data)
        arr.flags.writeable = False
        _freeze(self, "data", arr)
        aff = check_affine(self.affine)
        aff.flags.writeable = False
        _freeze(self, "affine", aff)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape


def default_affine(spacing) -> np.ndarray:
    """Diagonal affine for a grid with no orientation information."""
    sx, sy, sz = check_spacing(spacing)
    return np.diag([sx, sy, sz, 1.0])


def _source_coords(source_affine: np.ndarray, target: GridSpec) -> list[np.ndarray]:
    """Map every target voxel center into source voxel coordinates."""
    try:
        mat = np.linalg.inv(source_affine) @ target.affine
    except np.linalg.LinAlgError as exc:  # pragma: no cover - caught by validation
        raise NonInvertibleAffine(str(exc)) from exc
    nx, ny, nz = target.dims
    ii, jj, kk = np.meshgrid(
        np.arange(nx, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nz, dtype=np.float64),
        indexing="ij",
    )
    coords = []
    for axis in range(3):
        c = mat[axis, 0] * ii + mat[axis, 1] * jj + mat[axis, 2] * kk + mat[axis, 3]
        # snap near-integer coordinates so an identity mapping is exact
        r = np.round(c)
        coords.append(np.where(np.abs(c - r) < 1e-9, r, c))
    return coords


def _trilinear(data: np.ndarray, coords: list[np.ndarray]) -> np.ndarray:
    shape = data.shape
    inside = np.ones(coords[0].shape, dtype=bool)
    for c, n in zip(coords, shape):
        inside &= (c >= 0.0) & (c <= n - 1)

    lo, frac, hi = [], [], []
    for c, n in zip(coords, shape):
        f = np.floor(c)
        frac.append(c - f)
        l = np.clip(f.astype(np.int64), 0, n - 1)
        lo.append(l)
        hi.append(np.clip(l + 1, 0, n - 1))

    out = np.zeros(coords[0].shape, dtype=np.float64)
    fx, fy, fz = frac
    for dx in (0, 1):
        wx = fx if dx else 1.0 - fx
        ix = hi[0] if dx else lo[0]
        for dy in (0, 1):
            wy = fy if dy else 1.0 - fy
            iy = hi[1] if dy else lo[1]
            for dz in (0, 1):
                wz = fz if dz else 1.0 - fz
                iz = hi[2] if dz else lo[2]
                out += wx * wy * wz * data[ix, iy, iz]
    out[~inside] = 0.0
    return out


def _nearest(data: np.ndarray, coords: list[np.ndarray]) -> np.ndarray:
    shape = data.shape
    idx = [np.floor(c + 0.5).astype(np.int64) for c in coords]  # half-up
    inside = np.ones(idx[0].shape, dtype=bool)
    for i, n in zip(idx, shape):
        inside &= (i >= 0) & (i <= n - 1)
    gather = [np.clip(i, 0, n - 1) for i, n in zip(idx, shape)]
    out = data[gather[0], gather[1], gather[2]].astype(np.float64)
    out[~inside] = 0.0
    return out


def resample(vol: Volume, target: GridSpec, interp: str = "trilinear") -> Volume:
    """Resample a volume onto `target`, sampling at target voxel centers.

    `interp` is "trilinear" (8-neighbor weights) or "nearest"
    (half-up rounding per coordinate). Out-of-lattice samples become 0.
    """
    if interp not in ("trilinear", "nearest"):
        raise ValueError(f"unknown interpolation {interp!r}")
    coords = _source_coords(vol.affine, target)
    sampler = _trilinear if interp == "trilinear" else _nearest
    out = sampler(vol.data, coords)
    return Volume(out, target.spacing, target.affine)


def resample_mask(mask: Mask3D, target: GridSpec) -> Mask3D:
    """Nearest-neighbor resampling of a binary mask (the only safe choice)."""
    coords = _source_coords(mask.affine, target)
    out = _nearest(mask.data.astype(np.float64), coords)
    return Mask3D(out > 0.5, target.affine)


def masks_aligned(a: Mask3D, b: Mask3D) -> None:
    if a.dims != b.dims:
        raise ShapeMismatch(f"mask dims differ: {a.dims} vs {b.dims}")
