"""Windowed 8-bit slice decomposition and 3D mask reconstruction.

A slice's pixel raster is row-major with x as the column axis: axial
planes are (y rows, x cols), coronal (z rows, x cols), sagittal
(z rows, y cols). Windowing is per-volume so pixel values are
comparable across slices of one scan.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CountMismatch, EmptyVolume, ShapeMismatch
from .validation import check_mask2d
from .volume import GridSpec, Mask3D, Volume

AXES = ("axial", "coronal", "sagittal")
_AXIS_DIM = {"axial": 2, "coronal": 1, "sagittal": 0}


@dataclass(frozen=True)
class SliceImage:
    """One windowed 8-bit plane of a volume."""

    pixels: np.ndarray = field(repr=False)  # uint8, (height, width)
    axis: str
    index: int
    window: tuple[float, float]

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.uint8, copy=True)
        if arr.ndim != 2:
            raise ShapeMismatch(f"slice pixels must be 2D, got {arr.ndim}D")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)
        wmin, wmax = (float(v) for v in self.window)
        if not wmin < wmax:
            raise ShapeMismatch(f"window must satisfy wmin < wmax, got {self.window}")
        object.__setattr__(self, "window", (wmin, wmax))
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def nearest_rank(values: np.ndarray, p: float) -> float:
    """Zero-based nearest-rank quantile; fractional index rounds half-up."""
    v = np.sort(values, axis=None)
    idx = int(np.floor(p * (v.size - 1) + 0.5))
    return float(v[idx])


def compute_window(vol: Volume, lo_pct: float = 0.01, hi_pct: float = 0.99) -> tuple[float, float]:
    """Robust intensity window from nearest-rank quantiles of the volume."""
    if not (0.0 <= lo_pct < hi_pct <= 1.0):
        raise ValueError(f"need 0 <= lo < hi <= 1, got ({lo_pct}, {hi_pct})")
    if vol.data.size == 0:
        raise EmptyVolume("cannot window an empty volume")
    flat = np.sort(vol.data, axis=None)
    lo = float(flat[int(np.floor(lo_pct * (flat.size - 1) + 0.5))])
    hi = float(flat[int(np.floor(hi_pct * (flat.size - 1) + 0.5))])
    if lo == hi:  # constant volume: widen so the window stays valid
        return lo, lo + 1.0
    return lo, hi


def _plane(data: np.ndarray, axis: str, index: int) -> np.ndarray:
    if axis == "axial":
        return data[:, :, index].T  # (ny, nx)
    if axis == "coronal":
        return data[:, index, :].T  # (nz, nx)
    return data[index, :, :].T      # (nz, ny)


def decompose(vol: Volume, axis: str = "axial", window: tuple[float, float] | None = None) -> list[SliceImage]:
    """Split a volume into windowed 8-bit slices along `axis`.

    Pixel = clamp((v - wmin) / (wmax - wmin), 0, 1) * 255, rounded half-up.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if window is None:
        window = compute_window(vol)
    wmin, wmax = window
    norm = np.clip((vol.data - wmin) / (wmax - wmin), 0.0, 1.0)
    scaled = np.floor(norm * 255.0 + 0.5).astype(np.uint8)
    count = vol.dims[_AXIS_DIM[axis]]
    return [
        SliceImage(_plane(scaled, axis, i), axis, i, (wmin, wmax))
        for i in range(count)
    ]


def decompose_mask(mask: Mask3D, axis: str = "axial") -> list[np.ndarray]:
    """Planes of a 3D mask as 2D boolean masks, same ordering as decompose."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    count = mask.dims[_AXIS_DIM[axis]]
    return [_plane(mask.data, axis, i) for i in range(count)]


def reconstruct(masks: list[np.ndarray], axis: str, grid: GridSpec) -> Mask3D:
    """Stack per-slice 2D masks back into a Mask3D on `grid`."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    nx, ny, nz = grid.dims
    expected_count = grid.dims[_AXIS_DIM[axis]]
    if len(masks) != expected_count:
        raise CountMismatch(f"need {expected_count} masks along {axis}, got {len(masks)}")
    shape = {"axial": (ny, nx), "coronal": (nz, nx), "sagittal": (nz, ny)}[axis]
    bits = np.zeros((nx, ny, nz), dtype=bool)
    for i, m in enumerate(masks):
        m = check_mask2d(m, width=shape[1], height=shape[0])
        if axis == "axial":
            bits[:, :, i] = m.T
        elif axis == "coronal":
            bits[:, i, :] = m.T
        else:
            bits[i, :, :] = m.T
    return Mask3D(bits, grid.affine)


def write_pgm(img: SliceImage, directory) -> Path:
    """Debug export: binary PGM named slice_<axis>_<index04>.pgm."""
    path = Path(directory) / f"slice_{img.axis}_{img.index:04d}.pgm"
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    path.write_bytes(header + img.pixels.tobytes())
    return path
