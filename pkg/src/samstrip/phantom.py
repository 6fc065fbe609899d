"""Synthetic head phantoms with analytic ground truth.

A phantom is nested ellipsoids evaluated at voxel centers: brain tissue,
an air gap, a bright skull shell, and a dimmer scalp shell, optionally
with a bright lesion blob near the brain surface. Ground truth is the
set of brain voxels (lesion included), independent of noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecOutOfBounds
from .rng import Xoshiro256StarStar
from .volume import Mask3D, Volume, default_affine

SKULL_GAP = 2.0  # air gap between brain surface and skull inner wall, voxels


@dataclass(frozen=True)
class LesionSpec:
    center: tuple[float, float, float]
    semiaxes: tuple[float, float, float]
    intensity: float = 160.0


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = (96, 96, 96)
    brain_semiaxes: tuple[float, float, float] = (30.0, 36.0, 28.0)
    skull_thickness: float = 3.0
    scalp_thickness: float = 2.0
    background_intensity: float = 0.0
    brain_intensity: float = 100.0
    skull_intensity: float = 200.0
    scalp_intensity: float = 60.0
    lesion: LesionSpec | None = None
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if any(int(d) <= 0 for d in self.dims):
            raise SpecOutOfBounds(f"dims must be positive, got {self.dims}")
        if self.skull_thickness < 1 or self.scalp_thickness < 1:
            raise SpecOutOfBounds("shell thicknesses must be >= 1 voxel")
        for name in ("background", "brain", "skull", "scalp"):
            if getattr(self, f"{name}_intensity") < 0:
                raise SpecOutOfBounds(f"{name} intensity must be non-negative")
        if self.noise_sigma < 0:
            raise SpecOutOfBounds("noise_sigma must be non-negative")
        outer = self.outer_semiaxes
        for c, r, n in zip(self.center, outer, self.dims):
            if c - r < 0 or c + r > n - 1:
                raise SpecOutOfBounds(
                    f"head (semi-axes {outer}) does not fit inside dims {self.dims}"
                )
        if self.lesion is not None:
            if self.lesion.intensity < 0:
                raise SpecOutOfBounds("lesion intensity must be non-negative")
            for c, r, n in zip(self.lesion.center, self.lesion.semiaxes, self.dims):
                if c - r < 0 or c + r > n - 1:
                    raise SpecOutOfBounds("lesion does not fit inside dims")

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple((n - 1) / 2.0 for n in self.dims)

    @property
    def outer_semiaxes(self) -> tuple[float, float, float]:
        grow = SKULL_GAP + self.skull_thickness + self.scalp_thickness
        return tuple(a + grow for a in self.brain_semiaxes)

    @staticmethod
    def default_lesion() -> LesionSpec:
        """A lesion hugging the default brain's +x surface (2-voxel margin)."""
        return LesionSpec(center=(68.0, 47.5, 47.5), semiaxes=(7.0, 7.0, 7.0))


def _ellipsoid(dims, center, semiaxes) -> np.ndarray:
    xs = np.arange(dims[0], dtype=np.float64).reshape(-1, 1, 1)
    ys = np.arange(dims[1], dtype=np.float64).reshape(1, -1, 1)
    zs = np.arange(dims[2], dtype=np.float64).reshape(1, 1, -1)
    r2 = (
        ((xs - center[0]) / semiaxes[0]) ** 2
        + ((ys - center[1]) / semiaxes[1]) ** 2
        + ((zs - center[2]) / semiaxes[2]) ** 2
    )
    return r2 <= 1.0


def make_phantom(spec: PhantomSpec) -> tuple[Volume, Mask3D]:
    """Render the phantom volume and its analytic ground-truth brain mask."""
    grow_skull_in = tuple(a + SKULL_GAP for a in spec.brain_semiaxes)
    grow_skull_out = tuple(a + spec.skull_thickness for a in grow_skull_in)
    grow_scalp_out = tuple(a + spec.scalp_thickness for a in grow_skull_out)

    brain = _ellipsoid(spec.dims, spec.center, spec.brain_semiaxes)
    skull_in = _ellipsoid(spec.dims, spec.center, grow_skull_in)
    skull_out = _ellipsoid(spec.dims, spec.center, grow_skull_out)
    scalp_out = _ellipsoid(spec.dims, spec.center, grow_scalp_out)

    data = np.full(spec.dims, spec.background_intensity, dtype=np.float64)
    data[scalp_out & ~skull_out] = spec.scalp_intensity
    data[skull_out & ~skull_in] = spec.skull_intensity
    data[brain] = spec.brain_intensity

    truth = brain
    if spec.lesion is not None:
        lesion = _ellipsoid(spec.dims, spec.lesion.center, spec.lesion.semiaxes)
        data[lesion] = spec.lesion.intensity
        truth = brain | lesion

    if spec.noise_sigma > 0:
        gen = Xoshiro256StarStar(spec.seed)
        noise = gen.normal(data.size, spec.noise_sigma).reshape(spec.dims)
        data = np.maximum(data + noise, 0.0)

    affine = default_affine((1.0, 1.0, 1.0))
    return Volume(data, (1.0, 1.0, 1.0), affine), Mask3D(truth, affine)
