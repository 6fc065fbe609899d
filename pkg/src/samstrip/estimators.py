"""scikit-learn style estimator facades over the functional pipeline.

`BrainExtractor.predict(volume)` returns the binary brain mask and
`transform(volume)` the skull-stripped volume, so the extractor drops
into sklearn-style tooling (`get_params`/`set_params`/`clone`) for
parameter sweeps. `BaselineExtractor` wraps the comparison arm behind
the same surface.
"""
from __future__ import annotations

import tempfile
from pathlib import Path

from sklearn.base import BaseEstimator

from .baseline import BaselineConfig, builtin_baseline, run_external_bet
from .nifti import save_volume
from .pipeline import apply_mask, extract_mask
from .prompts import PromptConfig
from .protocol import ProcessBackend
from .segmenter import ReferenceBackend, ReferenceBackendConfig
from .slicing import AXES
from .volume import Mask3D, Volume


def _check_volume(X) -> Volume:
    if not isinstance(X, Volume):
        raise TypeError(f"expected a Volume, got {type(X).__name__}")
    return X


class BrainExtractor(BaseEstimator):
    """Prompt-driven volumetric brain extraction.

    Parameters mirror the pipeline configuration; `backend="reference"`
    runs the built-in deterministic segmenter, `backend="process"` spawns
    `backend_command` instances speaking the line-JSON protocol.
    """

    def __init__(
        self,
        axis: str = "axial",
        window_lo: float = 0.01,
        window_hi: float = 0.99,
        margin: int = 3,
        k_inclusions: int = 5,
        k_exclusions: int = 8,
        min_foreground_area: int = 64,
        rim_width: int = 4,
        backend: str = "reference",
        tolerance: int = 25,
        connectivity: int = 4,
        backend_command: str | None = None,
        timeout: float = 120.0,
        parallelism: int = 1,
    ):
        self.axis = axis
        self.window_lo = window_lo
        self.window_hi = window_hi
        self.margin = margin
        self.k_inclusions = k_inclusions
        self.k_exclusions = k_exclusions
        self.min_foreground_area = min_foreground_area
        self.rim_width = rim_width
        self.backend = backend
        self.tolerance = tolerance
        self.connectivity = connectivity
        self.backend_command = backend_command
        self.timeout = timeout
        self.parallelism = parallelism

    # -- configuration plumbing ------------------------------------------------

    def _prompt_config(self) -> PromptConfig:
        return PromptConfig(
            margin=self.margin,
            k_inclusions=self.k_inclusions,
            k_exclusions=self.k_exclusions,
            min_foreground_area=self.min_foreground_area,
            rim_width=self.rim_width,
        )

    def _backend_factory(self):
        if self.backend == "reference":
            cfg = ReferenceBackendConfig(tolerance=self.tolerance, connectivity=self.connectivity)
            return lambda: ReferenceBackend(cfg)
        if self.backend == "process":
            if not self.backend_command:
                raise ValueError("backend='process' requires backend_command")
            command, timeout = self.backend_command, self.timeout
            return lambda: ProcessBackend(command, timeout=timeout)
        raise ValueError(f"unknown backend {self.backend!r}")

    def _validate(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        self._prompt_config()
        self._backend_factory()

    # -- estimator surface --------------------------------------------------------

    def fit(self, X=None, y=None):
        """Validate parameters; the extractor learns nothing from data."""
        self._validate()
        self.fitted_ = True
        return self

    def predict(self, X: Volume, manual_prompts=None, target_grid=None) -> Mask3D:
        """Binary brain mask for one volume."""
        self._validate()
        return self.extract(X, manual_prompts=manual_prompts, target_grid=target_grid).mask

    def extract(self, X: Volume, manual_prompts=None, target_grid=None):
        """Full extraction result (mask, prompts, window, backend identity)."""
        self._validate()
        return extract_mask(
            _check_volume(X),
            axis=self.axis,
            window_pct=(self.window_lo, self.window_hi),
            prompt_config=self._prompt_config(),
            backend_factory=self._backend_factory(),
            manual_prompts=manual_prompts,
            parallelism=self.parallelism,
            target_grid=target_grid,
        )

    def transform(self, X: Volume) -> Volume:
        """Skull-stripped volume: non-brain voxels zeroed."""
        vol = _check_volume(X)
        return apply_mask(vol, self.predict(vol))

    def fit_predict(self, X: Volume, y=None) -> Mask3D:
        return self.fit().predict(X)


class BaselineExtractor(BaseEstimator):
    """Classical comparison arm behind the same predict surface.

    mode="builtin" runs the in-package fractional-threshold method;
    mode="external" shells out to a BET-compatible executable.
    """

    def __init__(self, f: float = 0.5, mode: str = "builtin", executable: str | None = None):
        self.f = f
        self.mode = mode
        self.executable = executable

    def _config(self) -> BaselineConfig:
        return BaselineConfig(f=self.f, mode=self.mode, executable=self.executable)

    def fit(self, X=None, y=None):
        self._config()
        self.fitted_ = True
        return self

    def predict(self, X: Volume) -> Mask3D:
        cfg = self._config()
        vol = _check_volume(X)
        if cfg.mode == "builtin":
            return builtin_baseline(vol, cfg)
        with tempfile.TemporaryDirectory(prefix="samstrip-bet-") as tmp:
            in_path = Path(tmp) / "input.nii.gz"
            save_volume(vol, in_path)
            return run_external_bet(in_path, cfg, tmp)

    def transform(self, X: Volume) -> Volume:
        vol = _check_volume(X)
        return apply_mask(vol, self.predict(vol))

    def identity(self) -> str:
        return self._config().identity()
