"""Prompt-driven volumetric brain extraction and evaluation toolkit.

The high-level surface is sklearn-flavored: `BrainExtractor` and
`BaselineExtractor` expose `fit`/`predict`/`transform`/`get_params`.
The functional layer underneath (volume I/O, slicing, prompt
generation, backends, metrics, phantoms) is importable per module.
"""

__version__ = "0.1.0"

from .baseline import BaselineConfig, builtin_baseline, run_external_bet
from .errors import SamstripError
from .estimators import BaselineExtractor, BrainExtractor
from .metrics import (
    CategoryAggregate,
    ConfusionCounts,
    MetricReport,
    aggregate,
    compare_masks,
    confusion,
    emit_report,
    metrics,
)
from .nifti import load_mask, load_nifti, load_volume, save_mask, save_nifti, save_volume
from .phantom import LesionSpec, PhantomSpec, make_phantom
from .pipeline import ExtractionResult, apply_mask, extract_mask
from .prompts import PromptConfig, PromptSet, generate_prompts
from .protocol import ProcessBackend, rle_decode, rle_encode
from .segmenter import ReferenceBackend, ReferenceBackendConfig, reference_segment, segment
from .slicing import SliceImage, compute_window, decompose, reconstruct
from .volume import GridSpec, Mask3D, Volume, resample, resample_mask

__all__ = [
    "__version__",
    "SamstripError",
    "Volume",
    "Mask3D",
    "GridSpec",
    "resample",
    "resample_mask",
    "load_nifti",
    "save_nifti",
    "load_volume",
    "save_volume",
    "load_mask",
    "save_mask",
    "SliceImage",
    "compute_window",
    "decompose",
    "reconstruct",
    "PromptConfig",
    "PromptSet",
    "generate_prompts",
    "ReferenceBackend",
    "ReferenceBackendConfig",
    "reference_segment",
    "segment",
    "ProcessBackend",
    "rle_encode",
    "rle_decode",
    "BaselineConfig",
    "builtin_baseline",
    "run_external_bet",
    "ConfusionCounts",
    "MetricReport",
    "CategoryAggregate",
    "confusion",
    "metrics",
    "compare_masks",
    "aggregate",
    "emit_report",
    "PhantomSpec",
    "LesionSpec",
    "make_phantom",
    "extract_mask",
    "apply_mask",
    "ExtractionResult",
    "BrainExtractor",
    "BaselineExtractor",
]
