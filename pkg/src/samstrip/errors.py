"""Exception taxonomy shared across the package.

Every failure mode callers are expected to handle gets its own class so the
CLI can map errors to diagnostics without string matching.
"""


class SamstripError(Exception):
    """Base class for all package errors."""


# --- NIfTI / volume errors ------------------------------------------------

class BadMagic(SamstripError):
    """Input is not a NIfTI-1 single-file stream."""


class UnsupportedDatatype(SamstripError):
    """NIfTI datatype outside the supported subset (uint8/int16/float32/float64)."""


class Truncated(SamstripError):
    """Voxel payload shorter than dims times element size."""


class DegenerateDims(SamstripError):
    """A volume dimension is zero or negative."""


class NonInvertibleAffine(SamstripError):
    """Affine matrix cannot be inverted."""


class EmptyVolume(SamstripError):
    """Operation requires at least one voxel."""


# --- slicing errors --------------------------------------------------------

class CountMismatch(SamstripError):
    """Number of 2D masks does not match the grid extent along the axis."""


class ShapeMismatch(SamstripError):
    """Array shapes do not line up."""


# --- prompt errors ---------------------------------------------------------

class EmptyForeground(SamstripError):
    """Marker placement requires a non-empty foreground estimate."""


class EmptyPromptSet(SamstripError):
    """Segmentation requires at least one inclusion point."""


# --- backend / protocol errors ----------------------------------------------

class BackendUnavailable(SamstripError):
    """Backend process is gone (failed to spawn, or exited)."""

    def __init__(self, message, exit_status=None):
        super().__init__(message)
        self.exit_status = exit_status


class ProtocolError(SamstripError):
    """Malformed message, id mismatch, or bad RLE on the wire."""


class ProtocolTimeout(SamstripError):
    """Backend did not answer within the per-request timeout."""


class BadRunLength(ProtocolError):
    """RLE run list violates the sum or positivity invariants."""


# --- baseline errors ---------------------------------------------------------

class ExecutableNotFound(SamstripError):
    """External brain-extraction tool is not present."""


class ToolFailed(SamstripError):
    """External tool exited nonzero."""

    def __init__(self, message, exit_status=None, stderr=""):
        super().__init__(message)
        self.exit_status = exit_status
        self.stderr = stderr


class OutputMissing(SamstripError):
    """External tool exited zero but produced no mask file."""


class EmptyResult(SamstripError):
    """Baseline produced no voxel above threshold."""


# --- evaluation errors ----------------------------------------------------------

class EmptyAggregate(SamstripError):
    """Aggregation over an empty report list."""


# --- phantom errors -----------------------------------------------------------

class SpecOutOfBounds(SamstripError):
    """Phantom geometry does not fit inside the requested dims."""
