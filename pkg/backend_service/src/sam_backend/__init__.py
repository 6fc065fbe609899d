"""Promptable 2D segmenter service: Segment Anything behind line-JSON stdio."""

__version__ = "0.1.0"

from .service import ServiceConfig, rle_encode, serve

__all__ = ["__version__", "ServiceConfig", "serve", "rle_encode"]
