"""Online multi-target tracking with temporal appearance matching association."""

from ._backend import BACKEND
from .core import (AppearanceDescriptor, BoundingBox, Detection, Track, TrackerConfig,
                   validate_config)
from .engine import Engine, ResultRow, run_sequence

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AppearanceDescriptor", "BoundingBox", "Detection", "Track", "TrackerConfig",
    "validate_config", "Engine", "ResultRow", "run_sequence",
]
