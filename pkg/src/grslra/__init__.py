"""Robust structured low-rank approximation on the Grassmannian."""

from .batch_solver import BatchConfig, BatchResult, run_batch
from .manifold import CGOptions, SubspaceBasis
from .online import ForecastConfig, ForecastRecord, run_stream
from .structure import HankelStructure, ObservationMask

__version__ = "0.1.0"

__all__ = [
    "BatchConfig",
    "BatchResult",
    "CGOptions",
    "ForecastConfig",
    "ForecastRecord",
    "HankelStructure",
    "ObservationMask",
    "SubspaceBasis",
    "run_batch",
    "run_stream",
]
