"""Abelian sandpile stabilizability: toppling, recurrence, random fields,
nested-volume probes, activated random walkers and wave analysis."""

__version__ = "0.1.0"

from .config import HeightConfig, load, save
from .fields import SamplerSpec, build_nested_lakes, declared_mean, line_field, sample
from .kernels import HAS_NUMBA
from .lattice import Volume, green_function, neighbor_table
from .recurrence import is_recurrent, recurrent_representative, umrc_chain
from .toppling import StabilizationResult, stabilize, wave_decompose

__all__ = [
    "__version__",
    "HAS_NUMBA",
    "HeightConfig",
    "SamplerSpec",
    "StabilizationResult",
    "Volume",
    "build_nested_lakes",
    "declared_mean",
    "green_function",
    "is_recurrent",
    "line_field",
    "load",
    "neighbor_table",
    "recurrent_representative",
    "sample",
    "save",
    "stabilize",
    "umrc_chain",
    "wave_decompose",
]
