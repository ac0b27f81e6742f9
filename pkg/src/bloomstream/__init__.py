"""BloomStream: single-pass stream clustering where the whole model is
probabilistic.

A timestamp-decayed count-min sketch estimates grid-cell density, and
partitioned bloom filters sharing the same hash family encode
arbitrarily-shaped clusters. Arriving instances update the sketch in
constant time; a cell whose decayed density crosses the threshold folds
its neighborhood into the cluster registry.
"""

from .bench import SyntheticStreamConfig, WindowMetrics, evaluate_over_horizons, generate_stream, purity
from .engine import OUTLIER, BloomStreamModel, IngestOutcome, ModelStats
from .errors import BloomStreamError, ConfigurationError
from .params import SketchParams, derive_geometry, fragment_capacity, make_params

__version__ = "0.1.0"

__all__ = [
    "BloomStreamModel",
    "BloomStreamError",
    "ConfigurationError",
    "IngestOutcome",
    "ModelStats",
    "OUTLIER",
    "SketchParams",
    "SyntheticStreamConfig",
    "WindowMetrics",
    "derive_geometry",
    "evaluate_over_horizons",
    "fragment_capacity",
    "generate_stream",
    "make_params",
    "purity",
    "__version__",
]
