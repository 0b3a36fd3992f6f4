from dataclasses import dataclass

"""Speed of light in vacuum (m/s)"""
SPEED_OF_LIGHT: float = 299_792_458.0

"""Tolerance on triangle area (m^2) below which a facet is degenerate"""
MIN_TRIANGLE_AREA: float = 1e-9

"""Minimum ray parameter (m) for a ray-triangle hit to count"""
HIT_EPSILON: float = 1e-6

"""Current version of the scenario and model documents"""
SCHEMA_VERSION: int = 1


@dataclass()
class _SimDefaults:
    """
    Default values used by the channel simulator and the command-line pipeline

    """

    # Channel generation
    rays_per_path: int = 20
    snapshot_rate_hz: float = 10.0
    dpsd_snapshot_rate_hz: float = 8000.0

    # Statistics
    ensemble: int = 100
    dpsd_window_s: float = 0.05
    dpsd_fft_size: int = 8192

    # Clustering
    sse_threshold: float = 0.15
    slope_threshold: float = 0.005
    kmeans_restarts: int = 10
    kmeans_max_iterations: int = 300
    nk_max: int = 25

    # Data generation
    dataset_pairs: int = 500

    # CSV floats with 17 significant digits round-trip losslessly
    float_format: str = "%.17g"


"""The modifiable settings global for simulator defaults"""
SimDefaults: _SimDefaults = _SimDefaults()

__all__ = [
    "SimDefaults",
    "SPEED_OF_LIGHT",
    "MIN_TRIANGLE_AREA",
    "HIT_EPSILON",
    "SCHEMA_VERSION"
]
