"""Multi-shot detection of RF signals from magnitude-only Rydberg-atom
quantum receiver measurements: likelihood-ratio tests, energy detectors
with exact CFAR thresholds, and a reproducible Monte Carlo harness.
"""

from .config import SystemConfig
from .detectors import DetectorKind
from .harness import ExperimentSpec, run_trials, sweep
from .specfn import RngStream

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "DetectorKind",
    "ExperimentSpec",
    "RngStream",
    "run_trials",
    "sweep",
    "__version__",
]
