"""Vector balancing by the Gram-Schmidt walk, with exact small-instance
enumeration, concentration instrumentation, and a smoothed-analysis simulator."""

from .instances import Instance, generate_instance, load_instance, save_instance
from .walk import WalkTrace, run_walk
from .ortho import OrthoDecomposition, decompose, variance_proxy
from .enumeration import LeafDistribution, enumerate_walk
from .inequalities import BoundInputs, theorem1_bound
from .harness import RunStats, ExperimentReport, run_experiment, build_report
from .smoothed import SmoothedConfig, TiltedDistribution, build_augmented, tilt_distribution

__all__ = [
    "Instance", "generate_instance", "load_instance", "save_instance",
    "WalkTrace", "run_walk",
    "OrthoDecomposition", "decompose", "variance_proxy",
    "LeafDistribution", "enumerate_walk",
    "BoundInputs", "theorem1_bound",
    "RunStats", "ExperimentReport", "run_experiment", "build_report",
    "SmoothedConfig", "TiltedDistribution", "build_augmented", "tilt_distribution",
]

__version__ = "0.1.0"
