"""Hyperspherical uniformity objectives, optimizers, uniformity tests and reference configurations."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DimensionError,
    DomainError,
    HyperUniformError,
    IncompatibleObjective,
    NotPositiveDefinite,
    NumericalError,
    SingularDistance,
    UnsupportedCase,
    ZeroNormRow,
)
from .objectives import InnerLoopConfig, KernelSpec, Kind, ObjectiveSpec, Sense, evaluate  # noqa: E402
from .optimizer import OptimizerConfig, Trajectory, multistart, reproduce_fig1, run  # noqa: E402
from .sphere import Metric, cap_measure, normalize, pairwise_distances, sample_uniform  # noqa: E402
