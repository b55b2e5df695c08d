"""Shared enumerations for library configuration."""

from enum import StrEnum


class ConstantsMode(StrEnum):
    """How expert constants are computed for a fixed segmentation."""

    EXACT = "exact"
    MIDPOINT = "midpoint"
    CENTER = "center"


class Provenance(StrEnum):
    """Where the constants of a model came from."""

    OPTIMAL_EXACT = "optimal-exact"
    OPTIMAL_MIDPOINT = "optimal-midpoint"
    LEARNED = "learned"


class ErrorMethod(StrEnum):
    """The evaluator that produced an error value."""

    EXACT = "exact"
    SUM = "sum"
    INTEGRAL = "integral"
    OPTIMAL = "optimal"


class NoiseKind(StrEnum):
    """Supported additive noise families."""

    UNIFORM_RANGE = "uniform-range"
    GAUSSIAN = "gaussian"
    NONE = "none"


class SegmentationKind(StrEnum):
    """How a one-dimensional segmentation is formed."""

    OPTIMAL = "optimal"
    UNIFORM = "uniform"
