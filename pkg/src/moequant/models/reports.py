"""Result types: fitted models, error reports, bound checks and exportable tables."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt

from moequant.core.errors import DimensionMismatchError, InvalidParamsError, NonFiniteValueError
from moequant.models.enums import ErrorMethod, Provenance
from moequant.models.numerics import FloatArray, IntArray
from moequant.models.segmentation import Partition

Scalar = float | int | str | None


@dataclass(frozen=True, eq=False)
class MoEModel:
    """A zero-compute 1-sparse mixture of experts: a partition plus one constant per region."""

    segmentation: Partition
    constants: FloatArray
    provenance: Provenance

    def __post_init__(self) -> None:
        """Validates that there is exactly one finite constant per region."""
        constants = np.asarray(self.constants, dtype=np.float64).reshape(-1)
        if len(constants) != self.segmentation.m:
            raise DimensionMismatchError(f"{len(constants)} constants for {self.segmentation.m} regions")
        if not np.all(np.isfinite(constants)):
            raise NonFiniteValueError("Expert constants must be finite.")
        constants.setflags(write=False)
        object.__setattr__(self, "constants", constants)

    @property
    def m(self) -> int:
        """Number of experts."""
        return self.segmentation.m

    @property
    def dim(self) -> int:
        """Input dimension."""
        return self.segmentation.dim

    def predict(self, points: npt.ArrayLike) -> FloatArray:
        """Returns the constant of the region each point routes to."""
        return np.asarray(self.constants[self.segmentation.route(points)], dtype=np.float64)


@dataclass(frozen=True)
class ErrorReport:
    """A test-error value split into the noise floor and the excess above it."""

    total: float
    noise_floor: float
    method: ErrorMethod
    m: int
    per_region: tuple[float, ...] = ()

    @property
    def excess(self) -> float:
        """total - noise floor."""
        return self.total - self.noise_floor

    def to_dict(self) -> dict[str, Any]:
        """Serializes to the JSON export layout."""
        return {
            "total": self.total,
            "noise_floor": self.noise_floor,
            "excess": self.excess,
            "method": str(self.method),
            "m": self.m,
            "per_region": list(self.per_region),
        }


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    n: int

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        """Whether value lies within ``sigmas`` standard errors of the mean."""
        return abs(self.mean - value) <= sigmas * self.stderr


@dataclass(frozen=True, eq=False)
class RoutedCounts:
    """Number of training examples routed to each region."""

    counts: IntArray

    @property
    def n(self) -> int:
        """Total number of routed examples."""
        return int(self.counts.sum())

    @property
    def m(self) -> int:
        """Number of regions."""
        return len(self.counts)

    @property
    def empty_regions(self) -> tuple[int, ...]:
        """Indices of regions that received no examples."""
        return tuple(int(i) for i in np.flatnonzero(self.counts == 0))


@dataclass(frozen=True, eq=False)
class LearnedMoE:
    """Least-squares expert constants learned from a dataset.

    Attributes:
        segmentation: The fixed partition used for routing.
        constants: Per-region output means, with the fallback value where no data arrived.
        counts: Examples routed per region.
        fallback_value: Mean of all training outputs.
        fallback_regions: Regions whose constant is the fallback value.
    """

    segmentation: Partition
    constants: FloatArray
    counts: RoutedCounts
    fallback_value: float
    fallback_regions: tuple[int, ...] = ()

    @property
    def model(self) -> MoEModel:
        """The learned predictor."""
        return MoEModel(self.segmentation, self.constants, Provenance.LEARNED)


@dataclass(frozen=True, eq=False)
class OptimalReference:
    """Best in-class constants of a fixed segmentation with the region masses and error they imply."""

    constants: FloatArray
    masses: FloatArray
    approximation: ErrorReport

    def estimation_error(self, learned: FloatArray) -> float:
        """Mass-weighted squared gap between learned and optimal constants."""
        return float(np.sum((np.asarray(learned) - self.constants) ** 2 * self.masses))


@dataclass(frozen=True, eq=False)
class DecompositionReport:
    """Test error of a learned model split into approximation and estimation error."""

    test_error: float
    approximation_error: float
    estimation_error: float
    region_masses: FloatArray
    noise_floor: float = 0.0

    @property
    def identity_gap(self) -> float:
        """|test - (approximation + estimation)|, zero up to quadrature tolerance."""
        return abs(self.test_error - self.approximation_error - self.estimation_error)

    def to_dict(self) -> dict[str, Any]:
        """Serializes for JSON export."""
        return {
            "test_error": self.test_error,
            "approximation_error": self.approximation_error,
            "estimation_error": self.estimation_error,
            "noise_floor": self.noise_floor,
            "identity_gap": self.identity_gap,
            "region_masses": self.region_masses.tolist(),
        }


@dataclass(frozen=True)
class BoundParams:
    """Parameters of the concentration bounds on learned constants.

    Attributes:
        gamma: Deviation multiplier; the failure probability decays like exp(-gamma^2).
        delta_tilde: Allowed failure probability of the Chernoff sample-count event.
        target_ranges: Value range size of beta over each region.
        noise_range: Size of the noise support.
    """

    gamma: float
    delta_tilde: float
    target_ranges: tuple[float, ...] = ()
    noise_range: float = 0.0

    def __post_init__(self) -> None:
        """Validates the parameter ranges."""
        if self.gamma < 0:
            raise InvalidParamsError(f"gamma must be >= 0, got {self.gamma}")
        if not 0 < self.delta_tilde < 1:
            raise InvalidParamsError(f"delta_tilde must lie in (0, 1), got {self.delta_tilde}")
        if self.noise_range < 0 or any(r < 0 for r in self.target_ranges):
            raise InvalidParamsError("Range sizes must be nonnegative.")

    @property
    def max_range(self) -> float:
        """max_i (R_beta,i + R_eps)."""
        return max(self.target_ranges, default=0.0) + self.noise_range


@dataclass(frozen=True)
class RegionBoundCheck:
    """Per-region outcome of a repeated-training bound check."""

    index: int
    rho: float
    radius: float
    violations: int
    chernoff_n: int
    optimal_constant: float
    mean_constant: float
    constant_stderr: float

    def to_dict(self, repeats: int) -> dict[str, Any]:
        """Serializes with the violation fraction over ``repeats`` trials."""
        return {
            "index": self.index,
            "rho": self.rho,
            "radius": self.radius,
            "violations": self.violations,
            "violation_fraction": self.violations / repeats,
            "chernoff_n": self.chernoff_n,
            "optimal_constant": self.optimal_constant,
            "mean_constant": self.mean_constant,
            "constant_stderr": self.constant_stderr,
        }


@dataclass(frozen=True)
class BoundCheckReport:
    """Empirical check of the unbiasedness and concentration guarantees over repeated trainings."""

    gamma: float
    delta_tilde: float
    n: int
    m: int
    repeats: int
    per_region: tuple[RegionBoundCheck, ...]
    estimation_violations: int
    bound: float
    radius_probability: float
    estimation_probability: float
    mean_estimation_error: float
    chernoff_satisfied: bool

    @property
    def estimation_violation_fraction(self) -> float:
        """Fraction of trials whose estimation error exceeded the bound."""
        return self.estimation_violations / self.repeats

    def to_dict(self) -> dict[str, Any]:
        """Serializes to the JSON export layout."""
        return {
            "gamma": self.gamma,
            "delta_tilde": self.delta_tilde,
            "n": self.n,
            "m": self.m,
            "repeats": self.repeats,
            "per_region": [r.to_dict(self.repeats) for r in self.per_region],
            "estimation_violations": self.estimation_violations,
            "estimation_violation_fraction": self.estimation_violation_fraction,
            "bound": self.bound,
            "radius_probability": self.radius_probability,
            "estimation_probability": self.estimation_probability,
            "mean_estimation_error": self.mean_estimation_error,
            "chernoff_satisfied": self.chernoff_satisfied,
        }


@dataclass(frozen=True)
class ResultTable:
    """A named rectangular table of scalars in column order."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self) -> None:
        """Validates that every row has one value per column."""
        for row in self.rows:
            if len(row) != len(self.columns):
                raise DimensionMismatchError(f"Table '{self.name}' row {row!r} does not match columns {self.columns}")

    @classmethod
    def from_columns(cls, name: str, data: Mapping[str, Sequence[Scalar] | npt.NDArray[Any]]) -> ResultTable:
        """Builds a table from equal-length columns."""
        columns = tuple(data)
        values = [list(np.asarray(v).tolist()) for v in data.values()]
        return cls(name=name, columns=columns, rows=tuple(zip(*values, strict=True)))

    def column(self, name: str) -> list[Scalar]:
        """Values of one column."""
        k = self.columns.index(name)
        return [row[k] for row in self.rows]

    def to_records(self) -> list[dict[str, Scalar]]:
        """Rows as dictionaries."""
        return [dict(zip(self.columns, row, strict=True)) for row in self.rows]


@dataclass(frozen=True)
class ExperimentOutput:
    """Everything a command exports: tables, a JSON-friendly summary and the metadata block."""

    command: str
    tables: tuple[ResultTable, ...] = ()
    summary: Mapping[str, Any] = field(default_factory=dict)
    metadata: Mapping[str, Scalar] = field(default_factory=dict)

    def table(self, name: str) -> ResultTable:
        """Looks up a table by name."""
        for table in self.tables:
            if table.name == name:
                return table
        raise KeyError(name)
