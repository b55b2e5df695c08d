"""Domain models for input-space partitions and segment densities."""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from functools import cached_property
from typing import Protocol

import numpy as np
import numpy.typing as npt

from moequant.core.errors import (
    DegenerateDensityError,
    DegenerateRegionError,
    DimensionMismatchError,
    InvalidParamsError,
)
from moequant.models.functions import PointFunction, as_points
from moequant.models.numerics import FloatArray, IntArray, MonotoneTable


class Partition(Protocol):
    """Anything that routes points of [0, 1]^d to one of m regions."""

    @property
    def dim(self) -> int:
        """Input dimension."""
        ...

    @property
    def m(self) -> int:
        """Number of regions."""
        ...

    def route(self, points: npt.ArrayLike) -> IntArray:
        """0-based region index of each point."""
        ...


@dataclass(frozen=True, eq=False)
class Segmentation1D:
    """Breakpoints 0 = a_0 < a_1 < ... < a_m = 1 of a one-dimensional segmentation.

    Region i (0-based) is [a_i, a_{i+1}); the last region is closed on the right.
    """

    breakpoints: FloatArray

    def __post_init__(self) -> None:
        """Validates the covering invariant."""
        bp = np.asarray(self.breakpoints, dtype=np.float64).reshape(-1)
        if len(bp) < 2:
            raise InvalidParamsError("A segmentation needs at least the two breakpoints 0 and 1.")
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise InvalidParamsError(f"Breakpoints must start at 0 and end at 1, got {bp[0]} and {bp[-1]}")
        if np.any(np.diff(bp) <= 0):
            raise InvalidParamsError("Breakpoints must be strictly increasing.")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    def __eq__(self, other: object) -> bool:
        """Segmentations are equal when their breakpoints are identical."""
        if not isinstance(other, Segmentation1D):
            return NotImplemented
        return bool(np.array_equal(self.breakpoints, other.breakpoints))

    def __hash__(self) -> int:
        """Hashes the breakpoint bytes."""
        return hash(self.breakpoints.tobytes())

    @property
    def dim(self) -> int:
        """Always 1."""
        return 1

    @property
    def m(self) -> int:
        """Number of intervals."""
        return len(self.breakpoints) - 1

    @property
    def lengths(self) -> FloatArray:
        """Interval lengths Delta_i."""
        return np.diff(self.breakpoints)

    @property
    def centers(self) -> FloatArray:
        """Interval midpoints x_i."""
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    def bounds(self, i: int) -> tuple[float, float]:
        """Endpoints of interval i."""
        return float(self.breakpoints[i]), float(self.breakpoints[i + 1])

    def intervals(self) -> Iterator[tuple[float, float]]:
        """Iterates over (lo, hi) pairs in region order."""
        for i in range(self.m):
            yield self.bounds(i)

    def locate(self, x: npt.ArrayLike) -> IntArray:
        """Interval index of scalar positions; a breakpoint belongs to the interval on its right."""
        idx = np.searchsorted(self.breakpoints, np.asarray(x, dtype=np.float64), side="right") - 1
        return np.clip(idx, 0, self.m - 1).astype(np.int64)

    def route(self, points: npt.ArrayLike) -> IntArray:
        """Region index of (n, 1) or (n,) points."""
        return self.locate(as_points(points, 1)[:, 0])


@dataclass(frozen=True)
class RegionGeometry:
    """Volume, center and normalized moments of inertia of a region."""

    volume: float
    center: tuple[float, ...]
    second_moment: float
    normalized_moment: float
    moments: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RegionMD:
    """An axis-aligned box [lo_1, hi_1] x ... x [lo_d, hi_d] inside the unit cube."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validates that every side is positive and inside [0, 1]."""
        if len(self.lo) != len(self.hi) or not self.lo:
            raise DimensionMismatchError("Box corners must have the same positive dimension.")
        for lo, hi in zip(self.lo, self.hi, strict=True):
            if not hi > lo:
                raise DegenerateRegionError(f"Box side [{lo}, {hi}] has nonpositive length.")
            if lo < 0.0 or hi > 1.0:
                raise DegenerateRegionError(f"Box side [{lo}, {hi}] leaves the unit cube.")

    @property
    def dim(self) -> int:
        """Dimension d."""
        return len(self.lo)

    @property
    def sides(self) -> FloatArray:
        """Side lengths per axis."""
        return np.asarray(self.hi, dtype=np.float64) - np.asarray(self.lo, dtype=np.float64)

    @property
    def volume(self) -> float:
        """V(A) = product of the side lengths."""
        return float(np.prod(self.sides))

    @property
    def center(self) -> FloatArray:
        """Box midpoint."""
        return 0.5 * (np.asarray(self.lo, dtype=np.float64) + np.asarray(self.hi, dtype=np.float64))

    @property
    def second_moment(self) -> float:
        """Integral of ||x - center||^2 over the box."""
        return self.volume * float(np.sum(self.sides**2)) / 12.0

    @property
    def normalized_moment(self) -> float:
        """M(A) = second moment / (d * V^(1 + 2/d)); invariant to scaling."""
        return self.second_moment / (self.dim * self.volume ** (1.0 + 2.0 / self.dim))

    def scaled(self, factor: float) -> RegionMD:
        """The box scaled about the origin; may leave the unit cube for factor > 1."""
        return _UnboundedBox(tuple(factor * v for v in self.lo), tuple(factor * v for v in self.hi))


@dataclass(frozen=True)
class _UnboundedBox(RegionMD):
    """A box that is allowed to extend beyond the unit cube (geometry only)."""

    def __post_init__(self) -> None:
        for lo, hi in zip(self.lo, self.hi, strict=True):
            if not hi > lo:
                raise DegenerateRegionError(f"Box side [{lo}, {hi}] has nonpositive length.")


@dataclass(frozen=True, eq=False)
class GridSegmentationMD:
    """Cross product of per-axis 1D segmentations; regions are ordered C-style (last axis fastest)."""

    axes: tuple[Segmentation1D, ...]

    def __post_init__(self) -> None:
        """Validates that at least one axis is present."""
        if not self.axes:
            raise InvalidParamsError("A grid segmentation needs at least one axis.")

    @property
    def dim(self) -> int:
        """Dimension d."""
        return len(self.axes)

    @property
    def counts(self) -> tuple[int, ...]:
        """Number of intervals per axis."""
        return tuple(axis.m for axis in self.axes)

    @property
    def m(self) -> int:
        """Total number of boxes."""
        return int(np.prod(self.counts))

    def region(self, i: int) -> RegionMD:
        """The box with flat index i."""
        multi = np.unravel_index(i, self.counts)
        bounds = [axis.bounds(int(k)) for axis, k in zip(self.axes, multi, strict=True)]
        return RegionMD(lo=tuple(b[0] for b in bounds), hi=tuple(b[1] for b in bounds))

    @cached_property
    def regions(self) -> tuple[RegionMD, ...]:
        """All boxes in flat-index order."""
        return tuple(
            RegionMD(lo=tuple(b[0] for b in combo), hi=tuple(b[1] for b in combo))
            for combo in itertools.product(*(tuple(axis.intervals()) for axis in self.axes))
        )

    def box_bounds(self) -> tuple[FloatArray, FloatArray]:
        """Lower and upper corners of every box, each of shape (m, d), in flat-index order."""
        lows = np.meshgrid(*(axis.breakpoints[:-1] for axis in self.axes), indexing="ij")
        highs = np.meshgrid(*(axis.breakpoints[1:] for axis in self.axes), indexing="ij")
        return (
            np.stack([g.reshape(-1) for g in lows], axis=1),
            np.stack([g.reshape(-1) for g in highs], axis=1),
        )

    @property
    def centers(self) -> FloatArray:
        """Box midpoints, shape (m, d)."""
        lo, hi = self.box_bounds()
        return 0.5 * (lo + hi)

    def route(self, points: npt.ArrayLike) -> IntArray:
        """Flat box index of each point under the per-axis half-open convention."""
        pts = as_points(points, self.dim)
        per_axis = tuple(axis.locate(pts[:, k]) for k, axis in enumerate(self.axes))
        return np.ravel_multi_index(per_axis, self.counts).astype(np.int64)


@dataclass(frozen=True, eq=False)
class DensityFn:
    """A normalized one-dimensional segment density lambda on [0, 1].

    Attributes:
        unnormalized: Vectorized (n,) -> (n,) evaluator proportional to lambda.
        normalizer: Integral of ``unnormalized`` over [0, 1].
        cumulative: Normalized compressor u(x) tabulated on the density grid.
        eps: Floor applied before the root, or None when no flooring was requested.
        floor_applied: Whether the floor was active somewhere on the grid.
        name: Descriptive label.
    """

    unnormalized: Callable[[FloatArray], FloatArray] = field(repr=False)
    normalizer: float
    cumulative: MonotoneTable = field(repr=False)
    eps: float | None = None
    floor_applied: bool = False
    name: str = "density"

    def __post_init__(self) -> None:
        """Validates the normalizer."""
        if not self.normalizer > 0:
            raise DegenerateDensityError(f"Density '{self.name}' has nonpositive mass {self.normalizer}")

    def __call__(self, x: npt.ArrayLike) -> FloatArray:
        """Evaluates lambda at scalar positions."""
        arr = np.asarray(x, dtype=np.float64)
        return np.asarray(self.unnormalized(arr), dtype=np.float64) / self.normalizer

    @property
    def grid(self) -> FloatArray:
        """Grid nodes on which the compressor is tabulated."""
        return self.cumulative.xs

    @property
    def values(self) -> FloatArray:
        """Lambda evaluated on the grid."""
        return self(self.grid)

    def compress(self, x: npt.ArrayLike) -> FloatArray:
        """The compressor u(x) = integral of lambda from 0 to x."""
        return self.cumulative.evaluate(x)


@dataclass(frozen=True, eq=False)
class DensityMD:
    """A normalized segment density on [0, 1]^d held as an evaluator plus its mass."""

    dim: int
    unnormalized: PointFunction = field(repr=False)
    normalizer: float
    eps: float | None = None
    floor_applied: bool = False
    name: str = "density"

    def __post_init__(self) -> None:
        """Validates the normalizer."""
        if not self.normalizer > 0:
            raise DegenerateDensityError(f"Density '{self.name}' has nonpositive mass {self.normalizer}")

    def __call__(self, points: npt.ArrayLike) -> FloatArray:
        """Evaluates lambda at (n, d) points."""
        pts = as_points(points, self.dim)
        return np.asarray(self.unnormalized(pts), dtype=np.float64) / self.normalizer

    def on_grid(self, nodes_per_axis: int) -> tuple[FloatArray, FloatArray]:
        """Tabulates lambda on a uniform tensor grid.

        Returns:
            The 1D node array shared by every axis and the values with shape
            ``(nodes_per_axis,) * dim``.
        """
        nodes = np.linspace(0.0, 1.0, nodes_per_axis)
        mesh = np.stack(np.meshgrid(*([nodes] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        return nodes, self(mesh).reshape((nodes_per_axis,) * self.dim)


@dataclass(frozen=True)
class InertiaProfile:
    """Normalized moment of inertia profile mu(x): a positive constant or a positive function."""

    constant: float | None = None
    function: PointFunction | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        """Validates that exactly one representation is set."""
        if (self.constant is None) == (self.function is None):
            raise InvalidParamsError("InertiaProfile needs exactly one of 'constant' or 'function'.")
        if self.constant is not None and not self.constant > 0:
            raise InvalidParamsError(f"Inertia profile must be positive, got {self.constant}")

    def __call__(self, points: FloatArray) -> FloatArray:
        """Evaluates mu at (n, d) points."""
        if self.constant is not None:
            return np.full(points.shape[0], self.constant)
        assert self.function is not None
        values = np.asarray(self.function(points), dtype=np.float64)
        if np.any(values <= 0):
            raise InvalidParamsError("Inertia profile must stay positive.")
        return values
