"""Domain models for the data model y = beta(x) + noise.

Point sets are numpy arrays of shape (n, d). One-dimensional helpers also accept
shape (n,) and treat every entry as a point.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
import numpy.typing as npt

from moequant.core.errors import DimensionMismatchError, InvalidParamsError
from moequant.models.enums import NoiseKind
from moequant.models.numerics import FloatArray, RngStream

PointFunction = Callable[[FloatArray], FloatArray]
Sampler = Callable[[RngStream, int], FloatArray]


def as_points(x: npt.ArrayLike, dim: int) -> FloatArray:
    """Coerces input into an (n, dim) float array.

    A 1D array is read as n scalar points when ``dim == 1`` and as a single point
    when its length equals ``dim``.

    Raises:
        DimensionMismatchError: If the trailing axis does not match ``dim``.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(f"Expected points of dimension {dim}, got array of shape {arr.shape}")
    return arr


def _frozen(params: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType(dict(params))


@dataclass(frozen=True)
class TargetFunction:
    """The unknown regression function beta together with its gradient.

    Attributes:
        name: Registry name or a descriptive label.
        dim: Input dimension d.
        value: Maps (n, d) points to (n,) values.
        gradient: Maps (n, d) points to (n, d) gradients.
        fd_step: Finite-difference step when the gradient is numerical, else None.
        params: Parameters used to build the function, kept for output metadata.
    """

    name: str
    dim: int
    value: PointFunction = field(repr=False)
    gradient: PointFunction = field(repr=False)
    fd_step: float | None = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validates the dimension and freezes the parameter mapping."""
        if self.dim < 1:
            raise InvalidParamsError(f"Target dimension must be positive, got {self.dim}")
        object.__setattr__(self, "params", _frozen(self.params))

    def __call__(self, x: npt.ArrayLike) -> FloatArray:
        """Evaluates beta at the given points."""
        return np.asarray(self.value(as_points(x, self.dim)), dtype=np.float64)

    def grad(self, x: npt.ArrayLike) -> FloatArray:
        """Evaluates the gradient of beta, shape (n, d)."""
        points = as_points(x, self.dim)
        return np.asarray(self.gradient(points), dtype=np.float64).reshape(points.shape)

    def grad_norm_sq(self, x: npt.ArrayLike) -> FloatArray:
        """Squared Euclidean norm of the gradient at each point."""
        g = self.grad(x)
        return np.asarray(np.sum(g * g, axis=1), dtype=np.float64)

    def derivative(self, x: npt.ArrayLike) -> FloatArray:
        """The derivative beta' of a one-dimensional target."""
        if self.dim != 1:
            raise DimensionMismatchError(f"derivative() needs a 1D target, '{self.name}' has d={self.dim}")
        return self.grad(x)[:, 0]


@dataclass(frozen=True)
class InputDistribution:
    """The input density p_x on the unit cube together with a sampler.

    Multidimensional distributions are products of one-dimensional marginals,
    which lets region masses and tensor quadratures factor per axis.
    """

    name: str
    dim: int
    density: PointFunction = field(repr=False)
    sampler: Sampler = field(repr=False)
    marginals: tuple[InputDistribution, ...] = ()
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validates the dimension and marginal count."""
        if self.dim < 1:
            raise InvalidParamsError(f"Distribution dimension must be positive, got {self.dim}")
        if self.marginals and len(self.marginals) != self.dim:
            raise DimensionMismatchError(f"'{self.name}' has d={self.dim} but {len(self.marginals)} marginals")
        object.__setattr__(self, "params", _frozen(self.params))

    def pdf(self, x: npt.ArrayLike) -> FloatArray:
        """Evaluates p_x at the given points."""
        return np.asarray(self.density(as_points(x, self.dim)), dtype=np.float64)

    def sample(self, rng: RngStream, n: int) -> FloatArray:
        """Draws n i.i.d. points, shape (n, d)."""
        return as_points(self.sampler(rng, n), self.dim) if n else np.empty((0, self.dim))

    def marginal(self, axis: int) -> InputDistribution:
        """Returns the one-dimensional factor along an axis."""
        if self.dim == 1:
            return self
        return self.marginals[axis]


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean additive noise.

    Uniform noise is drawn from [low, high] with ``low == -high``; Gaussian noise
    has standard deviation ``std``.
    """

    kind: NoiseKind = NoiseKind.NONE
    low: float = 0.0
    high: float = 0.0
    std: float = 0.0

    def __post_init__(self) -> None:
        """Validates the parameters against the zero-mean requirement."""
        if self.kind == NoiseKind.UNIFORM_RANGE:
            if not self.high > self.low:
                raise InvalidParamsError(f"Uniform noise needs low < high, got [{self.low}, {self.high}]")
            if abs(self.low + self.high) > 1e-12:
                raise InvalidParamsError(f"Uniform noise must be zero mean, got [{self.low}, {self.high}]")
        elif self.kind == NoiseKind.GAUSSIAN and not self.std > 0:
            raise InvalidParamsError(f"Gaussian noise needs std > 0, got {self.std}")

    @property
    def variance(self) -> float:
        """The noise variance sigma_eps^2."""
        if self.kind == NoiseKind.UNIFORM_RANGE:
            return (self.high - self.low) ** 2 / 12.0
        if self.kind == NoiseKind.GAUSSIAN:
            return self.std**2
        return 0.0

    @property
    def bounded(self) -> bool:
        """Whether the noise takes values in a bounded range."""
        return self.kind != NoiseKind.GAUSSIAN

    @property
    def range_size(self) -> float:
        """R_eps = eps_max - eps_min (infinite for Gaussian noise)."""
        if self.kind == NoiseKind.UNIFORM_RANGE:
            return self.high - self.low
        if self.kind == NoiseKind.GAUSSIAN:
            return float("inf")
        return 0.0

    def sample(self, rng: RngStream, n: int) -> FloatArray:
        """Draws n noise values."""
        if self.kind == NoiseKind.UNIFORM_RANGE:
            return rng.uniform(self.low, self.high, n)
        if self.kind == NoiseKind.GAUSSIAN:
            return rng.normal(0.0, self.std, n)
        return np.zeros(n)
