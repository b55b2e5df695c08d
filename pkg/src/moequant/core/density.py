"""Segment densities and the compander construction of 1D segmentations.

The optimal expert segment density is proportional to ``(p * beta'^2)^(1/3)``; the
scalar-quantizer baseline uses ``p^(1/3)``. Both floor their integrand at ``eps``
before taking the root, so the compressor stays strictly increasing on flat
stretches of beta.
"""

from __future__ import annotations

from collections.abc import Callable
from logging import getLogger

import numpy as np

from moequant.core.errors import (
    DimensionMismatchError,
    InvalidExpertCountError,
    InvalidParamsError,
    NonMonotoneError,
)
from moequant.core.numerics import DEFAULT_TABLE_SIZE, cumulative_table, evaluate, integrate, invert_monotone
from moequant.models.functions import InputDistribution, TargetFunction
from moequant.models.numerics import FloatArray
from moequant.models.segmentation import DensityFn, Segmentation1D

logger = getLogger(__name__)

ScalarFn = Callable[[FloatArray], FloatArray]

DEFAULT_EPS = 1e-16


def _require_1d(*objects: TargetFunction | InputDistribution) -> None:
    for obj in objects:
        if obj.dim != 1:
            raise DimensionMismatchError(f"'{obj.name}' has d={obj.dim}; one-dimensional input required.")


def floored_root(integrand: ScalarFn, eps: float, power: float) -> ScalarFn:
    """Returns ``x -> max(integrand(x), eps) ** power``."""

    def rooted(x: FloatArray) -> FloatArray:
        return np.maximum(integrand(x), eps) ** power

    return rooted


def optimal_integrand(target: TargetFunction, dist: InputDistribution) -> ScalarFn:
    """The unfloored product ``p(x) * beta'(x)^2`` on scalar positions."""
    _require_1d(target, dist)
    return lambda x: dist.pdf(x) * target.derivative(x) ** 2


def density_from_function(
    unnormalized: ScalarFn,
    name: str = "custom",
    grid_size: int = DEFAULT_TABLE_SIZE,
    eps: float | None = None,
    floor_applied: bool = False,
) -> DensityFn:
    """Normalizes a positive function on [0, 1] into a segment density with its compressor table.

    Raises:
        DegenerateDensityError: If the function integrates to zero.
        NegativeDensityError: If the function is negative on the table grid.
    """
    normalizer = integrate(unnormalized, 0.0, 1.0)
    table = cumulative_table(unnormalized, grid_size, normalize=True)
    return DensityFn(
        unnormalized=unnormalized,
        normalizer=normalizer,
        cumulative=table,
        eps=eps,
        floor_applied=floor_applied,
        name=name,
    )


def _floored_density(raw: ScalarFn, eps: float, name: str, grid_size: int) -> DensityFn:
    grid = np.linspace(0.0, 1.0, grid_size)
    floored_fraction = float(np.mean(evaluate(raw, grid) < eps))
    if floored_fraction > 0.01:
        logger.warning(f"eps floor {eps:g} engaged on {floored_fraction:.1%} of the grid for '{name}'.")
    elif floored_fraction > 0:
        logger.debug(f"eps floor {eps:g} engaged on {floored_fraction:.3%} of the grid for '{name}'.")
    return density_from_function(
        floored_root(raw, eps, 1.0 / 3.0),
        name=name,
        grid_size=grid_size,
        eps=eps,
        floor_applied=floored_fraction > 0,
    )


def optimal_density_1d(
    target: TargetFunction, dist: InputDistribution, eps: float = DEFAULT_EPS, grid_size: int = DEFAULT_TABLE_SIZE
) -> DensityFn:
    """Builds the expert segment density that minimizes the asymptotic test error.

    Args:
        target: One-dimensional target function.
        dist: One-dimensional input distribution.
        eps: Floor for ``p * beta'^2`` before the cube root.
        grid_size: Number of nodes of the compressor table.

    Returns:
        lambda(x) proportional to ``max(p(x) beta'(x)^2, eps)^(1/3)``, normalized on [0, 1].
    """
    _require_1d(target, dist)
    if not eps > 0:
        raise InvalidParamsError(f"eps must be positive, got {eps}")
    return _floored_density(optimal_integrand(target, dist), eps, f"optimal[{target.name}, {dist.name}]", grid_size)


def quantizer_density(
    dist: InputDistribution, eps: float = DEFAULT_EPS, grid_size: int = DEFAULT_TABLE_SIZE
) -> DensityFn:
    """Builds the interval density of the optimal scalar quantizer, proportional to ``max(p, eps)^(1/3)``."""
    _require_1d(dist)
    return _floored_density(lambda x: dist.pdf(x), eps, f"quantizer[{dist.name}]", grid_size)


def uniform_density(grid_size: int = DEFAULT_TABLE_SIZE) -> DensityFn:
    """The constant density lambda = 1."""
    return density_from_function(lambda x: np.ones_like(x), name="uniform", grid_size=grid_size)


def segmentation_from_density(density: DensityFn, m: int) -> Segmentation1D:
    """Forms m intervals of equal density mass with the compander construction.

    The interior breakpoints invert the compressor at ``i / m``; the outer breakpoints
    are set to 0 and 1 exactly.

    Raises:
        InvalidExpertCountError: If m < 1.
        NonMonotoneError: If the inverted breakpoints do not increase, which means the
            compressor table is too coarse for this m.
    """
    if m < 1:
        raise InvalidExpertCountError(f"The number of experts must be >= 1, got {m}")
    levels = np.arange(1, m, dtype=np.float64) / m * density.cumulative.total
    interior = invert_monotone(density.cumulative, levels)
    breakpoints = np.concatenate([[0.0], interior, [1.0]])
    if np.any(np.diff(breakpoints) <= 0):
        raise NonMonotoneError(
            f"Compander breakpoints for m={m} are not strictly increasing; increase the density grid size "
            f"(currently {len(density.grid)})."
        )
    return Segmentation1D(breakpoints)


def uniform_segmentation(m: int) -> Segmentation1D:
    """Equal-length intervals with breakpoints i / m.

    Raises:
        InvalidExpertCountError: If m < 1.
    """
    if m < 1:
        raise InvalidExpertCountError(f"The number of experts must be >= 1, got {m}")
    return Segmentation1D(np.arange(m + 1, dtype=np.float64) / m)


def segment_masses(density: DensityFn, segmentation: Segmentation1D) -> FloatArray:
    """Density mass of every interval of a segmentation."""
    return np.array([integrate(density, lo, hi) for lo, hi in segmentation.intervals()])
