"""Optimal expert constants and test-error evaluators for one-dimensional inputs.

Four evaluators of the same quantity, from ground truth to closed form:

* ``test_error_exact_1d``: per-region quadrature of ``(c_i - beta)^2 p``.
* ``test_error_sum_1d``: the small-interval sum ``(1/12) sum beta'(x_i)^2 p(x_i) Delta_i^3``.
* ``test_error_integral_1d``: the continuous form ``(1/(12 m^2)) int beta'^2 p / lambda^2``.
* ``optimal_error_1d``: the minimum over densities, ``(1/(12 m^2)) (int (p beta'^2)^(1/3))^3``.

The scalar-quantizer baseline mirrors the last three with beta' = 1.
"""

from __future__ import annotations

from logging import getLogger

import numpy as np

from moequant.core.density import DEFAULT_EPS, floored_root, optimal_integrand
from moequant.core.errors import (
    DegenerateDensityError,
    DimensionMismatchError,
    InvalidExpertCountError,
    InvalidParamsError,
    ZeroMassRegionError,
)
from moequant.core.numerics import DEFAULT_TABLE_SIZE, evaluate, integrate
from moequant.models.enums import ConstantsMode, ErrorMethod, Provenance
from moequant.models.functions import InputDistribution, TargetFunction
from moequant.models.numerics import DEFAULT_QUADRATURE, FloatArray, QuadratureSpec
from moequant.models.reports import ErrorReport, MoEModel
from moequant.models.segmentation import DensityFn, Segmentation1D

logger = getLogger(__name__)

MIN_REGION_MASS = 1e-14


def _check_m(m: int) -> None:
    if m < 1:
        raise InvalidExpertCountError(f"The number of experts must be >= 1, got {m}")


def region_masses_1d(
    seg: Segmentation1D, dist: InputDistribution, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> FloatArray:
    """Probability mass of each interval."""
    return np.array([integrate(dist.pdf, lo, hi, spec) for lo, hi in seg.intervals()])


def optimal_constants_1d(
    seg: Segmentation1D,
    target: TargetFunction,
    dist: InputDistribution,
    mode: ConstantsMode = ConstantsMode.EXACT,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> FloatArray:
    """Computes the best constant of every interval.

    Args:
        seg: The segmentation.
        target: One-dimensional target function.
        dist: One-dimensional input distribution.
        mode: ``exact`` takes the conditional mean of beta over the interval; ``midpoint``
            evaluates beta at the interval center.
        spec: Quadrature settings for the exact mode.

    Raises:
        ZeroMassRegionError: In exact mode, if an interval's mass is below 1e-14.
    """
    if mode == ConstantsMode.MIDPOINT:
        return target(seg.centers)
    if mode != ConstantsMode.EXACT:
        raise InvalidParamsError(f"Constants mode '{mode}' is not defined for one-dimensional segmentations.")

    constants = np.empty(seg.m)
    for i, (lo, hi) in enumerate(seg.intervals()):
        mass = integrate(dist.pdf, lo, hi, spec)
        if mass < MIN_REGION_MASS:
            raise ZeroMassRegionError(f"Region {i} = [{lo}, {hi}] has probability mass {mass:.3e}")
        constants[i] = integrate(lambda x: target(x) * dist.pdf(x), lo, hi, spec) / mass
    return constants


def best_model_1d(
    seg: Segmentation1D,
    target: TargetFunction,
    dist: InputDistribution,
    mode: ConstantsMode = ConstantsMode.EXACT,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MoEModel:
    """The best predictor for a fixed segmentation."""
    provenance = Provenance.OPTIMAL_MIDPOINT if mode == ConstantsMode.MIDPOINT else Provenance.OPTIMAL_EXACT
    return MoEModel(seg, optimal_constants_1d(seg, target, dist, mode, spec), provenance)


def test_error_exact_1d(
    model: MoEModel,
    target: TargetFunction,
    dist: InputDistribution,
    sigma2: float = 0.0,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> ErrorReport:
    """Ground-truth test error: the noise floor plus per-interval quadratures of ``(c_i - beta)^2 p``."""
    seg = model.segmentation
    if not isinstance(seg, Segmentation1D):
        raise DimensionMismatchError("test_error_exact_1d needs a one-dimensional segmentation.")
    per_region = tuple(
        integrate(lambda x, c=c: (c - target(x)) ** 2 * dist.pdf(x), lo, hi, spec)
        for c, (lo, hi) in zip(model.constants, seg.intervals(), strict=True)
    )
    return ErrorReport(sigma2 + float(np.sum(per_region)), sigma2, ErrorMethod.EXACT, seg.m, per_region)


def test_error_sum_1d(
    seg: Segmentation1D, target: TargetFunction, dist: InputDistribution, sigma2: float = 0.0
) -> ErrorReport:
    """High-rate sum approximation evaluated at the interval centers."""
    centers = seg.centers
    terms = target.derivative(centers) ** 2 * dist.pdf(centers) * seg.lengths**3 / 12.0
    return ErrorReport(sigma2 + float(np.sum(terms)), sigma2, ErrorMethod.SUM, seg.m, tuple(terms.tolist()))


def test_error_integral_1d(
    density: DensityFn,
    m: int,
    target: TargetFunction,
    dist: InputDistribution,
    sigma2: float = 0.0,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> ErrorReport:
    """Continuous approximation of the test error of the m-interval segmentation formed from ``density``.

    Raises:
        DegenerateDensityError: If the density is not strictly positive on its grid.
    """
    _check_m(m)
    if np.min(density.values) <= 0:
        raise DegenerateDensityError(f"Density '{density.name}' touches zero; floor it before use.")
    integral = integrate(lambda x: target.derivative(x) ** 2 * dist.pdf(x) / density(x) ** 2, 0.0, 1.0, spec)
    return ErrorReport(sigma2 + integral / (12.0 * m * m), sigma2, ErrorMethod.INTEGRAL, m)


def optimal_error_1d(
    m: int,
    target: TargetFunction,
    dist: InputDistribution,
    sigma2: float = 0.0,
    eps: float = DEFAULT_EPS,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> ErrorReport:
    """Minimal asymptotic test error over all segment densities, with the same flooring as the optimal density."""
    _check_m(m)
    z = integrate(floored_root(optimal_integrand(target, dist), eps, 1.0 / 3.0), 0.0, 1.0, spec)
    return ErrorReport(sigma2 + z**3 / (12.0 * m * m), sigma2, ErrorMethod.OPTIMAL, m)


def quantizer_error_optimal(
    m: int, dist: InputDistribution, eps: float = DEFAULT_EPS, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """Minimal mean squared error of an m-level scalar quantizer of x (no noise term)."""
    _check_m(m)
    z = integrate(floored_root(lambda x: dist.pdf(x), eps, 1.0 / 3.0), 0.0, 1.0, spec)
    return z**3 / (12.0 * m * m)


def quantizer_error_integral(
    density: DensityFn, m: int, dist: InputDistribution, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """Asymptotic quantizer error ``(1/(12 m^2)) int p / g^2`` for an interval density g."""
    _check_m(m)
    if np.min(density.values) <= 0:
        raise DegenerateDensityError(f"Density '{density.name}' touches zero; floor it before use.")
    return integrate(lambda x: dist.pdf(x) / density(x) ** 2, 0.0, 1.0, spec) / (12.0 * m * m)


def quantizer_error_exact(
    seg: Segmentation1D, dist: InputDistribution, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """Mean squared error of quantizing x to the center of its interval."""
    return float(
        sum(
            integrate(lambda x, c=c: (x - c) ** 2 * dist.pdf(x), lo, hi, spec)
            for c, (lo, hi) in zip(seg.centers, seg.intervals(), strict=True)
        )
    )


def empirical_test_error(model: MoEModel, inputs: FloatArray, outputs: FloatArray) -> tuple[float, float]:
    """Mean squared residual of a model on a test set, with its standard error."""
    residuals = (model.predict(inputs) - outputs) ** 2
    n = len(residuals)
    stderr = float(np.std(residuals, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return float(np.mean(residuals)), stderr


def density_grid_values(density: DensityFn, points: int = DEFAULT_TABLE_SIZE) -> tuple[FloatArray, FloatArray]:
    """Samples a density on a uniform grid for export."""
    xs = np.linspace(0.0, 1.0, points)
    return xs, evaluate(density, xs)
