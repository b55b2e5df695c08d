"""Multidimensional error bounds over box segmentations of [0, 1]^d.

Regions are axis-aligned boxes, which makes volume, center and the normalized second
moment closed-form. Integrals over boxes use tensor-product Simpson rules up to six
dimensions and Monte Carlo beyond.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from logging import getLogger

import numpy as np

from moequant.core import approx
from moequant.core.density import DEFAULT_EPS, segmentation_from_density, uniform_segmentation
from moequant.core.errors import (
    DegenerateDensityError,
    DimensionMismatchError,
    InvalidCountsError,
    InvalidExpertCountError,
    InvalidParamsError,
    ZeroMassRegionError,
)
from moequant.core.numerics import integrate, simpson_weights
from moequant.models.enums import ConstantsMode, ErrorMethod, Provenance
from moequant.models.functions import InputDistribution, NoiseModel, PointFunction, TargetFunction
from moequant.models.numerics import FloatArray, RngStream
from moequant.models.reports import ErrorReport, McEstimate, MoEModel
from moequant.models.segmentation import (
    DensityFn,
    DensityMD,
    GridSegmentationMD,
    InertiaProfile,
    RegionGeometry,
    RegionMD,
)

logger = getLogger(__name__)

MAX_QUADRATURE_DIM = 6
REGION_PANELS = {2: 16, 3: 8, 4: 2, 5: 2, 6: 2}
CUBE_PANELS = {2: 256, 3: 64}
GEOMETRY_SAMPLES = 100_000
DEFAULT_MC_SAMPLES = 100_000
HEXAGON_MOMENT = 5.0 / (36.0 * math.sqrt(3.0))


def default_m_opt(d: int) -> float:
    """Normalized moment of the best known tessellating cell: interval, hexagon, cube fallback for d >= 3."""
    if d < 1:
        raise InvalidParamsError(f"Dimension must be >= 1, got {d}")
    return HEXAGON_MOMENT if d == 2 else 1.0 / 12.0


def _check_dims(d: int, *objects: TargetFunction | InputDistribution | DensityMD) -> None:
    for obj in objects:
        if obj.dim != d:
            raise DimensionMismatchError(f"Expected d={d}, got an object with d={obj.dim}")


def region_geometry(region: RegionMD, rng: RngStream | None = None, samples: int = GEOMETRY_SAMPLES) -> RegionGeometry:
    """Volume, center and normalized moments of inertia of a box.

    The second moment is closed-form. The first and third normalized moments
    ``int ||x - c||^k / (d V^(1 + k/d))`` are Monte Carlo estimates over ``samples``
    uniform points.
    """
    rng = rng or RngStream(seed=0)
    d, volume, center = region.dim, region.volume, region.center
    points = np.asarray(region.lo) + region.sides * rng.uniform(size=(samples, d))
    radius = np.linalg.norm(points - center, axis=1)
    moments = {k: float(np.mean(radius**k)) / (d * volume ** (k / d)) for k in (1, 3)}
    moments[2] = region.normalized_moment
    return RegionGeometry(
        volume=volume,
        center=tuple(center.tolist()),
        second_moment=region.second_moment,
        normalized_moment=region.normalized_moment,
        moments=dict(sorted(moments.items())),
    )


def hexagon_normalized_moment(rng: RngStream | None = None, samples: int = 1_000_000) -> McEstimate:
    """Monte Carlo estimate of the normalized second moment of a regular hexagon.

    Points are drawn in the bounding box of the unit-circumradius hexagon and kept when
    inside it; the estimate is ``mean(||x||^2) / (2 V)`` with the exact area V.
    """
    rng = rng or RngStream(seed=0)
    half_height = math.sqrt(3.0) / 2.0
    x = rng.uniform(-1.0, 1.0, samples)
    y = rng.uniform(-half_height, half_height, samples)
    inside = math.sqrt(3.0) * np.abs(x) + np.abs(y) <= math.sqrt(3.0)
    r2 = x[inside] ** 2 + y[inside] ** 2
    area = 3.0 * math.sqrt(3.0) / 2.0
    scale = 1.0 / (2.0 * area)
    return McEstimate(
        mean=float(np.mean(r2)) * scale,
        stderr=float(np.std(r2, ddof=1) / np.sqrt(len(r2))) * scale,
        n=int(len(r2)),
    )


def grid_segmentation(
    d: int, counts: Sequence[int], per_axis_densities: Sequence[DensityFn] | None = None
) -> GridSegmentationMD:
    """Builds a box grid from per-axis counts, uniform or compander-formed per axis.

    Raises:
        InvalidCountsError: If the counts do not give one positive integer per axis.
    """
    if len(counts) != d or any(c < 1 for c in counts):
        raise InvalidCountsError(f"Need {d} per-axis counts >= 1, got {tuple(counts)}")
    if per_axis_densities is not None and len(per_axis_densities) != d:
        raise InvalidCountsError(f"Need {d} per-axis densities, got {len(per_axis_densities)}")
    try:
        if per_axis_densities is None:
            axes = tuple(uniform_segmentation(c) for c in counts)
        else:
            axes = tuple(segmentation_from_density(lam, c) for lam, c in zip(per_axis_densities, counts, strict=True))
    except InvalidExpertCountError as e:
        raise InvalidCountsError(str(e)) from e
    return GridSegmentationMD(axes)


def unit_rule(dim: int, panels: int) -> tuple[FloatArray, FloatArray]:
    """Tensor-product Simpson nodes (N, dim) and weights (N,) on the unit cube."""
    nodes_1d, weights_1d = simpson_weights(0.0, 1.0, panels)
    mesh = np.meshgrid(*([nodes_1d] * dim), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in mesh], axis=1)
    weights = np.ones(1)
    for _ in range(dim):
        weights = np.outer(weights, weights_1d).reshape(-1)
    return nodes, weights


def region_rule(seg: GridSegmentationMD, panels: int | None = None) -> tuple[FloatArray, FloatArray]:
    """Simpson nodes (m, N, d) and weights (m, N) for every box of a grid."""
    d = seg.dim
    if d > MAX_QUADRATURE_DIM:
        raise InvalidParamsError(f"Tensor quadrature supports d <= {MAX_QUADRATURE_DIM}, got d={d}")
    nodes, weights = unit_rule(d, panels or REGION_PANELS.get(d, 16))
    lo, hi = seg.box_bounds()
    sides = hi - lo
    points = lo[:, None, :] + sides[:, None, :] * nodes[None, :, :]
    return points, np.prod(sides, axis=1)[:, None] * weights[None, :]


def _evaluate_regions(fn: PointFunction, points: FloatArray) -> FloatArray:
    m, n, d = points.shape
    return np.asarray(fn(points.reshape(-1, d)), dtype=np.float64).reshape(m, n)


def optimal_constants_md(
    seg: GridSegmentationMD,
    target: TargetFunction,
    dist: InputDistribution,
    mode: ConstantsMode = ConstantsMode.EXACT,
    rng: RngStream | None = None,
    n_mc: int = DEFAULT_MC_SAMPLES,
) -> FloatArray:
    """Best constant of every box.

    Exact mode uses tensor quadrature up to d=6 and a Monte Carlo ratio estimate
    beyond; center mode evaluates beta at the box centers.

    Raises:
        ZeroMassRegionError: In exact mode, if a box carries no probability mass.
    """
    _check_dims(seg.dim, target, dist)
    if mode in (ConstantsMode.CENTER, ConstantsMode.MIDPOINT):
        return target(seg.centers)
    if seg.dim == 1:
        return approx.optimal_constants_1d(seg.axes[0], target, dist)
    if seg.dim <= MAX_QUADRATURE_DIM:
        points, weights = region_rule(seg)
        pdf = _evaluate_regions(dist.pdf, points)
        masses = np.sum(weights * pdf, axis=1)
        empty = np.flatnonzero(masses < approx.MIN_REGION_MASS)
        if empty.size:
            raise ZeroMassRegionError(f"Regions {empty.tolist()} have (numerically) zero probability mass.")
        return np.sum(weights * pdf * _evaluate_regions(target, points), axis=1) / masses

    rng = rng or RngStream(seed=0)
    x = dist.sample(rng, n_mc)
    idx = seg.route(x)
    counts = np.bincount(idx, minlength=seg.m)
    if np.any(counts == 0):
        raise ZeroMassRegionError(f"{int(np.sum(counts == 0))} regions received no Monte Carlo samples.")
    logger.debug(f"Monte Carlo constants for d={seg.dim} from {n_mc} samples, min count {counts.min()}")
    return np.bincount(idx, weights=target(x), minlength=seg.m) / counts


def best_model_md(
    seg: GridSegmentationMD,
    target: TargetFunction,
    dist: InputDistribution,
    mode: ConstantsMode = ConstantsMode.EXACT,
) -> MoEModel:
    """The best predictor for a fixed box grid."""
    provenance = Provenance.OPTIMAL_EXACT if mode == ConstantsMode.EXACT else Provenance.OPTIMAL_MIDPOINT
    return MoEModel(seg, optimal_constants_md(seg, target, dist, mode), provenance)


def test_error_exact_md(
    model: MoEModel, target: TargetFunction, dist: InputDistribution, sigma2: float = 0.0
) -> ErrorReport:
    """Deterministic test error of a box-grid model by per-box tensor quadrature."""
    seg = model.segmentation
    if not isinstance(seg, GridSegmentationMD):
        raise DimensionMismatchError("test_error_exact_md needs a grid segmentation.")
    _check_dims(seg.dim, target, dist)
    if seg.dim == 1:
        model_1d = MoEModel(seg.axes[0], model.constants, model.provenance)
        return approx.test_error_exact_1d(model_1d, target, dist, sigma2)
    points, weights = region_rule(seg)
    residual = (model.constants[:, None] - _evaluate_regions(target, points)) ** 2
    per_region = np.sum(weights * residual * _evaluate_regions(dist.pdf, points), axis=1)
    return ErrorReport(
        sigma2 + float(np.sum(per_region)), sigma2, ErrorMethod.EXACT, seg.m, tuple(per_region.tolist())
    )


def test_error_md_mc(
    model: MoEModel,
    target: TargetFunction,
    dist: InputDistribution,
    noise: NoiseModel,
    n_mc: int,
    rng: RngStream,
) -> McEstimate:
    """Monte Carlo test error on ``n_mc`` fresh noisy draws, with its standard error."""
    if n_mc < 1:
        raise InvalidParamsError(f"n_mc must be >= 1, got {n_mc}")
    _check_dims(model.dim, target, dist)
    x = dist.sample(rng, n_mc)
    y = target(x) + noise.sample(rng, n_mc)
    residual = (model.predict(x) - y) ** 2
    stderr = float(np.std(residual, ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else float("inf")
    return McEstimate(mean=float(np.mean(residual)), stderr=stderr, n=n_mc)


def error_bound_sum_md(
    seg: GridSegmentationMD, target: TargetFunction, dist: InputDistribution, sigma2: float = 0.0
) -> ErrorReport:
    """Upper bound ``sigma^2 + d sum ||grad beta(x_i)||^2 p(x_i) M(A_i) V(A_i)^(1 + 2/d)`` at the box centers."""
    _check_dims(seg.dim, target, dist)
    d = seg.dim
    lo, hi = seg.box_bounds()
    sides = hi - lo
    volume = np.prod(sides, axis=1)
    moment = volume * np.sum(sides**2, axis=1) / 12.0 / (d * volume ** (1.0 + 2.0 / d))
    centers = 0.5 * (lo + hi)
    terms = d * target.grad_norm_sq(centers) * dist.pdf(centers) * moment * volume ** (1.0 + 2.0 / d)
    return ErrorReport(sigma2 + float(np.sum(terms)), sigma2, ErrorMethod.SUM, seg.m, tuple(terms.tolist()))


def cube_integral(
    fn: PointFunction,
    d: int,
    rng: RngStream | None = None,
    n_mc: int = DEFAULT_MC_SAMPLES,
    importance: InputDistribution | None = None,
) -> McEstimate:
    """Integrates a point function over [0, 1]^d.

    Uses adaptive Simpson for d=1, a tensor Simpson grid for d=2 and d=3, and Monte
    Carlo beyond. With ``importance`` set, Monte Carlo samples come from that
    distribution and the integrand is divided by its pdf. Deterministic rules report
    a zero standard error.
    """
    if d == 1:
        return McEstimate(integrate(lambda x: fn(x.reshape(-1, 1)), 0.0, 1.0), 0.0, 0)
    if d in CUBE_PANELS:
        nodes, weights = unit_rule(d, CUBE_PANELS[d])
        return McEstimate(float(np.dot(weights, fn(nodes))), 0.0, 0)

    rng = rng or RngStream(seed=0)
    if importance is not None:
        x = importance.sample(rng, n_mc)
        values = fn(x) / importance.pdf(x)
    else:
        x = rng.uniform(size=(n_mc, d))
        values = fn(x)
    return McEstimate(float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(n_mc)), n_mc)


def density_md_from_function(
    unnormalized: PointFunction,
    d: int,
    name: str = "custom",
    eps: float | None = None,
    rng: RngStream | None = None,
) -> DensityMD:
    """Normalizes a positive function on [0, 1]^d into a segment density."""
    mass = cube_integral(unnormalized, d, rng)
    return DensityMD(dim=d, unnormalized=unnormalized, normalizer=mass.mean, eps=eps, name=name)


def as_density_md(density: DensityFn | DensityMD) -> DensityMD:
    """Wraps a one-dimensional density so multidimensional formulas accept it."""
    if isinstance(density, DensityMD):
        return density
    return DensityMD(
        dim=1,
        unnormalized=lambda points: density.unnormalized(points[:, 0]),
        normalizer=density.normalizer,
        eps=density.eps,
        floor_applied=density.floor_applied,
        name=density.name,
    )


def error_bound_integral_md(
    density: DensityFn | DensityMD,
    profile: InertiaProfile,
    m: int,
    target: TargetFunction,
    dist: InputDistribution,
    sigma2: float = 0.0,
    rng: RngStream | None = None,
    n_mc: int = DEFAULT_MC_SAMPLES,
) -> ErrorReport:
    """Continuous upper bound ``sigma^2 + (d / m^(2/d)) int ||grad beta||^2 p mu / lambda^(2/d)``.

    Raises:
        DegenerateDensityError: If lambda is not strictly positive where it is evaluated.
    """
    if m < 1:
        raise InvalidExpertCountError(f"The number of experts must be >= 1, got {m}")
    lam = as_density_md(density)
    d = lam.dim
    _check_dims(d, target, dist)

    def integrand(points: FloatArray) -> FloatArray:
        values = lam(points)
        if np.any(values <= 0):
            raise DegenerateDensityError(f"Density '{lam.name}' is not strictly positive; floor it before use.")
        return target.grad_norm_sq(points) * dist.pdf(points) * profile(points) / values ** (2.0 / d)

    if d > 3:
        estimate = cube_integral(integrand, d, rng, n_mc, importance=dist)
        logger.info(f"Monte Carlo bound integral for d={d}: {estimate.mean:.6e} +/- {estimate.stderr:.1e}")
    else:
        estimate = cube_integral(integrand, d)
    return ErrorReport(sigma2 + d / m ** (2.0 / d) * estimate.mean, sigma2, ErrorMethod.INTEGRAL, m)


def ubm_integrand(target: TargetFunction, dist: InputDistribution, eps: float = DEFAULT_EPS) -> PointFunction:
    """``max(p ||grad beta||^2, eps)^(d / (d + 2))``."""
    d = target.dim
    _check_dims(d, dist)
    exponent = d / (d + 2.0)
    return lambda points: np.maximum(dist.pdf(points) * target.grad_norm_sq(points), eps) ** exponent


def ubm_density_md(
    target: TargetFunction, dist: InputDistribution, eps: float = DEFAULT_EPS, rng: RngStream | None = None
) -> DensityMD:
    """The segment density minimizing the continuous bound, proportional to ``(p ||grad beta||^2)^(d/(d+2))``."""
    name = f"ubm[{target.name}, {dist.name}]"
    return density_md_from_function(ubm_integrand(target, dist, eps), target.dim, name=name, eps=eps, rng=rng)


def min_bound_md(
    m: int,
    d: int,
    m_opt: float,
    target: TargetFunction,
    dist: InputDistribution,
    sigma2: float = 0.0,
    eps: float = DEFAULT_EPS,
    rng: RngStream | None = None,
) -> ErrorReport:
    """Minimal continuous upper bound ``sigma^2 + (d M_opt / m^(2/d)) (int (p ||grad beta||^2)^(d/(d+2)))^(1+2/d)``."""
    if m < 1:
        raise InvalidExpertCountError(f"The number of experts must be >= 1, got {m}")
    if not m_opt > 0:
        raise InvalidParamsError(f"M_opt must be positive, got {m_opt}")
    _check_dims(d, target, dist)
    inner = cube_integral(ubm_integrand(target, dist, eps), d, rng).mean
    excess = d * m_opt / m ** (2.0 / d) * inner ** (1.0 + 2.0 / d)
    return ErrorReport(sigma2 + excess, sigma2, ErrorMethod.OPTIMAL, m)
