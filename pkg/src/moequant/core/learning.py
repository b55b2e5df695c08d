"""Learning expert constants from data and checking the estimation guarantees.

Constants are fitted by least squares, which for a zero-compute expert is the mean
of the outputs routed to its region. Repeated-training experiments draw every
repeat from its own RNG stream, so results do not depend on the number of threads.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from logging import getLogger
from typing import TypeVar

import numpy as np
import numpy.typing as npt

from moequant.core import approx, multidim
from moequant.core.builder import sample_dataset
from moequant.core.errors import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidParamsError,
    OutOfDomainError,
    UnboundedNoiseError,
    ZeroMassRegionError,
)
from moequant.core.numerics import integrate
from moequant.models.data import Dataset
from moequant.models.enums import Provenance
from moequant.models.functions import InputDistribution, NoiseModel, TargetFunction, as_points
from moequant.models.numerics import FloatArray, IntArray, RngStream
from moequant.models.reports import (
    BoundCheckReport,
    BoundParams,
    DecompositionReport,
    LearnedMoE,
    MoEModel,
    OptimalReference,
    RegionBoundCheck,
    RoutedCounts,
)
from moequant.models.segmentation import GridSegmentationMD, Partition, Segmentation1D

logger = getLogger(__name__)

RANGE_POINTS_PER_AXIS = 1001
RANGE_MAX_POINTS = 1_000_000

T = TypeVar("T")


def route(seg: Partition, x: npt.ArrayLike) -> IntArray:
    """0-based region index of each point; a point on a shared face goes to the upper region.

    Raises:
        OutOfDomainError: If a point lies outside [0, 1]^d.
    """
    points = as_points(x, seg.dim)
    if points.size and (points.min() < 0.0 or points.max() > 1.0):
        raise OutOfDomainError("Points must lie inside the unit cube to be routed.")
    return seg.route(points)


def fit_constants(seg: Partition, dataset: Dataset, log_fallback: bool = True) -> LearnedMoE:
    """Least-squares constants: the mean output of each region.

    Regions without training examples take the mean of all outputs.

    Raises:
        EmptyDatasetError: If the dataset has no examples.
        DimensionMismatchError: If the dataset and segmentation dimensions differ.
    """
    if dataset.n == 0:
        raise EmptyDatasetError("Cannot fit expert constants on an empty dataset.")
    if dataset.dim != seg.dim:
        raise DimensionMismatchError(f"Dataset has d={dataset.dim}, segmentation has d={seg.dim}")

    idx = route(seg, dataset.inputs)
    counts = np.bincount(idx, minlength=seg.m)
    sums = np.bincount(idx, weights=dataset.outputs, minlength=seg.m)
    fallback = float(np.mean(dataset.outputs))
    constants = np.where(counts > 0, sums / np.maximum(counts, 1), fallback)
    fallback_regions = tuple(int(i) for i in np.flatnonzero(counts == 0))
    if fallback_regions and log_fallback:
        logger.warning(
            f"{len(fallback_regions)} of {seg.m} regions received no data; using the global mean {fallback:.6g}."
        )
    return LearnedMoE(seg, constants, RoutedCounts(counts.astype(np.int64)), fallback, fallback_regions)


def region_mass(seg: Partition, dist: InputDistribution) -> FloatArray:
    """Probability mass of every region; the masses sum to one up to quadrature tolerance."""
    if isinstance(seg, Segmentation1D):
        return approx.region_masses_1d(seg, dist)
    if isinstance(seg, GridSegmentationMD):
        if dist.dim > 1 and not dist.marginals:
            points, weights = multidim.region_rule(seg)
            return np.sum(weights * dist.pdf(points.reshape(-1, seg.dim)).reshape(weights.shape), axis=1)
        masses = np.ones(1)
        for k, axis in enumerate(seg.axes):
            marginal = dist.marginal(k)
            axis_masses = np.array([integrate(marginal.pdf, lo, hi) for lo, hi in axis.intervals()])
            masses = np.outer(masses, axis_masses).reshape(-1)
        return masses
    raise InvalidParamsError(f"Unsupported segmentation type {type(seg).__name__}")


def optimal_reference(
    seg: Partition, target: TargetFunction, dist: InputDistribution, sigma2: float = 0.0
) -> OptimalReference:
    """Optimal constants, region masses and approximation error computed with one consistent quadrature.

    Raises:
        ZeroMassRegionError: If a region has no probability mass.
    """
    if isinstance(seg, GridSegmentationMD) and seg.dim == 1:
        seg = seg.axes[0]
    if isinstance(seg, Segmentation1D):
        masses = approx.region_masses_1d(seg, dist)
        best = approx.best_model_1d(seg, target, dist)
        return OptimalReference(best.constants, masses, approx.test_error_exact_1d(best, target, dist, sigma2))
    if isinstance(seg, GridSegmentationMD):
        points, weights = multidim.region_rule(seg)
        masses = np.sum(weights * dist.pdf(points.reshape(-1, seg.dim)).reshape(weights.shape), axis=1)
        if np.any(masses < approx.MIN_REGION_MASS):
            raise ZeroMassRegionError("A region of the grid has (numerically) zero probability mass.")
        best = multidim.best_model_md(seg, target, dist)
        return OptimalReference(best.constants, masses, multidim.test_error_exact_md(best, target, dist, sigma2))
    raise InvalidParamsError(f"Unsupported segmentation type {type(seg).__name__}")


def exact_test_error(model: MoEModel, target: TargetFunction, dist: InputDistribution, sigma2: float = 0.0) -> float:
    """Exact test error of any model over a 1D or grid segmentation."""
    seg = model.segmentation
    if isinstance(seg, GridSegmentationMD) and seg.dim > 1:
        return multidim.test_error_exact_md(model, target, dist, sigma2).total
    if isinstance(seg, GridSegmentationMD):
        model = MoEModel(seg.axes[0], model.constants, model.provenance)
    return approx.test_error_exact_1d(model, target, dist, sigma2).total


def decompose(
    seg: Partition,
    learned: LearnedMoE,
    target: TargetFunction,
    dist: InputDistribution,
    sigma2: float = 0.0,
    reference: OptimalReference | None = None,
) -> DecompositionReport:
    """Splits the test error of learned constants into approximation and estimation error.

    The test error is evaluated directly on the learned model; the approximation error
    comes from the optimal constants and the estimation error from the mass-weighted
    squared constant gaps, so the identity between them is an independent check.
    """
    reference = reference or optimal_reference(seg, target, dist, sigma2)
    test_error = exact_test_error(MoEModel(seg, learned.constants, Provenance.LEARNED), target, dist, sigma2)
    report = DecompositionReport(
        test_error=test_error,
        approximation_error=reference.approximation.total,
        estimation_error=reference.estimation_error(learned.constants),
        region_masses=reference.masses,
        noise_floor=sigma2,
    )
    logger.debug(f"Decomposition identity gap {report.identity_gap:.3e} for m={seg.m}")
    return report


def _check_probability(name: str, value: float, closed_right: bool = False) -> None:
    upper_ok = value <= 1 if closed_right else value < 1
    if not (value > 0 and upper_ok):
        interval = "(0, 1]" if closed_right else "(0, 1)"
        raise InvalidParamsError(f"{name} must lie in {interval}, got {value}")


def chernoff_min_n(rho: float, delta_tilde: float) -> int:
    """Smallest n with ``n >= (8 / rho) ln(1 / delta_tilde)``.

    With that many examples a region of mass rho receives at least ``n rho / 2`` of
    them except with probability delta_tilde.
    """
    _check_probability("rho", rho, closed_right=True)
    _check_probability("delta_tilde", delta_tilde)
    return math.ceil(round(8.0 / rho * math.log(1.0 / delta_tilde), 9))


def hoeffding_radius(n: int, rho: float, gamma: float, target_range: float, noise_range: float) -> float:
    """Deviation radius ``gamma (R_beta + R_eps) / sqrt(n rho)`` of a learned constant."""
    if n < 1:
        raise InvalidParamsError(f"n must be >= 1, got {n}")
    _check_probability("rho", rho, closed_right=True)
    if gamma < 0 or target_range < 0 or noise_range < 0:
        raise InvalidParamsError("gamma and range sizes must be nonnegative.")
    return gamma * (target_range + noise_range) / math.sqrt(n * rho)


def estimation_bound(m: int, n: int, gamma: float, max_range: float) -> float:
    """High-probability estimation error bound ``(m / n) gamma^2 max_range^2``."""
    if m < 1 or n < 1:
        raise InvalidParamsError(f"m and n must be >= 1, got m={m}, n={n}")
    if gamma < 0 or max_range < 0:
        raise InvalidParamsError("gamma and max_range must be nonnegative.")
    return m / n * gamma**2 * max_range**2


def radius_failure_probability(gamma: float, delta_tilde: float) -> float:
    """Probability with which a single constant may leave its radius: ``2 exp(-gamma^2) + delta_tilde``."""
    return 2.0 * math.exp(-(gamma**2)) + delta_tilde


def estimation_failure_probability(m: int, gamma: float, delta_tilde: float) -> float:
    """Union-bound failure probability of the estimation bound: ``2 m exp(-gamma^2) + m delta_tilde``."""
    return m * radius_failure_probability(gamma, delta_tilde)


def value_range(
    target: TargetFunction,
    lo: Sequence[float],
    hi: Sequence[float],
    points_per_axis: int = RANGE_POINTS_PER_AXIS,
    max_points: int = RANGE_MAX_POINTS,
) -> float:
    """Range size of beta over a box, from a dense grid of evaluations."""
    d = len(lo)
    per_axis = max(2, min(points_per_axis, int(max_points ** (1.0 / d))))
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi, strict=True)]
    mesh = np.meshgrid(*axes, indexing="ij")
    values = target(np.stack([g.reshape(-1) for g in mesh], axis=1))
    return float(values.max() - values.min())


def region_value_ranges(seg: Partition, target: TargetFunction) -> tuple[float, ...]:
    """Range size of beta over every region."""
    if isinstance(seg, Segmentation1D):
        return tuple(value_range(target, (lo,), (hi,)) for lo, hi in seg.intervals())
    if isinstance(seg, GridSegmentationMD):
        lows, highs = seg.box_bounds()
        budget = max(1, RANGE_MAX_POINTS // seg.m)
        return tuple(
            value_range(target, tuple(lo), tuple(hi), max_points=budget) for lo, hi in zip(lows, highs, strict=True)
        )
    raise InvalidParamsError(f"Unsupported segmentation type {type(seg).__name__}")


def parallel_map(fn: Callable[[int], T], items: Iterable[int], threads: int = 1) -> list[T]:
    """Maps over items in order, on a thread pool when ``threads > 1``."""
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class _Trial:
    constants: FloatArray
    estimation_error: float


def empirical_bound_check(
    seg: Partition,
    target: TargetFunction,
    dist: InputDistribution,
    noise: NoiseModel,
    n: int,
    gamma: float,
    delta_tilde: float,
    repeats: int,
    seed: int = 0,
    threads: int = 1,
) -> BoundCheckReport:
    """Trains ``repeats`` models on fresh datasets and counts bound violations.

    Each repeat r draws its dataset from stream ``(seed, r)``. Per region, the check
    records how often the learned constant left its deviation radius and how far the
    mean learned constant is from the optimal one; per trial, whether the estimation
    error exceeded the estimation bound.

    Raises:
        UnboundedNoiseError: If the noise model is not bounded.
    """
    if not noise.bounded:
        raise UnboundedNoiseError(f"Concentration bounds need bounded noise, got '{noise.kind}'.")
    if repeats < 1:
        raise InvalidParamsError(f"repeats must be >= 1, got {repeats}")
    if n < 1:
        raise InvalidParamsError(f"n must be >= 1, got {n}")

    reference = optimal_reference(seg, target, dist, noise.variance)
    params = BoundParams(gamma, delta_tilde, region_value_ranges(seg, target), noise.range_size)
    radii = np.array([
        hoeffding_radius(n, float(rho), gamma, r, params.noise_range)
        for rho, r in zip(reference.masses, params.target_ranges, strict=True)
    ])
    bound = estimation_bound(seg.m, n, gamma, params.max_range)
    min_n = chernoff_min_n(float(min(reference.masses.min(), 1.0)), delta_tilde)
    if n < min_n:
        logger.warning(f"n={n} is below the Chernoff minimum {min_n} for the smallest region mass.")

    def trial(r: int) -> _Trial:
        dataset = sample_dataset(dist, target, noise, n, RngStream(seed=seed, stream_id=r))
        learned = fit_constants(seg, dataset, log_fallback=False)
        return _Trial(learned.constants, reference.estimation_error(learned.constants))

    logger.info(f"Running {repeats} trainings with n={n}, m={seg.m} on {threads} thread(s)")
    trials = parallel_map(trial, range(repeats), threads)
    constants = np.stack([t.constants for t in trials])
    estimation = np.array([t.estimation_error for t in trials])
    violations = np.sum(np.abs(constants - reference.constants) > radii, axis=0)
    spread = constants.std(axis=0, ddof=1) / math.sqrt(repeats) if repeats > 1 else np.zeros(seg.m)

    per_region = tuple(
        RegionBoundCheck(
            index=i,
            rho=float(reference.masses[i]),
            radius=float(radii[i]),
            violations=int(violations[i]),
            chernoff_n=chernoff_min_n(float(min(reference.masses[i], 1.0)), delta_tilde),
            optimal_constant=float(reference.constants[i]),
            mean_constant=float(constants[:, i].mean()),
            constant_stderr=float(spread[i]),
        )
        for i in range(seg.m)
    )
    return BoundCheckReport(
        gamma=gamma,
        delta_tilde=delta_tilde,
        n=n,
        m=seg.m,
        repeats=repeats,
        per_region=per_region,
        estimation_violations=int(np.sum(estimation > bound)),
        bound=bound,
        radius_probability=radius_failure_probability(gamma, delta_tilde),
        estimation_probability=estimation_failure_probability(seg.m, gamma, delta_tilde),
        mean_estimation_error=float(estimation.mean()),
        chernoff_satisfied=n >= min_n,
    )


@dataclass(frozen=True)
class TradeoffPoint:
    """Mean test error of learned models for one (m, n) pair."""

    m: int
    n: int
    mean_test_error: float
    stderr: float
    approximation_error: float
    mean_estimation_error: float
    mean_empty_regions: float


def tradeoff_curve(
    segmentations: Sequence[Partition],
    target: TargetFunction,
    dist: InputDistribution,
    noise: NoiseModel,
    n_values: Sequence[int],
    repeats: int,
    seed: int = 0,
    threads: int = 1,
) -> list[TradeoffPoint]:
    """Mean test error over repeated trainings for every (segmentation, n) pair.

    Repeat r of the j-th training size uses stream ``j * repeats + r``, and the same
    dataset is shared by every segmentation so the curves differ only through m.
    Each learned model's test error is its approximation error plus the mass-weighted
    squared constant gap.
    """
    if repeats < 1:
        raise InvalidParamsError(f"repeats must be >= 1, got {repeats}")
    references = [optimal_reference(seg, target, dist, noise.variance) for seg in segmentations]
    logger.info(f"Computed optimal references for {len(segmentations)} segmentations")

    points: list[TradeoffPoint] = []
    for j, n in enumerate(n_values):

        def trial(r: int, stream: int = j * repeats, size: int = n) -> tuple[FloatArray, FloatArray]:
            dataset = sample_dataset(dist, target, noise, size, RngStream(seed=seed, stream_id=stream + r))
            errors, empty = np.empty(len(segmentations)), np.empty(len(segmentations))
            for k, (seg, ref) in enumerate(zip(segmentations, references, strict=True)):
                learned = fit_constants(seg, dataset, log_fallback=False)
                errors[k] = ref.estimation_error(learned.constants)
                empty[k] = len(learned.fallback_regions)
            return errors, empty

        trials = parallel_map(trial, range(repeats), threads)
        estimation = np.stack([t[0] for t in trials])
        empty = np.stack([t[1] for t in trials])
        for k, (seg, ref) in enumerate(zip(segmentations, references, strict=True)):
            column = estimation[:, k]
            stderr = float(column.std(ddof=1) / math.sqrt(repeats)) if repeats > 1 else 0.0
            points.append(
                TradeoffPoint(
                    m=seg.m,
                    n=n,
                    mean_test_error=ref.approximation.total + float(column.mean()),
                    stderr=stderr,
                    approximation_error=ref.approximation.total,
                    mean_estimation_error=float(column.mean()),
                    mean_empty_regions=float(empty[:, k].mean()),
                )
            )
        fallback_share = float(np.mean(empty > 0))
        if fallback_share > 0:
            logger.warning(f"n={n}: {fallback_share:.1%} of fits used the global-mean fallback for empty regions.")
        logger.info(f"Finished {repeats} repeats for n={n}")
    return points
