import numpy as np
import pytest

from moequant.core import approx
from moequant.core.builder import make_target, sample_dataset
from moequant.core.density import (
    optimal_density_1d,
    quantizer_density,
    segmentation_from_density,
    uniform_density,
    uniform_segmentation,
)
from moequant.core.errors import (
    DegenerateDensityError,
    InvalidExpertCountError,
    InvalidParamsError,
    ZeroMassRegionError,
)
from moequant.models.enums import ConstantsMode, ErrorMethod, Provenance
from moequant.models.functions import InputDistribution, NoiseModel, TargetFunction
from moequant.models.numerics import RngStream
from moequant.models.reports import MoEModel
from moequant.models.segmentation import DensityFn, Segmentation1D
from tests.utils import NOISE_FLOOR


@pytest.mark.parametrize("m", [1, 10, 100])
def test_exact_error_of_linear_target_closed_form(linear: TargetFunction, uniform: InputDistribution, m: int) -> None:
    """Test that beta = x with uniform inputs and midpoint constants has excess 1/(12 m^2)."""
    model = approx.best_model_1d(uniform_segmentation(m), linear, uniform, ConstantsMode.MIDPOINT)
    report = approx.test_error_exact_1d(model, linear, uniform)
    assert report.excess == pytest.approx(1 / (12 * m * m), rel=1e-9)
    assert report.method == ErrorMethod.EXACT
    assert len(report.per_region) == m


def test_exact_constants_are_conditional_means(linear: TargetFunction, ramp: InputDistribution) -> None:
    """Test E[x | x in [a, b]] under p = 2x against the closed form 2(b^3 - a^3) / (3(b^2 - a^2))."""
    seg = uniform_segmentation(4)
    constants = approx.optimal_constants_1d(seg, linear, ramp)
    a, b = seg.breakpoints[:-1], seg.breakpoints[1:]
    assert constants == pytest.approx(2 * (b**3 - a**3) / (3 * (b**2 - a**2)), rel=1e-10)


def test_midpoint_constants(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that midpoint mode evaluates beta at the centers."""
    seg = uniform_segmentation(5)
    model = approx.best_model_1d(seg, cosine, gaussian, ConstantsMode.MIDPOINT)
    assert model.constants == pytest.approx(cosine(seg.centers))
    assert model.provenance == Provenance.OPTIMAL_MIDPOINT


def test_center_mode_is_multidimensional_only(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that center mode is rejected for one-dimensional constants."""
    with pytest.raises(InvalidParamsError):
        approx.optimal_constants_1d(uniform_segmentation(2), cosine, gaussian, ConstantsMode.CENTER)


def test_zero_mass_region(cosine: TargetFunction, ramp: InputDistribution) -> None:
    """Test that an interval without probability mass has no conditional mean."""
    seg = Segmentation1D(np.array([0.0, 1e-9, 1.0]))
    with pytest.raises(ZeroMassRegionError):
        approx.optimal_constants_1d(seg, cosine, ramp)


def test_exact_error_is_minimized_by_exact_constants(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that moving any constant away from the conditional mean increases the error."""
    seg = uniform_segmentation(6)
    best = approx.best_model_1d(seg, cosine, gaussian)
    shifted = MoEModel(seg, best.constants + np.eye(6)[2] * 0.01, Provenance.LEARNED)
    assert approx.test_error_exact_1d(shifted, cosine, gaussian).total > approx.test_error_exact_1d(
        best, cosine, gaussian
    ).total


def test_noise_floor_is_added(linear: TargetFunction, uniform: InputDistribution) -> None:
    """Test that sigma^2 shifts every evaluator by the same constant."""
    seg = uniform_segmentation(10)
    model = approx.best_model_1d(seg, linear, uniform)
    quiet = approx.test_error_exact_1d(model, linear, uniform).total
    noisy = approx.test_error_exact_1d(model, linear, uniform, NOISE_FLOOR)
    assert noisy.total - quiet == pytest.approx(NOISE_FLOOR)
    assert noisy.noise_floor == NOISE_FLOOR


def test_sum_formula_is_exact_for_linear_target(linear: TargetFunction, uniform: InputDistribution) -> None:
    """Test that the small-interval sum is exact when beta' and p are constant."""
    seg = segmentation_from_density(optimal_density_1d(linear, uniform), 7)
    assert approx.test_error_sum_1d(seg, linear, uniform).total == pytest.approx(1 / (12 * 49), rel=1e-9)


def test_integral_formula_with_uniform_density(linear: TargetFunction, uniform: InputDistribution) -> None:
    """Test that lambda = 1 with beta = x and uniform p gives 1/(12 m^2)."""
    report = approx.test_error_integral_1d(uniform_density(), 10, linear, uniform, NOISE_FLOOR)
    assert report.excess == pytest.approx(1 / 1200, rel=1e-9)
    assert report.method == ErrorMethod.INTEGRAL


def test_integral_formula_of_optimal_density_equals_optimal_error(
    cosine: TargetFunction, gaussian: InputDistribution
) -> None:
    """Test that the integral formula evaluated at lambda_opt attains the optimal error."""
    density = optimal_density_1d(cosine, gaussian)
    integral = approx.test_error_integral_1d(density, 30, cosine, gaussian).total
    optimal = approx.optimal_error_1d(30, cosine, gaussian).total
    assert integral == pytest.approx(optimal, rel=1e-6)


def test_formulas_agree_with_exact_error_at_high_rate(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that sum, integral and exact evaluations converge for many experts."""
    density = optimal_density_1d(cosine, gaussian)
    seg = segmentation_from_density(density, 200)
    model = approx.best_model_1d(seg, cosine, gaussian)
    exact = approx.test_error_exact_1d(model, cosine, gaussian).total
    assert approx.test_error_sum_1d(seg, cosine, gaussian).total == pytest.approx(exact, rel=0.05)
    assert approx.optimal_error_1d(200, cosine, gaussian).total == pytest.approx(exact, rel=0.05)


def test_integral_formula_rejects_vanishing_density(linear: TargetFunction, uniform: InputDistribution) -> None:
    """Test that a density touching zero must be floored first."""
    table = uniform_density().cumulative
    vanishing = DensityFn(unnormalized=lambda x: 2 * np.asarray(x), normalizer=1.0, cumulative=table)
    with pytest.raises(DegenerateDensityError):
        approx.test_error_integral_1d(vanishing, 10, linear, uniform)


def test_invalid_m(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that the formulas require m >= 1."""
    with pytest.raises(InvalidExpertCountError):
        approx.optimal_error_1d(0, cosine, gaussian)


def test_quantizer_error_of_uniform_input(uniform: InputDistribution) -> None:
    """Test the uniform quantizer distortion 1/(12 m^2)."""
    assert approx.quantizer_error_optimal(10, uniform) == pytest.approx(1 / 1200, rel=1e-12)


def test_quantizer_error_of_ramp(ramp: InputDistribution) -> None:
    """Test the closed form for p = 2x: (int (2x)^(1/3))^3 / (12 m^2) = 9/12800 at m = 10."""
    assert approx.quantizer_error_optimal(10, ramp) == pytest.approx(9 / 12800, rel=1e-6)


def test_quantizer_error_forms_agree(ramp: InputDistribution) -> None:
    """Test that the integral form at g_opt equals the closed form and bounds the exact error."""
    density = quantizer_density(ramp)
    optimal = approx.quantizer_error_optimal(40, ramp)
    assert approx.quantizer_error_integral(density, 40, ramp) == pytest.approx(optimal, rel=1e-6)
    exact = approx.quantizer_error_exact(segmentation_from_density(density, 40), ramp)
    assert exact == pytest.approx(optimal, rel=0.02)


def test_empirical_test_error(
    cosine: TargetFunction, gaussian: InputDistribution, noise: NoiseModel
) -> None:
    """Test that the Monte Carlo error agrees with the exact error within its standard error."""
    seg = uniform_segmentation(20)
    model = approx.best_model_1d(seg, cosine, gaussian)
    test = sample_dataset(gaussian, cosine, noise, 20_000, RngStream(seed=11))
    mean, stderr = approx.empirical_test_error(model, test.inputs, test.outputs)
    exact = approx.test_error_exact_1d(model, cosine, gaussian, noise.variance).total
    assert abs(mean - exact) < 4 * stderr


def test_density_grid_values(uniform: InputDistribution) -> None:
    """Test the exported density curve on an evenly spaced grid."""
    xs, values = approx.density_grid_values(quantizer_density(uniform), 5)
    assert xs == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert values == pytest.approx(np.ones(5))


def test_region_masses_sum_to_one(gaussian: InputDistribution) -> None:
    """Test that the interval masses partition the probability."""
    masses = approx.region_masses_1d(uniform_segmentation(9), gaussian)
    assert masses.sum() == pytest.approx(1.0, abs=1e-9)


def test_cosine_plateau_needs_floor(uniform: InputDistribution) -> None:
    """Test that a target flat on part of the domain still gets a finite optimal error."""
    target = make_target("cosine-plateau")
    assert np.isfinite(approx.optimal_error_1d(10, target, uniform).total)


def test_exact_constants_are_stationary(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that the error has zero slope in every constant at the exact conditional means."""
    best = approx.best_model_1d(uniform_segmentation(6), cosine, gaussian)
    step = 1e-6

    def error_at(constants: np.ndarray) -> float:
        model = MoEModel(best.segmentation, constants, Provenance.LEARNED)
        return approx.test_error_exact_1d(model, cosine, gaussian).total

    for i in range(best.m):
        shift = np.eye(best.m)[i] * step
        slope = (error_at(best.constants + shift) - error_at(best.constants - shift)) / (2 * step)
        assert abs(slope) < 1e-6


@pytest.mark.parametrize("delta", [-0.01, 0.01])
def test_perturbing_any_constant_never_lowers_the_error(
    cosine: TargetFunction, gaussian: InputDistribution, delta: float
) -> None:
    """Test that shifting any single exact constant by 0.01 cannot reduce the test error."""
    best = approx.best_model_1d(uniform_segmentation(6), cosine, gaussian)
    base = approx.test_error_exact_1d(best, cosine, gaussian).total
    for i in range(best.m):
        shifted = MoEModel(best.segmentation, best.constants + np.eye(best.m)[i] * delta, Provenance.LEARNED)
        assert approx.test_error_exact_1d(shifted, cosine, gaussian).total >= base


def test_midpoint_constants_approach_exact_constants(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that the largest midpoint-versus-exact constant gap at least halves when Delta halves."""
    gaps = []
    for m in (20, 40, 80):
        seg = uniform_segmentation(m)
        midpoint = approx.best_model_1d(seg, cosine, gaussian, ConstantsMode.MIDPOINT).constants
        exact = approx.best_model_1d(seg, cosine, gaussian).constants
        gaps.append(float(np.max(np.abs(midpoint - exact))))
    assert gaps[1] <= gaps[0] / 2
    assert gaps[2] <= gaps[1] / 2


def test_sum_formula_matches_midpoint_model_error(cosine: TargetFunction, uniform: InputDistribution) -> None:
    """Test the sum formula against the exact error of midpoint constants on 100 equal intervals."""
    seg = uniform_segmentation(100)
    model = approx.best_model_1d(seg, cosine, uniform, ConstantsMode.MIDPOINT)
    exact = approx.test_error_exact_1d(model, cosine, uniform).excess
    assert approx.test_error_sum_1d(seg, cosine, uniform).excess == pytest.approx(exact, rel=0.01)


def test_formula_gaps_shrink_with_m(gaussian: InputDistribution) -> None:
    """Test that the sum and integral formulas both close in on the exact error as m doubles."""
    target = make_target("custom-polynomial", coefficients=[0.0, 1.0, 1.0])
    density = optimal_density_1d(target, gaussian)
    sum_gaps, integral_gaps = [], []
    for m in (50, 100, 200):
        seg = segmentation_from_density(density, m)
        exact = approx.test_error_exact_1d(approx.best_model_1d(seg, target, gaussian), target, gaussian).excess
        sum_gaps.append(abs(approx.test_error_sum_1d(seg, target, gaussian).excess - exact) / exact)
        integral_gaps.append(abs(approx.test_error_integral_1d(density, m, target, gaussian).excess - exact) / exact)
    assert sum_gaps[0] > sum_gaps[1] > sum_gaps[2]
    assert integral_gaps[0] > integral_gaps[1] > integral_gaps[2]


def test_every_error_method_is_reported(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that each evaluator tags its report with its own method."""
    density = optimal_density_1d(cosine, gaussian)
    seg = segmentation_from_density(density, 10)
    reports = [
        approx.test_error_exact_1d(approx.best_model_1d(seg, cosine, gaussian), cosine, gaussian),
        approx.test_error_sum_1d(seg, cosine, gaussian),
        approx.test_error_integral_1d(density, 10, cosine, gaussian),
        approx.optimal_error_1d(10, cosine, gaussian),
    ]
    assert {report.method for report in reports} == set(ErrorMethod)
