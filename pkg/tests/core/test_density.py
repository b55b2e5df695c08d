import logging

import numpy as np
import pytest

from moequant.core.builder import make_target
from moequant.core.density import (
    optimal_density_1d,
    quantizer_density,
    segment_masses,
    segmentation_from_density,
    uniform_density,
    uniform_segmentation,
)
from moequant.core.errors import (
    DimensionMismatchError,
    InvalidExpertCountError,
    InvalidParamsError,
)
from moequant.core.numerics import integrate
from moequant.models.functions import InputDistribution, TargetFunction


def test_optimal_density_is_normalized(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that lambda integrates to one and the compressor ends at one."""
    density = optimal_density_1d(cosine, gaussian)
    assert integrate(density, 0.0, 1.0) == pytest.approx(1.0, abs=1e-9)
    assert density.compress(1.0) == pytest.approx(1.0)
    assert density.floor_applied


def test_optimal_density_shape(cosine: TargetFunction, uniform: InputDistribution) -> None:
    """Test that lambda is proportional to |beta'|^(2/3) for uniform inputs."""
    density = optimal_density_1d(cosine, uniform)
    x = np.array([0.05, 0.15, 0.27])
    ratio = density(x) / np.abs(cosine.derivative(x)) ** (2 / 3)
    assert ratio == pytest.approx(np.full(3, ratio[0]), rel=1e-12)


def test_optimal_density_of_linear_target_is_quantizer_density(
    linear: TargetFunction, ramp: InputDistribution
) -> None:
    """Test that beta' = 1 reduces the optimal density to the quantizer density."""
    x = np.linspace(0, 1, 101)
    gap = np.abs(optimal_density_1d(linear, ramp)(x) - quantizer_density(ramp)(x))
    assert gap.max() < 1e-10


def test_floor_keeps_density_positive_for_constant_target(uniform: InputDistribution) -> None:
    """Test that a flat target gives the uniform density through the eps floor and warns."""
    flat = make_target("constant", value=1.0)
    density = optimal_density_1d(flat, uniform, eps=1e-12)
    assert density.values.min() > 0
    assert density(np.array([0.2, 0.8])) == pytest.approx(1.0)


def test_floor_warning(uniform: InputDistribution, caplog: pytest.LogCaptureFixture) -> None:
    """Test that a floor engaged on a large part of the domain is logged as a warning."""
    with caplog.at_level(logging.WARNING):
        optimal_density_1d(make_target("cosine-plateau"), uniform, grid_size=1001)
    assert "eps floor" in caplog.text


def test_optimal_density_rejects_nonpositive_eps(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that eps must be positive."""
    with pytest.raises(InvalidParamsError):
        optimal_density_1d(cosine, gaussian, eps=0.0)


def test_optimal_density_requires_one_dimension(gaussian: InputDistribution) -> None:
    """Test that multidimensional targets are rejected."""
    with pytest.raises(DimensionMismatchError):
        optimal_density_1d(make_target("sum-coords", dim=2), gaussian)


def test_uniform_density_gives_uniform_segmentation() -> None:
    """Test that lambda = 1 forms equal intervals."""
    seg = segmentation_from_density(uniform_density(), 8)
    assert seg.breakpoints == pytest.approx(np.arange(9) / 8, abs=1e-12)


def test_segmentation_has_equal_density_mass(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that every compander interval carries mass 1/m of lambda."""
    density = optimal_density_1d(cosine, gaussian)
    seg = segmentation_from_density(density, 20)
    assert seg.m == 20
    assert seg.breakpoints[0] == 0.0
    assert seg.breakpoints[-1] == 1.0
    assert segment_masses(density, seg) == pytest.approx(np.full(20, 0.05), abs=1e-5)


def test_segmentation_of_ramp_quantizer(ramp: InputDistribution) -> None:
    """Test that the quantizer density of p = 2x is (2x)^(1/3) normalized, so a_i = (i/m)^(3/4)."""
    seg = segmentation_from_density(quantizer_density(ramp), 4)
    assert seg.breakpoints == pytest.approx((np.arange(5) / 4) ** 0.75, abs=1e-6)


def test_single_expert_covers_the_interval() -> None:
    """Test that m = 1 gives the trivial segmentation."""
    assert segmentation_from_density(uniform_density(), 1).breakpoints.tolist() == [0.0, 1.0]


def test_segmentation_rejects_zero_experts() -> None:
    """Test that m must be positive."""
    with pytest.raises(InvalidExpertCountError):
        segmentation_from_density(uniform_density(), 0)
    with pytest.raises(InvalidExpertCountError):
        uniform_segmentation(0)


def test_uniform_segmentation_lengths() -> None:
    """Test breakpoints i/m."""
    seg = uniform_segmentation(5)
    assert seg.lengths == pytest.approx(np.full(5, 0.2))
    assert seg.centers == pytest.approx([0.1, 0.3, 0.5, 0.7, 0.9])


def test_interval_lengths_follow_the_density(gaussian: InputDistribution) -> None:
    """Test that lambda(x_i) matches 1 / (m Delta_i) at every interval center for m = 200."""
    target = make_target("custom-polynomial", coefficients=[0.0, 1.0, 1.0])
    density = optimal_density_1d(target, gaussian)
    m = 200
    seg = segmentation_from_density(density, m)
    at_centers = density(seg.centers)
    assert np.max(np.abs(at_centers - 1.0 / (m * seg.lengths)) / at_centers) < 0.02
