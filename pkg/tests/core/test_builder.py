import math
from pathlib import Path

import numpy as np
import pytest

from moequant.core.builder import (
    check_normalized,
    finite_difference_gradient,
    make_input_dist,
    make_noise,
    make_target,
    product_distribution,
    sample_dataset,
)
from moequant.core.errors import (
    ConfigError,
    DimensionMismatchError,
    InvalidParamsError,
    NormalizationError,
    UnknownTargetError,
)
from moequant.core.numerics import cumulative_table, integrate
from moequant.models.config import DistributionSpec, NoiseSpec, TargetSpec
from moequant.models.enums import NoiseKind
from moequant.models.functions import InputDistribution, NoiseModel, TargetFunction
from moequant.models.numerics import RngStream
from tests.utils import NOISE_FLOOR


def test_cosine_target_values_and_derivative(cosine: TargetFunction) -> None:
    """Test cos(10 pi x) and its analytic derivative."""
    x = np.array([0.0, 0.05, 0.1, 0.125])
    assert cosine(x) == pytest.approx(np.cos(10 * math.pi * x))
    assert cosine.derivative(x) == pytest.approx(-10 * math.pi * np.sin(10 * math.pi * x))


def test_cosine_plateau_is_flat_in_the_middle() -> None:
    """Test that the plateau variant is 1 with zero slope on (0.4, 0.6)."""
    target = make_target("cosine-plateau")
    x = np.array([0.45, 0.5, 0.55])
    assert target(x) == pytest.approx(1.0)
    assert target.derivative(x) == pytest.approx(0.0)
    assert target(np.array([0.2]))[0] == pytest.approx(math.cos(2 * math.pi))


def test_sum_coords_gradient() -> None:
    """Test beta = x1 + x2 with unit gradient."""
    target = make_target("sum-coords", dim=2)
    points = np.array([[0.1, 0.2], [0.5, 0.5]])
    assert target(points) == pytest.approx([0.3, 1.0])
    assert target.grad_norm_sq(points) == pytest.approx([2.0, 2.0])


def test_custom_polynomial() -> None:
    """Test the polynomial target with coefficients in ascending order."""
    target = make_target("custom-polynomial", coefficients=[1.0, 0.0, 3.0])
    assert target(np.array([0.5]))[0] == pytest.approx(1.75)
    assert target.derivative(np.array([0.5]))[0] == pytest.approx(3.0)


def test_constant_target_has_zero_gradient() -> None:
    """Test that a constant target has zero derivative everywhere."""
    target = make_target("constant", value=2.5)
    assert target(np.linspace(0, 1, 4)) == pytest.approx(2.5)
    assert target.derivative(np.linspace(0, 1, 4)) == pytest.approx(0.0)


def test_expression_target_uses_finite_differences() -> None:
    """Test that formula targets evaluate with numpy and differentiate numerically."""
    target = make_target("expression", expression="sin(2 * pi * x) + x ** 2")
    x = np.array([0.0, 0.3, 1.0])
    assert target(x) == pytest.approx(np.sin(2 * math.pi * x) + x**2)
    assert target.derivative(x) == pytest.approx(2 * math.pi * np.cos(2 * math.pi * x) + 2 * x, abs=1e-5)
    assert target.fd_step == 1e-6


def test_finite_difference_gradient_in_two_dimensions() -> None:
    """Test the numerical gradient of x1 * x2."""
    gradient = finite_difference_gradient(lambda p: p[:, 0] * p[:, 1], 2)
    assert gradient(np.array([[0.25, 0.75]])) == pytest.approx(np.array([[0.75, 0.25]]), abs=1e-8)


def test_tabulated_target(tmp_path: Path) -> None:
    """Test a target read from a CSV table with linear interpolation."""
    path = tmp_path / "beta.csv"
    path.write_text("x,value\n0,0\n0.5,1\n1,0\n", encoding="utf-8")
    target = make_target(TargetSpec(name="tabulated", path=path))
    assert target(np.array([0.25, 0.75]))[0] == pytest.approx(0.5)
    assert target.derivative(np.array([0.25]))[0] == pytest.approx(2.0, abs=1e-6)


def test_tabulated_target_bad_header(tmp_path: Path) -> None:
    """Test that a table without the expected header is a config error."""
    path = tmp_path / "beta.csv"
    path.write_text("a,b\n0,0\n1,1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        make_target(TargetSpec(name="tabulated", path=path))


def test_unknown_target() -> None:
    """Test that unregistered names are reported with the available ones."""
    with pytest.raises(UnknownTargetError, match="Available"):
        make_target("sawtooth")


@pytest.mark.parametrize("name", ["uniform", "truncated-gaussian", "ramp"])
def test_distributions_are_normalized(name: str) -> None:
    """Test that every built-in density integrates to one on [0, 1]."""
    dist = make_input_dist(name)
    assert integrate(dist.pdf, 0.0, 1.0) == pytest.approx(1.0, abs=1e-9)


def test_truncated_gaussian_density_value(gaussian: InputDistribution) -> None:
    """Test the truncated Gaussian at its mode against the closed form."""
    mass = math.erf(0.5 / (0.2 * math.sqrt(2)))
    expected = 1 / (math.sqrt(2 * math.pi) * 0.2 * mass)
    assert gaussian.pdf(np.array([0.5]))[0] == pytest.approx(expected, rel=1e-12)


def test_truncated_gaussian_samples_stay_in_range(gaussian: InputDistribution) -> None:
    """Test that inverse-CDF sampling stays in [0, 1] and centers on mu."""
    x = gaussian.sample(RngStream(seed=1), 20_000)
    assert x.shape == (20_000, 1)
    assert x.min() >= 0.0
    assert x.max() <= 1.0
    assert x.mean() == pytest.approx(0.5, abs=0.01)


def test_truncated_gaussian_rejects_nonpositive_scale() -> None:
    """Test that scale must be positive."""
    with pytest.raises(InvalidParamsError):
        make_input_dist("truncated-gaussian", scale=0.0)


def test_ramp_samples_follow_density(ramp: InputDistribution) -> None:
    """Test that samples of p(x) = 2x have mean 2/3."""
    x = ramp.sample(RngStream(seed=2), 50_000)
    assert x.mean() == pytest.approx(2 / 3, abs=0.01)


def test_tabulated_density(tmp_path: Path) -> None:
    """Test that a tabulated density is normalized and sampled by inversion."""
    path = tmp_path / "p.csv"
    path.write_text("x,density\n0,1\n1,3\n", encoding="utf-8")
    dist = make_input_dist(DistributionSpec(name="custom-tabulated", path=path))
    assert dist.pdf(np.array([0.0, 1.0])) == pytest.approx([0.5, 1.5])
    x = dist.sample(RngStream(seed=3), 20_000)
    assert x.mean() == pytest.approx(7 / 12, abs=0.01)


def test_product_distribution() -> None:
    """Test a product of a ramp and a uniform factor."""
    components = [DistributionSpec(name="ramp"), DistributionSpec(name="uniform")]
    spec = DistributionSpec(name="product-of-1d", components=components)
    dist = make_input_dist(spec)
    assert dist.dim == 2
    assert dist.pdf(np.array([[0.25, 0.9]]))[0] == pytest.approx(0.5)
    assert dist.sample(RngStream(seed=4), 10).shape == (10, 2)


def test_multidimensional_uniform_is_a_product() -> None:
    """Test that d > 1 builds identical marginals."""
    dist = make_input_dist("uniform", dim=3)
    assert dist.dim == 3
    assert len(dist.marginals) == 3


def test_check_normalized_rejects_unnormalized_density() -> None:
    """Test that a density with mass 2 fails the normalization check."""
    dist = InputDistribution("double", 1, lambda p: 2.0 * np.ones(p.shape[0]), lambda rng, n: rng.uniform(size=n))
    with pytest.raises(NormalizationError):
        check_normalized(dist)


def test_product_of_one_marginal_is_the_marginal(uniform: InputDistribution) -> None:
    """Test that a single factor is returned unchanged."""
    assert product_distribution((uniform,)) is uniform


def test_make_noise() -> None:
    """Test noise variances for the uniform and Gaussian kinds."""
    assert make_noise(NoiseSpec()).variance == pytest.approx(1 / 300)
    assert make_noise(NoiseSpec(kind=NoiseKind.GAUSSIAN, std=0.5)).variance == pytest.approx(0.25)
    assert make_noise(NoiseSpec(kind=NoiseKind.NONE)).variance == 0.0


def test_sample_dataset_is_reproducible(cosine: TargetFunction, gaussian: InputDistribution, noise: NoiseModel) -> None:
    """Test that a dataset is determined by its (seed, stream) pair and records it."""
    a = sample_dataset(gaussian, cosine, noise, 100, RngStream(seed=5, stream_id=2))
    b = sample_dataset(gaussian, cosine, noise, 100, RngStream(seed=5, stream_id=2))
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.outputs, b.outputs)
    assert (a.seed, a.stream_id) == (5, 2)
    assert np.abs(a.outputs - cosine(a.inputs)).max() <= 0.1


def test_sample_dataset_dimension_mismatch(gaussian: InputDistribution, noise: NoiseModel) -> None:
    """Test that the target and distribution must share a dimension."""
    with pytest.raises(DimensionMismatchError):
        sample_dataset(gaussian, make_target("sum-coords", dim=2), noise, 10, RngStream(seed=0))


def test_sample_empty_dataset(cosine: TargetFunction, gaussian: InputDistribution) -> None:
    """Test that n = 0 gives an empty dataset."""
    dataset = sample_dataset(gaussian, cosine, NoiseModel(), 0, RngStream(seed=0))
    assert dataset.n == 0


@pytest.mark.parametrize(
    ("name", "dim"),
    [
        ("linear", 1),
        ("quadratic", 1),
        ("quadratic", 2),
        ("cosine10pi", 1),
        ("cosine-plateau", 1),
        ("sum-coords", 2),
        ("constant", 1),
    ],
)
def test_builtin_gradients_match_central_differences(name: str, dim: int) -> None:
    """Test each analytic gradient against central differences at random interior points."""
    target = make_target(name, dim=dim)
    points = np.random.default_rng(11).uniform(0.01, 0.99, (100, dim))
    numeric = finite_difference_gradient(target.value, dim, step=1e-6)(points)
    assert np.max(np.abs(target.grad(points) - numeric)) < 1e-5


@pytest.mark.parametrize("name", ["uniform", "truncated-gaussian", "ramp"])
def test_samples_follow_the_integrated_density(name: str) -> None:
    """Test the Kolmogorov-Smirnov distance between samples and the CDF of the pdf."""
    dist = make_input_dist(name)
    n = 100_000
    x = np.sort(dist.sample(RngStream(seed=21), n)[:, 0])
    cdf = cumulative_table(dist.pdf, normalize=True).evaluate(x)
    ranks = np.arange(1, n + 1) / n
    distance = max(np.max(ranks - cdf), np.max(cdf - (ranks - 1 / n)))
    assert distance < 0.01


def test_uniform_noise_variance(linear: TargetFunction, uniform: InputDistribution, noise: NoiseModel) -> None:
    """Test that residuals of the uniform noise model have variance 1/300."""
    dataset = sample_dataset(uniform, linear, noise, 1_000_000, RngStream(seed=8))
    residuals = dataset.outputs - linear(dataset.inputs)
    squares = (residuals - residuals.mean()) ** 2
    stderr = np.std(squares, ddof=1) / math.sqrt(residuals.size)
    assert abs(residuals.var(ddof=1) - NOISE_FLOOR) <= 3 * stderr
