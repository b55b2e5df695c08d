import numpy as np
import pytest

from moequant.core.errors import DimensionMismatchError, InvalidParamsError
from moequant.models.enums import NoiseKind
from moequant.models.functions import NoiseModel, TargetFunction, as_points
from moequant.models.numerics import RngStream


def test_as_points_shapes() -> None:
    """Test how scalars and flat arrays are read as points."""
    assert as_points(0.5, 1).shape == (1, 1)
    assert as_points([0.1, 0.2, 0.3], 1).shape == (3, 1)
    assert as_points([0.1, 0.2, 0.3], 3).shape == (1, 3)
    with pytest.raises(DimensionMismatchError):
        as_points(np.zeros((4, 2)), 3)


def test_target_function_gradient_helpers() -> None:
    """Test the gradient norm and the one-dimensional derivative."""
    target = TargetFunction("plane", 2, lambda p: 3 * p[:, 0] + 4 * p[:, 1], lambda p: np.tile([3.0, 4.0], (len(p), 1)))
    assert target([[0.5, 0.5]]) == pytest.approx([3.5])
    assert target.grad_norm_sq([[0.1, 0.2], [0.3, 0.4]]) == pytest.approx([25.0, 25.0])
    with pytest.raises(DimensionMismatchError):
        target.derivative([0.1, 0.2])


def test_target_params_are_read_only() -> None:
    """Test that the parameter mapping is frozen."""
    target = TargetFunction("c", 1, lambda p: p[:, 0], lambda p: np.ones_like(p), params={"value": 1.0})
    with pytest.raises(TypeError):
        target.params["value"] = 2.0  # type: ignore[index]


def test_noise_model_validation() -> None:
    """Test the zero-mean and positivity checks."""
    with pytest.raises(InvalidParamsError):
        NoiseModel(kind=NoiseKind.UNIFORM_RANGE, low=0.0, high=0.2)
    with pytest.raises(InvalidParamsError):
        NoiseModel(kind=NoiseKind.UNIFORM_RANGE, low=0.1, high=0.1)
    with pytest.raises(InvalidParamsError):
        NoiseModel(kind=NoiseKind.GAUSSIAN, std=0.0)


def test_noise_model_moments() -> None:
    """Test variance, boundedness and range size per family."""
    uniform = NoiseModel(kind=NoiseKind.UNIFORM_RANGE, low=-0.3, high=0.3)
    assert uniform.variance == pytest.approx(0.03)
    assert uniform.range_size == pytest.approx(0.6)
    assert uniform.bounded
    gauss = NoiseModel(kind=NoiseKind.GAUSSIAN, std=0.5)
    assert gauss.variance == pytest.approx(0.25)
    assert not gauss.bounded
    assert gauss.range_size == float("inf")
    assert NoiseModel().variance == 0.0
    assert NoiseModel().sample(RngStream(seed=0), 4).tolist() == [0.0] * 4


def test_uniform_noise_samples_stay_in_range() -> None:
    """Test that uniform noise respects its bounds and is centred."""
    values = NoiseModel(kind=NoiseKind.UNIFORM_RANGE, low=-0.1, high=0.1).sample(RngStream(seed=2), 20_000)
    assert values.min() >= -0.1
    assert values.max() <= 0.1
    assert abs(values.mean()) < 0.003
