import pytest

from moequant.core.builder import make_input_dist, make_target
from moequant.models.enums import NoiseKind
from moequant.models.functions import InputDistribution, NoiseModel, TargetFunction


@pytest.fixture
def cosine() -> TargetFunction:
    """beta(x) = cos(10 pi x)."""
    return make_target("cosine10pi")


@pytest.fixture
def linear() -> TargetFunction:
    """beta(x) = x."""
    return make_target("linear")


@pytest.fixture
def gaussian() -> InputDistribution:
    """Gaussian(0.5, 0.2) truncated to [0, 1]."""
    return make_input_dist("truncated-gaussian", mu=0.5, scale=0.2)


@pytest.fixture
def uniform() -> InputDistribution:
    """Uniform inputs on [0, 1]."""
    return make_input_dist("uniform")


@pytest.fixture
def ramp() -> InputDistribution:
    """p(x) = 2x on [0, 1]."""
    return make_input_dist("ramp")


@pytest.fixture
def noise() -> NoiseModel:
    """Uniform noise on [-0.1, 0.1]."""
    return NoiseModel(kind=NoiseKind.UNIFORM_RANGE, low=-0.1, high=0.1)
