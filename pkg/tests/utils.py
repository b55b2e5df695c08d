import re
from collections.abc import Callable

import numpy as np

from moequant.models.numerics import FloatArray

# Noise on [-0.1, 0.1] has variance 1/300.
NOISE_FLOOR = 1.0 / 300.0


def strip_ansi(text: str) -> str:
    return re.sub(r"\x1b\[[0-9;]*m", "", text)


def random_smooth_shape(rng: np.random.Generator, terms: int = 4) -> Callable[[FloatArray], FloatArray]:
    """A strictly positive smooth function exp(sum a_k cos(k pi x)) with random coefficients."""
    coefficients = rng.uniform(-1.0, 1.0, terms)
    k = np.arange(1, terms + 1)

    def shape(x: FloatArray) -> FloatArray:
        return np.exp(np.cos(np.pi * np.multiply.outer(np.asarray(x, dtype=np.float64), k)) @ coefficients)

    return shape
