"""Module responsible for constructing domain objects from configuration schemas.

This acts as a factory layer: it owns the registries of builtin targets and input
distributions, validates what the schemas cannot (file contents, normalization)
and keeps the numerical modules free of configuration concerns.
"""

from __future__ import annotations

from collections.abc import Callable
from logging import getLogger
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from moequant.core.errors import (
    ConfigError,
    DimensionMismatchError,
    InvalidParamsError,
    NormalizationError,
    UnknownTargetError,
)
from moequant.core.numerics import cumulative_table, integrate, invert_monotone
from moequant.models.config import DistributionSpec, NoiseSpec, TargetSpec
from moequant.models.data import Dataset
from moequant.models.enums import NoiseKind
from moequant.models.functions import InputDistribution, NoiseModel, PointFunction, TargetFunction
from moequant.models.numerics import FloatArray, RngStream

logger = getLogger(__name__)

FD_STEP = 1e-6
NORMALIZATION_TOL = 1e-6
TEN_PI = 10.0 * np.pi


def finite_difference_gradient(value: PointFunction, dim: int, step: float = FD_STEP) -> PointFunction:
    """Central differences inside the cube, one-sided within ``step`` of a face."""

    def gradient(points: FloatArray) -> FloatArray:
        grad = np.empty_like(points)
        for k in range(dim):
            forward, backward = points.copy(), points.copy()
            forward[:, k] = np.minimum(points[:, k] + step, 1.0)
            backward[:, k] = np.maximum(points[:, k] - step, 0.0)
            grad[:, k] = (value(forward) - value(backward)) / (forward[:, k] - backward[:, k])
        return grad

    return gradient


def _first_axis_gradient(derivative: Callable[[FloatArray], FloatArray]) -> PointFunction:
    def gradient(points: FloatArray) -> FloatArray:
        grad = np.zeros_like(points)
        grad[:, 0] = derivative(points[:, 0])
        return grad

    return gradient


def _on_first_axis(fn: Callable[[FloatArray], FloatArray]) -> PointFunction:
    return lambda points: fn(points[:, 0])


def _read_two_column_csv(path: Path, value_column: str) -> tuple[FloatArray, FloatArray]:
    """Reads a ``x,<value_column>`` CSV with a strictly increasing grid inside [0, 1]."""
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigError(f"Cannot read tabulated file: {path}") from e
    header = [h.strip() for h in lines[0].split(",")] if lines else []
    if header != ["x", value_column]:
        raise ConfigError(f"Tabulated file {path} must start with the header 'x,{value_column}', got {lines[:1]}")
    try:
        table = np.loadtxt(lines[1:], delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise ConfigError(f"Tabulated file {path} contains non-numeric rows: {e}") from e
    if table.shape[0] < 2 or table.shape[1] != 2:
        raise ConfigError(f"Tabulated file {path} needs at least two rows of two columns.")
    xs, values = table[:, 0], table[:, 1]
    if np.any(np.diff(xs) <= 0):
        raise InvalidParamsError(f"Grid in {path} must be strictly increasing.")
    if xs[0] < 0.0 or xs[-1] > 1.0:
        raise InvalidParamsError(f"Grid in {path} must lie inside [0, 1].")
    return xs, values


def _linear(spec: TargetSpec) -> TargetFunction:
    return TargetFunction(
        "linear", spec.dim, _on_first_axis(lambda x: x), _first_axis_gradient(lambda x: np.ones_like(x))
    )


def _quadratic(spec: TargetSpec) -> TargetFunction:
    return TargetFunction("quadratic", spec.dim, _on_first_axis(lambda x: x * x), _first_axis_gradient(lambda x: 2 * x))


def _cosine(spec: TargetSpec) -> TargetFunction:
    return TargetFunction(
        "cosine10pi",
        spec.dim,
        _on_first_axis(lambda x: np.cos(TEN_PI * x)),
        _first_axis_gradient(lambda x: -TEN_PI * np.sin(TEN_PI * x)),
    )


def _plateau(x: FloatArray) -> FloatArray:
    return (x > 0.4) & (x < 0.6)


def _cosine_plateau(spec: TargetSpec) -> TargetFunction:
    return TargetFunction(
        "cosine-plateau",
        spec.dim,
        _on_first_axis(lambda x: np.where(_plateau(x), 1.0, np.cos(TEN_PI * x))),
        _first_axis_gradient(lambda x: np.where(_plateau(x), 0.0, -TEN_PI * np.sin(TEN_PI * x))),
    )


def _sum_coords(spec: TargetSpec) -> TargetFunction:
    return TargetFunction("sum-coords", spec.dim, lambda p: p.sum(axis=1), lambda p: np.ones_like(p))


def _constant(spec: TargetSpec) -> TargetFunction:
    c = spec.value
    return TargetFunction(
        "constant", spec.dim, lambda p: np.full(p.shape[0], c), lambda p: np.zeros_like(p), params={"value": c}
    )


def _polynomial(spec: TargetSpec) -> TargetFunction:
    coefficients = np.asarray(spec.coefficients, dtype=np.float64)
    derivative = np.polynomial.polynomial.polyder(coefficients)
    return TargetFunction(
        "custom-polynomial",
        spec.dim,
        _on_first_axis(lambda x: np.polynomial.polynomial.polyval(x, coefficients)),
        _first_axis_gradient(lambda x: np.polynomial.polynomial.polyval(x, derivative)),
        params={f"c{k}": float(c) for k, c in enumerate(coefficients)},
    )


def _expression(spec: TargetSpec) -> TargetFunction:
    assert spec.expression is not None
    formula = spec.expression
    return TargetFunction(
        f"expression:{formula}",
        spec.dim,
        formula.evaluate,
        finite_difference_gradient(formula.evaluate, spec.dim),
        fd_step=FD_STEP,
    )


def _tabulated(spec: TargetSpec) -> TargetFunction:
    if spec.dim != 1:
        raise DimensionMismatchError(f"Tabulated targets are one-dimensional, got dim={spec.dim}")
    assert spec.path is not None
    xs, values = _read_two_column_csv(spec.path, "value")

    def value(points: FloatArray) -> FloatArray:
        return np.interp(points[:, 0], xs, values)

    logger.debug(f"Loaded tabulated target with {len(xs)} nodes from {spec.path}")
    return TargetFunction(f"tabulated:{spec.path.name}", 1, value, finite_difference_gradient(value, 1), FD_STEP)


TARGET_REGISTRY: dict[str, Callable[[TargetSpec], TargetFunction]] = {
    "linear": _linear,
    "quadratic": _quadratic,
    "cosine10pi": _cosine,
    "cosine-plateau": _cosine_plateau,
    "sum-coords": _sum_coords,
    "custom-polynomial": _polynomial,
    "constant": _constant,
    "expression": _expression,
    "tabulated": _tabulated,
}


def make_target(spec: TargetSpec | str, **params: object) -> TargetFunction:
    """Builds a target function from its schema or from a registry name plus schema fields.

    Raises:
        UnknownTargetError: If the name is not registered.
        DimensionMismatchError: If the target cannot live in the requested dimension.
    """
    if isinstance(spec, str):
        spec = TargetSpec.model_validate({"name": spec, **params})
    factory = TARGET_REGISTRY.get(spec.name)
    if factory is None:
        raise UnknownTargetError(f"Unknown target '{spec.name}'. Available: {', '.join(TARGET_REGISTRY)}")
    return factory(spec)


def _uniform_1d() -> InputDistribution:
    return InputDistribution(
        "uniform",
        1,
        lambda p: np.ones(p.shape[0]),
        lambda rng, n: rng.uniform(size=n),
    )


def _truncated_gaussian(mu: float, scale: float) -> InputDistribution:
    if not scale > 0:
        raise InvalidParamsError(f"Truncated Gaussian scale must be positive, got {scale}")
    lower = float(ndtr(-mu / scale))
    mass = float(ndtr((1.0 - mu) / scale)) - lower
    if not mass > 0:
        raise InvalidParamsError(f"Truncated Gaussian ({mu}, {scale}) has no mass on [0, 1].")

    def density(points: FloatArray) -> FloatArray:
        z = (points[:, 0] - mu) / scale
        return np.exp(-0.5 * z * z) / (np.sqrt(2.0 * np.pi) * scale * mass)

    def sampler(rng: RngStream, n: int) -> FloatArray:
        return np.clip(mu + scale * ndtri(lower + mass * rng.uniform(size=n)), 0.0, 1.0)

    return InputDistribution("truncated-gaussian", 1, density, sampler, params={"mu": mu, "scale": scale})


def _ramp() -> InputDistribution:
    return InputDistribution("ramp", 1, lambda p: 2.0 * p[:, 0], lambda rng, n: np.sqrt(rng.uniform(size=n)))


def _tabulated_density(path: Path, grid_size: int) -> InputDistribution:
    xs, values = _read_two_column_csv(path, "density")
    if np.any(values < 0):
        raise InvalidParamsError(f"Tabulated density in {path} has negative values.")

    def shape(x: FloatArray) -> FloatArray:
        return np.interp(x, xs, values)

    mass = integrate(shape, 0.0, 1.0)
    if not mass > 0:
        raise InvalidParamsError(f"Tabulated density in {path} has zero mass.")
    table = cumulative_table(shape, grid_size, normalize=True)

    return InputDistribution(
        f"custom-tabulated:{path.name}",
        1,
        lambda p: shape(p[:, 0]) / mass,
        lambda rng, n: invert_monotone(table, rng.uniform(size=n)),
    )


def product_distribution(marginals: tuple[InputDistribution, ...], name: str = "product-of-1d") -> InputDistribution:
    """Independent coordinates drawn from one-dimensional marginals."""
    if len(marginals) == 1:
        return marginals[0]

    def density(points: FloatArray) -> FloatArray:
        values = np.ones(points.shape[0])
        for k, marginal in enumerate(marginals):
            values = values * marginal.pdf(points[:, k])
        return values

    def sampler(rng: RngStream, n: int) -> FloatArray:
        return np.column_stack([marginal.sample(rng, n)[:, 0] for marginal in marginals])

    return InputDistribution(name, len(marginals), density, sampler, marginals=marginals)


def check_normalized(dist: InputDistribution, tol: float = NORMALIZATION_TOL) -> None:
    """Verifies that every one-dimensional factor integrates to one.

    Raises:
        NormalizationError: If a factor's integral deviates from one by more than ``tol``.
    """
    for marginal in dist.marginals or (dist,):
        mass = integrate(lambda x, f=marginal: f.pdf(x), 0.0, 1.0)
        if abs(mass - 1.0) > tol:
            raise NormalizationError(f"Density '{marginal.name}' integrates to {mass!r}, not 1.")


def _marginal(spec: DistributionSpec, grid_size: int) -> InputDistribution:
    if spec.name == "uniform":
        return _uniform_1d()
    if spec.name == "truncated-gaussian":
        return _truncated_gaussian(spec.mu, spec.scale)
    if spec.name == "ramp":
        return _ramp()
    if spec.name == "custom-tabulated":
        assert spec.path is not None
        return _tabulated_density(spec.path, grid_size)
    raise ConfigError(
        f"Unknown distribution '{spec.name}'. Available: uniform, truncated-gaussian, ramp, "
        "product-of-1d, custom-tabulated"
    )


def make_input_dist(spec: DistributionSpec | str, grid_size: int = 10_001, **params: object) -> InputDistribution:
    """Builds an input distribution on [0, 1]^d from its schema.

    Multidimensional uniform and truncated-Gaussian inputs are products of identical
    one-dimensional factors; ``product-of-1d`` combines arbitrary one-dimensional components.

    Raises:
        InvalidParamsError: If a parameter is out of range (for example a nonpositive scale).
        NormalizationError: If the density does not integrate to one within 1e-6.
        ConfigError: If the name is unknown or a tabulated file cannot be read.
    """
    if isinstance(spec, str):
        spec = DistributionSpec.model_validate({"name": spec, **params})
    if spec.name == "product-of-1d":
        assert spec.components is not None
        dist = product_distribution(tuple(_marginal(c, grid_size) for c in spec.components))
    elif spec.dim == 1:
        dist = _marginal(spec, grid_size)
    else:
        base = _marginal(spec, grid_size)
        dist = product_distribution((base,) * spec.dim, name=base.name)
    check_normalized(dist)
    return dist


def make_noise(spec: NoiseSpec) -> NoiseModel:
    """Builds the additive noise model."""
    if spec.kind == NoiseKind.UNIFORM_RANGE:
        return NoiseModel(kind=spec.kind, low=spec.low, high=spec.high)
    if spec.kind == NoiseKind.GAUSSIAN:
        return NoiseModel(kind=spec.kind, std=spec.std)
    return NoiseModel()


def sample_dataset(
    dist: InputDistribution, target: TargetFunction, noise: NoiseModel, n: int, rng: RngStream
) -> Dataset:
    """Draws n i.i.d. pairs y = beta(x) + noise.

    Inputs are drawn before noise values so the input sequence of a stream does not
    depend on the noise model.

    Raises:
        DimensionMismatchError: If the target and distribution dimensions differ.
        InvalidParamsError: If n is negative.
    """
    if dist.dim != target.dim:
        raise DimensionMismatchError(f"Distribution has d={dist.dim} but target '{target.name}' has d={target.dim}")
    if n < 0:
        raise InvalidParamsError(f"Dataset size must be >= 0, got {n}")
    inputs = dist.sample(rng, n)
    outputs = target(inputs) + noise.sample(rng, n)
    return Dataset(inputs=inputs, outputs=outputs, seed=rng.seed, stream_id=rng.stream_id)
