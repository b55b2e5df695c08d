"""Value types for the numerical plumbing: quadrature settings, monotone tables and RNG streams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from moequant.core.errors import InvalidParamsError

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

RNG_ALGORITHM = "Philox4x64-10 (numpy.random.Philox, SeedSequence spawn_key=(stream_id,))"
_U64 = 2**64


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for composite Simpson quadrature with adaptive interval halving.

    Attributes:
        panels: Number of initial subintervals; must be even so they pair into Simpson cells.
        refine_tol: Relative tolerance on the summed halving differences.
        max_depth: Maximum number of halving rounds.
    """

    panels: int = 256
    refine_tol: float = 1e-10
    max_depth: int = 20

    def __post_init__(self) -> None:
        """Validates the quadrature settings."""
        if self.panels < 2 or self.panels % 2:
            raise InvalidParamsError(f"panels must be an even integer >= 2, got {self.panels}")
        if not self.refine_tol > 0:
            raise InvalidParamsError(f"refine_tol must be positive, got {self.refine_tol}")
        if self.max_depth < 1:
            raise InvalidParamsError(f"max_depth must be >= 1, got {self.max_depth}")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True, eq=False)
class MonotoneTable:
    """A tabulated nondecreasing function on [0, 1] starting at zero."""

    xs: FloatArray
    ys: FloatArray

    def __post_init__(self) -> None:
        """Validates grid ordering and value monotonicity."""
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise InvalidParamsError("MonotoneTable needs two equal-length 1D arrays with at least two nodes.")
        if np.any(np.diff(xs) <= 0):
            raise InvalidParamsError("MonotoneTable grid must be strictly increasing.")
        if np.any(np.diff(ys) < 0):
            raise InvalidParamsError("MonotoneTable values must be nondecreasing.")
        if ys[0] != 0.0:
            raise InvalidParamsError(f"MonotoneTable must start at zero, got ys[0]={ys[0]}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def total(self) -> float:
        """The final cumulative value."""
        return float(self.ys[-1])

    def evaluate(self, x: npt.ArrayLike) -> FloatArray:
        """Evaluates the tabulated function by linear interpolation."""
        return np.interp(np.asarray(x, dtype=np.float64), self.xs, self.ys)


@dataclass
class RngStream:
    """A reproducible random stream identified by a (seed, stream_id) pair.

    Streams with equal identifiers draw identical sequences; distinct stream ids
    are independent children of the same seed. Draws mutate the stream, so a
    stream must not be shared across threads.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validates the identifiers and creates the underlying generator."""
        for name, value in (("seed", self.seed), ("stream_id", self.stream_id)):
            if not 0 <= value < _U64:
                raise InvalidParamsError(f"{name} must be an unsigned 64-bit integer, got {value}")
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def spawn(self, stream_id: int) -> RngStream:
        """Returns a fresh stream that shares this seed but uses another stream id."""
        return RngStream(seed=self.seed, stream_id=stream_id)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int | tuple[int, ...] | None = None) -> FloatArray:
        """Draws uniform variates on [low, high)."""
        return np.asarray(self.generator.uniform(low, high, size), dtype=np.float64)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size: int | tuple[int, ...] | None = None) -> FloatArray:
        """Draws Gaussian variates."""
        return np.asarray(self.generator.normal(loc, scale, size), dtype=np.float64)
