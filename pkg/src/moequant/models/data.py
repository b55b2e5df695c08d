from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from moequant.core.errors import DimensionMismatchError, OutOfDomainError
from moequant.models.numerics import FloatArray


@dataclass(frozen=True, eq=False)
class Dataset:
    """A training or test set of (x, y) pairs drawn with a recorded RNG stream."""

    inputs: FloatArray
    outputs: FloatArray
    seed: int | None = None
    stream_id: int | None = None

    def __post_init__(self) -> None:
        """Validates shapes and the input domain."""
        inputs = np.asarray(self.inputs, dtype=np.float64)
        outputs = np.asarray(self.outputs, dtype=np.float64).reshape(-1)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        if inputs.shape[0] != outputs.shape[0]:
            raise DimensionMismatchError(f"{inputs.shape[0]} inputs but {outputs.shape[0]} outputs")
        if inputs.size and (inputs.min() < 0.0 or inputs.max() > 1.0):
            raise OutOfDomainError("Dataset inputs must lie inside the unit cube.")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @property
    def n(self) -> int:
        """Number of examples."""
        return int(self.outputs.shape[0])

    @property
    def dim(self) -> int:
        """Input dimension."""
        return int(self.inputs.shape[1])
