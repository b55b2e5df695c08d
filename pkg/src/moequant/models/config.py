"""Pydantic schemas for user-facing experiment configuration.

Every schema validates the raw JSON document and converts itself into domain
objects through the builder layer with ``to_domain()``.
"""

from __future__ import annotations

import ast
import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from moequant.models.enums import ConstantsMode, NoiseKind, SegmentationKind
from moequant.models.formats import OutputFormat
from moequant.models.functions import InputDistribution, NoiseModel, TargetFunction
from moequant.models.numerics import FloatArray

ALLOWED_FUNCS: dict[str, Any] = {
    name: getattr(np, name)
    for name in (
        "sin",
        "cos",
        "tan",
        "arcsin",
        "arccos",
        "arctan",
        "arctan2",
        "sinh",
        "cosh",
        "tanh",
        "sqrt",
        "exp",
        "log",
        "log10",
        "log2",
        "floor",
        "ceil",
        "abs",
        "sign",
        "power",
        "hypot",
        "minimum",
        "maximum",
        "clip",
        "where",
    )
}
ALLOWED_CONSTANTS = {"pi": float(np.pi), "e": float(np.e)}


class _SafeAstValidator(ast.NodeVisitor):
    allowed_nodes = {
        ast.Expression,
        ast.BinOp,
        ast.UnaryOp,
        ast.Constant,
        ast.Call,
        ast.Name,
        ast.Load,
        ast.Add,
        ast.Sub,
        ast.Mult,
        ast.Div,
        ast.Mod,
        ast.Pow,
        ast.USub,
        ast.UAdd,
        ast.Compare,
        ast.Eq,
        ast.NotEq,
        ast.Lt,
        ast.LtE,
        ast.Gt,
        ast.GtE,
    }

    def __init__(self, variables: set[str]):
        self.allowed_names = set(ALLOWED_FUNCS) | set(ALLOWED_CONSTANTS) | variables

    def visit(self, node: ast.AST) -> None:
        if type(node) not in self.allowed_nodes:
            raise ValueError(f"Disallowed AST node: {type(node).__name__}")
        super().visit(node)

    def visit_Call(self, node: ast.Call) -> None:
        if not isinstance(node.func, ast.Name):
            raise ValueError("Only direct function calls are allowed.")
        if node.func.id not in ALLOWED_FUNCS:
            raise ValueError(f"Function '{node.func.id}' is not allowed.")
        if node.keywords:
            raise ValueError("Keyword arguments are not allowed.")
        for arg in node.args:
            self.visit(arg)

    def visit_Name(self, node: ast.Name) -> None:
        if node.id not in self.allowed_names:
            raise ValueError(f"Identifier '{node.id}' is not in the list of allowed names.")


def variable_names(dim: int) -> tuple[str, ...]:
    """Names bound to the coordinates of a point: ``x`` in 1D, ``x1..xd`` otherwise.

    ``x1`` is also bound in 1D so formulas written for the first coordinate work everywhere.
    """
    return ("x", "x1") if dim == 1 else tuple(f"x{k}" for k in range(1, dim + 1))


class SafeExpression(BaseModel):
    """A vectorized formula over the input coordinates that can be safely evaluated."""

    model_config = ConfigDict(frozen=True)
    expr: str

    @field_validator("expr")
    @classmethod
    def validate_expr_syntax(cls, v: str) -> str:
        """Validates that the expression has valid Python syntax and only whitelisted nodes."""
        try:
            node = ast.parse(v, mode="eval")
        except SyntaxError as e:
            raise ValueError(f"Invalid expression syntax: {e}") from e
        names = {n.id for n in ast.walk(node) if isinstance(n, ast.Name)}
        coordinates = {name for name in names if name == "x" or (name.startswith("x") and name[1:].isdigit())}
        _SafeAstValidator(coordinates).visit(node)
        return v

    def check_variables(self, dim: int) -> None:
        """Raises ValueError when the formula uses a coordinate that a ``dim``-dimensional point lacks."""
        _SafeAstValidator(set(variable_names(dim))).visit(ast.parse(self.expr, mode="eval"))

    def evaluate(self, points: FloatArray) -> FloatArray:
        """Evaluates the formula at (n, d) points and returns (n,) values."""
        dim = points.shape[1]
        ctx: dict[str, Any] = dict(ALLOWED_FUNCS)
        ctx.update(ALLOWED_CONSTANTS)
        if dim == 1:
            ctx["x"] = ctx["x1"] = points[:, 0]
        else:
            ctx.update({name: points[:, k] for k, name in enumerate(variable_names(dim))})

        node = ast.parse(self.expr, mode="eval")
        _SafeAstValidator(set(variable_names(dim))).visit(node)
        code = compile(node, "<expr>", "eval")
        result = eval(code, {"__builtins__": {}}, ctx)
        return np.broadcast_to(np.asarray(result, dtype=np.float64), (points.shape[0],)).copy()

    def __str__(self) -> str:
        """Returns the formula text."""
        return self.expr


class TargetSpec(BaseModel):
    """Schema for the target function beta."""

    name: str = "cosine10pi"
    dim: int = Field(default=1, ge=1)
    value: float = 1.0
    coefficients: list[float] | None = None
    expression: SafeExpression | None = None
    path: Path | None = None

    @field_validator("expression", mode="before")
    @classmethod
    def coerce_expression(cls, v: Any) -> Any:
        """Accepts a bare formula string in place of an expression object."""
        return {"expr": v} if isinstance(v, str) else v

    @model_validator(mode="after")
    def validate_required_parameters(self) -> TargetSpec:
        """Validates that parameterized targets carry their parameter."""
        if self.name == "custom-polynomial" and not self.coefficients:
            raise ValueError("Target 'custom-polynomial' requires 'coefficients'.")
        if self.name == "expression":
            if self.expression is None:
                raise ValueError("Target 'expression' requires 'expression'.")
            self.expression.check_variables(self.dim)
        if self.name == "tabulated" and self.path is None:
            raise ValueError("Target 'tabulated' requires 'path'.")
        return self

    def to_domain(self) -> TargetFunction:
        """Builds the target function."""
        from moequant.core.builder import make_target

        return make_target(self)


class DistributionSpec(BaseModel):
    """Schema for the input distribution p_x."""

    name: str = "truncated-gaussian"
    dim: int = Field(default=1, ge=1)
    mu: float = 0.5
    scale: float = 0.2
    components: list[DistributionSpec] | None = None
    path: Path | None = None

    @model_validator(mode="after")
    def validate_required_parameters(self) -> DistributionSpec:
        """Validates product and tabulated parameters."""
        if self.name == "product-of-1d":
            if not self.components:
                raise ValueError("Distribution 'product-of-1d' requires 'components'.")
            if any(c.dim != 1 for c in self.components):
                raise ValueError("Components of 'product-of-1d' must be one-dimensional.")
            self.dim = len(self.components)
        if self.name == "custom-tabulated" and self.path is None:
            raise ValueError("Distribution 'custom-tabulated' requires 'path'.")
        return self

    def to_domain(self) -> InputDistribution:
        """Builds the input distribution."""
        from moequant.core.builder import make_input_dist

        return make_input_dist(self)


class NoiseSpec(BaseModel):
    """Schema for the additive noise."""

    kind: NoiseKind = NoiseKind.UNIFORM_RANGE
    low: float = -0.1
    high: float = 0.1
    std: float = 0.1

    def to_domain(self) -> NoiseModel:
        """Builds the noise model."""
        from moequant.core.builder import make_noise

        return make_noise(self)


def parse_int_list(value: Any) -> Any:
    """Reads ``"a:b"``, ``"a:b:step"`` (inclusive) or ``"a,b,c"`` into a list of integers."""
    if not isinstance(value, str):
        return value
    text = value.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] < 1):
            raise ValueError(f"Range must look like 'start:stop' or 'start:stop:step', got '{value}'")
        step = parts[2] if len(parts) == 3 else 1
        return list(range(parts[0], parts[1] + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


class ExperimentConfig(BaseModel):
    """Schema for one experiment run; every CLI subcommand reads the fields it needs."""

    model_config = ConfigDict(extra="forbid")

    target: TargetSpec = Field(default_factory=TargetSpec)
    distribution: DistributionSpec = Field(default_factory=DistributionSpec)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)

    m: int = Field(default=10, ge=1)
    m_values: list[int] | None = None
    n: int = Field(default=200, ge=0)
    n_values: list[int] = Field(default_factory=lambda: [50, 200, 800])
    repeats: int = Field(default=300, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    eps: float = Field(default=1e-16, gt=0)
    grid_size: int = Field(default=10_001, ge=3)
    test_samples: int = Field(default=5000, ge=1)
    segmentation: SegmentationKind | None = None
    constants_mode: ConstantsMode = ConstantsMode.EXACT

    gamma: float = Field(default=3.0, ge=0)
    delta_tilde: float = Field(default=1e-3, gt=0, lt=1)

    d: int = Field(default=2, ge=1)
    k_values: list[int] = Field(default_factory=lambda: [2, 4, 8])
    m_opt: float | None = Field(default=None, gt=0)
    n_mc: int = Field(default=100_000, ge=1)

    export_points: int = Field(default=1001, ge=2)
    out: Path | None = None
    format: OutputFormat | None = None
    threads: int = Field(default=1, ge=1)

    @field_validator("m_values", "n_values", "k_values", mode="before")
    @classmethod
    def parse_lists(cls, v: Any) -> Any:
        """Accepts range or comma-separated strings for integer lists."""
        return parse_int_list(v)

    @field_validator("m_values", "k_values")
    @classmethod
    def validate_positive(cls, v: list[int] | None) -> list[int] | None:
        """Validates that region counts are positive and the list is nonempty."""
        if v is None:
            return v
        if not v or any(k < 1 for k in v):
            raise ValueError("Region counts must be a nonempty list of integers >= 1.")
        return v

    @field_validator("n_values")
    @classmethod
    def validate_sizes(cls, v: list[int]) -> list[int]:
        """Validates that training sizes are positive."""
        if not v or any(k < 1 for k in v):
            raise ValueError("Training sizes must be a nonempty list of integers >= 1.")
        return v

    def config_hash(self) -> str:
        """SHA-256 of the canonical sorted-key JSON dump, ignoring output and parallelism settings."""
        payload = self.model_dump(mode="json", exclude={"out", "format", "threads"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
