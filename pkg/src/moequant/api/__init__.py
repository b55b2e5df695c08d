"""Public API for the moe-quant library: experiment runners consumed by the CLI and by library users.

Every ``run_*`` function takes an ``ExperimentConfig`` and returns an
``ExperimentOutput`` holding result tables, a summary and the metadata block;
``render`` turns that into file contents.
"""

import json
from collections.abc import Callable
from enum import Enum
from logging import getLogger
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from moequant.core import approx, exporter, learning, multidim
from moequant.core.builder import make_noise, sample_dataset
from moequant.core.density import (
    optimal_density_1d,
    quantizer_density,
    segment_masses,
    segmentation_from_density,
    uniform_density,
    uniform_segmentation,
)
from moequant.core.errors import ConfigError, DimensionMismatchError
from moequant.models.config import ExperimentConfig
from moequant.models.enums import ConstantsMode, SegmentationKind
from moequant.models.formats import OutputFormat
from moequant.models.functions import InputDistribution, NoiseModel, TargetFunction
from moequant.models.numerics import RNG_ALGORITHM, RngStream
from moequant.models.reports import ExperimentOutput, ResultTable, Scalar
from moequant.models.segmentation import DensityFn, InertiaProfile, Segmentation1D

logger = getLogger(__name__)

DEFAULT_CURVE_M = tuple(range(2, 121))
CUBE_MOMENT = 1.0 / 12.0

# Stream ids below this offset belong to training repeats; evaluation draws use ids above it.
_EVALUATION_STREAM = 2**32


def load_config(
    source: ExperimentConfig | dict[str, Any] | str | Path | None = None, **overrides: Any
) -> ExperimentConfig:
    """Loads an experiment configuration and applies overrides.

    Args:
        source: A config object, a raw dictionary, a path to a JSON document, or None for defaults.
        **overrides: Values replacing config keys; None values are ignored and dotted keys
            such as ``"target.name"`` reach into nested sections.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: If the file is missing or unreadable, or validation fails.
    """
    try:
        if source is None:
            config = ExperimentConfig()
        elif isinstance(source, ExperimentConfig):
            config = source
        elif isinstance(source, dict):
            config = ExperimentConfig.model_validate(source)
        else:
            path = Path(source)
            if not path.is_file():
                raise ConfigError(f"Config file not found at: {path}")
            config = ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))

        updates = {key: value for key, value in overrides.items() if value is not None}
        if not updates:
            return config
        document = config.model_dump(mode="json", exclude_none=True)
        for key, value in updates.items():
            *parents, leaf = key.split(".")
            node = document
            for parent in parents:
                node = node.setdefault(parent, {})
            node[leaf] = str(value) if isinstance(value, Path | Enum) else value
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def _domain(config: ExperimentConfig, dim: int | None = None) -> tuple[TargetFunction, InputDistribution, NoiseModel]:
    target_spec, dist_spec = config.target, config.distribution
    if dim is not None:
        target_spec = target_spec.model_copy(update={"dim": dim})
        if dist_spec.name != "product-of-1d":
            dist_spec = dist_spec.model_copy(update={"dim": dim})
    target = target_spec.to_domain()
    dist = dist_spec.to_domain()
    if target.dim != dist.dim:
        raise DimensionMismatchError(f"Target has d={target.dim} but the distribution has d={dist.dim}")
    return target, dist, make_noise(config.noise)


def build_metadata(config: ExperimentConfig, command: str, **extra: Scalar) -> dict[str, Scalar]:
    """The metadata block recorded with every output: provenance plus all defaulted parameters."""
    from moequant import __version__

    metadata: dict[str, Scalar] = {
        "command": command,
        "library_version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "eps": config.eps,
        "grid_size": config.grid_size,
        "target": config.target.name,
        "distribution": config.distribution.name,
        "noise_kind": str(config.noise.kind),
        "noise_low": config.noise.low,
        "noise_high": config.noise.high,
        "noise_std": config.noise.std,
    }
    if config.distribution.name == "truncated-gaussian":
        metadata.update(
            {
                "truncated_gaussian_mu": config.distribution.mu,
                "truncated_gaussian_scale": config.distribution.scale,
                "truncated_gaussian_support": "[0, 1]",
            }
        )
    metadata.update(extra)
    return metadata


def _segment_density(
    kind: SegmentationKind, config: ExperimentConfig, target: TargetFunction, dist: InputDistribution
) -> DensityFn | None:
    if kind == SegmentationKind.UNIFORM:
        return None
    return optimal_density_1d(target, dist, config.eps, config.grid_size)


def _segmentation_1d(m: int, density: DensityFn | None) -> Segmentation1D:
    return uniform_segmentation(m) if density is None else segmentation_from_density(density, m)


def _records_table(name: str, records: list[dict[str, Any]]) -> ResultTable:
    columns = tuple(records[0]) if records else ()
    return ResultTable(name, columns, tuple(tuple(record.values()) for record in records))


def _mode_1d(mode: ConstantsMode) -> ConstantsMode:
    return ConstantsMode.MIDPOINT if mode == ConstantsMode.CENTER else mode


def run_density(config: ExperimentConfig) -> ExperimentOutput:
    """Optimal segment density on a grid and the m-interval segmentation it forms."""
    target, dist, _ = _domain(config, dim=1)
    density = optimal_density_1d(target, dist, config.eps, config.grid_size)
    seg = segmentation_from_density(density, config.m)
    xs, values = approx.density_grid_values(density, config.export_points)
    mass_error = float(np.max(np.abs(segment_masses(density, seg) - 1.0 / seg.m)))
    logger.info(f"Formed {seg.m} intervals from the optimal density of '{target.name}' (mass error {mass_error:.1e})")
    return ExperimentOutput(
        command="density",
        tables=(
            ResultTable.from_columns("density", {"x": xs, "lambda": values}),
            ResultTable.from_columns("segmentation", {"i": np.arange(seg.m + 1), "a_i": seg.breakpoints}),
        ),
        summary={
            "m": seg.m,
            "normalizer": density.normalizer,
            "floor_applied": density.floor_applied,
            "max_mass_error": mass_error,
            "breakpoints": seg.breakpoints.tolist(),
        },
        metadata=build_metadata(config, "density", m=config.m),
    )


def run_segment(config: ExperimentConfig) -> ExperimentOutput:
    """A segmentation with its best constants, exported as ``i, a_i, c_i``."""
    target, dist, noise = _domain(config, dim=1)
    kind = config.segmentation or SegmentationKind.OPTIMAL
    density = _segment_density(kind, config, target, dist)
    seg = _segmentation_1d(config.m, density)
    mode = _mode_1d(config.constants_mode)
    model = approx.best_model_1d(seg, target, dist, mode)
    exact = approx.test_error_exact_1d(model, target, dist, noise.variance)
    constants: list[Scalar] = [float(c) for c in model.constants]
    return ExperimentOutput(
        command="segment",
        tables=(
            ResultTable.from_columns(
                "segmentation",
                {"i": list(range(seg.m + 1)), "a_i": seg.breakpoints.tolist(), "c_i": [*constants, None]},
            ),
        ),
        summary={"m": seg.m, "segmentation": str(kind), "constants_mode": str(mode), "error": exact.to_dict()},
        metadata=build_metadata(config, "segment", m=config.m, segmentation=str(kind), constants_mode=str(mode)),
    )


def run_approx_error(config: ExperimentConfig) -> ExperimentOutput:
    """Empirical versus theoretical test error of best predictors over a range of m."""
    target, dist, noise = _domain(config, dim=1)
    sigma2 = noise.variance
    kind = config.segmentation or SegmentationKind.OPTIMAL
    m_values = config.m_values or list(DEFAULT_CURVE_M)
    density = (
        optimal_density_1d(target, dist, config.eps, config.grid_size)
        if kind == SegmentationKind.OPTIMAL
        else uniform_density(config.grid_size)
    )
    mode = _mode_1d(config.constants_mode)

    columns = ("m", "empirical", "empirical_stderr", "exact", "sum", "theoretical")
    rows: dict[str, list[Scalar]] = {column: [] for column in columns}
    for k, m in enumerate(m_values):
        seg = _segmentation_1d(m, density)
        model = approx.best_model_1d(seg, target, dist, mode)
        test = sample_dataset(dist, target, noise, config.test_samples, RngStream(config.seed, _EVALUATION_STREAM + k))
        empirical, stderr = approx.empirical_test_error(model, test.inputs, test.outputs)
        if kind == SegmentationKind.OPTIMAL:
            theory = approx.optimal_error_1d(m, target, dist, sigma2, config.eps)
        else:
            theory = approx.test_error_integral_1d(density, m, target, dist, sigma2)
        rows["m"].append(m)
        rows["empirical"].append(empirical)
        rows["empirical_stderr"].append(stderr)
        rows["exact"].append(approx.test_error_exact_1d(model, target, dist, sigma2).total)
        rows["sum"].append(approx.test_error_sum_1d(seg, target, dist, sigma2).total)
        rows["theoretical"].append(theory.total)
        logger.debug(f"m={m}: empirical {empirical:.6e}, theoretical {theory.total:.6e}")

    return ExperimentOutput(
        command="approx-error",
        tables=(ResultTable.from_columns("approx-error", rows),),
        summary={"noise_floor": sigma2, "segmentation": str(kind), "m_values": list(m_values)},
        metadata=build_metadata(
            config,
            "approx-error",
            noise_floor=sigma2,
            segmentation=str(kind),
            test_samples=config.test_samples,
            constants_mode=str(mode),
        ),
    )


def run_learn(config: ExperimentConfig, check_bounds: bool = False) -> ExperimentOutput:
    """Fits constants on one dataset and decomposes the test error; optionally checks the concentration bounds."""
    target, dist, noise = _domain(config, dim=1)
    kind = config.segmentation or SegmentationKind.UNIFORM
    density = _segment_density(kind, config, target, dist)
    seg = _segmentation_1d(config.m, density)
    dataset = sample_dataset(dist, target, noise, config.n, RngStream(config.seed, 0))
    learned = learning.fit_constants(seg, dataset)
    reference = learning.optimal_reference(seg, target, dist, noise.variance)
    report = learning.decompose(seg, learned, target, dist, noise.variance, reference)

    tables = [
        ResultTable.from_columns(
            "constants",
            {
                "i": np.arange(seg.m),
                "n_i": learned.counts.counts,
                "rho_i": reference.masses,
                "c_learned": learned.constants,
                "c_opt": reference.constants,
                "fallback": [i in learned.fallback_regions for i in range(seg.m)],
            },
        )
    ]
    summary: dict[str, Any] = {
        "m": seg.m,
        "n": dataset.n,
        "fallback_value": learned.fallback_value,
        "fallback_regions": list(learned.fallback_regions),
        "decomposition": report.to_dict(),
    }
    if check_bounds:
        bounds = learning.empirical_bound_check(
            seg,
            target,
            dist,
            noise,
            config.n,
            config.gamma,
            config.delta_tilde,
            config.repeats,
            config.seed,
            config.threads,
        )
        summary["bound_check"] = bounds.to_dict()
        tables.append(_records_table("bounds", [r.to_dict(bounds.repeats) for r in bounds.per_region]))

    return ExperimentOutput(
        command="learn",
        tables=tuple(tables),
        summary=summary,
        metadata=build_metadata(config, "learn", m=config.m, n=config.n, segmentation=str(kind)),
    )


def _argmin_per_n(points: list[learning.TradeoffPoint]) -> dict[str, int]:
    best: dict[int, learning.TradeoffPoint] = {}
    for point in points:
        if point.n not in best or point.mean_test_error < best[point.n].mean_test_error:
            best[point.n] = point
    return {str(n): point.m for n, point in sorted(best.items())}


def run_tradeoff(config: ExperimentConfig) -> ExperimentOutput:
    """Mean test error of learned models over an m-grid, one curve per training size."""
    target, dist, noise = _domain(config, dim=1)
    kind = config.segmentation or SegmentationKind.UNIFORM
    m_values = config.m_values or list(DEFAULT_CURVE_M)
    density = _segment_density(kind, config, target, dist)
    segmentations = [_segmentation_1d(m, density) for m in m_values]
    logger.info(f"Running the tradeoff over {len(m_values)} values of m and n in {config.n_values}")
    points = learning.tradeoff_curve(
        segmentations, target, dist, noise, config.n_values, config.repeats, config.seed, config.threads
    )
    table = ResultTable.from_columns(
        "tradeoff",
        {
            "m": [p.m for p in points],
            "n": [p.n for p in points],
            "mean_test_error": [p.mean_test_error for p in points],
            "stderr": [p.stderr for p in points],
            "approximation_error": [p.approximation_error for p in points],
            "estimation_error": [p.mean_estimation_error for p in points],
            "mean_empty_regions": [p.mean_empty_regions for p in points],
        },
    )
    return ExperimentOutput(
        command="tradeoff",
        tables=(table,),
        summary={"argmin_m": _argmin_per_n(points), "noise_floor": noise.variance, "segmentation": str(kind)},
        metadata=build_metadata(
            config,
            "tradeoff",
            n_values=",".join(map(str, config.n_values)),
            repeats=config.repeats,
            segmentation=str(kind),
        ),
    )


def run_quantizer(config: ExperimentConfig) -> ExperimentOutput:
    """Scalar-quantizer baseline: closed form, integral form and exact compander error per m."""
    _, dist, _ = _domain(config, dim=1)
    density = quantizer_density(dist, config.eps, config.grid_size)
    rows: dict[str, list[Scalar]] = {"m": [], "optimal": [], "integral": [], "exact": []}
    for m in config.m_values or [config.m]:
        rows["m"].append(m)
        rows["optimal"].append(approx.quantizer_error_optimal(m, dist, config.eps))
        rows["integral"].append(approx.quantizer_error_integral(density, m, dist))
        rows["exact"].append(approx.quantizer_error_exact(segmentation_from_density(density, m), dist))
    return ExperimentOutput(
        command="quantizer",
        tables=(ResultTable.from_columns("quantizer", rows),),
        summary={"m_values": rows["m"]},
        metadata=build_metadata(config, "quantizer"),
    )


def _loglog_slope(m_values: list[int], excess: list[float]) -> float | None:
    if len(m_values) < 2 or min(excess) <= 0:
        return None
    slope, _ = np.polyfit(np.log(m_values), np.log(excess), 1)
    return float(slope)


def run_mdbound(config: ExperimentConfig) -> ExperimentOutput:
    """Multidimensional error bounds on uniform k x ... x k grids against the realized test error.

    The sum and integral bounds use the uniform segment density with cube inertia;
    the minimal bound uses ``m_opt`` (the hexagon moment in d=2 by default). The exact
    column is left empty where tensor quadrature does not reach.
    """
    d = config.d
    target, dist, noise = _domain(config, dim=d)
    sigma2 = noise.variance
    m_opt = config.m_opt if config.m_opt is not None else multidim.default_m_opt(d)
    uniform = multidim.density_md_from_function(lambda points: np.ones(len(points)), d, name="uniform")
    cube = InertiaProfile(constant=CUBE_MOMENT)
    mode = config.constants_mode

    rows: dict[str, list[Scalar]] = {
        k: [] for k in ("k", "m", "d", "bound_sum", "bound_integral", "min_bound", "exact", "mc_estimate", "mc_stderr")
    }
    for j, k in enumerate(config.k_values):
        seg = multidim.grid_segmentation(d, [k] * d)
        model = multidim.best_model_md(seg, target, dist, mode)
        mc = multidim.test_error_md_mc(
            model, target, dist, noise, config.n_mc, RngStream(config.seed, _EVALUATION_STREAM + j)
        )
        exact = None
        if d <= multidim.MAX_QUADRATURE_DIM:
            exact = multidim.test_error_exact_md(model, target, dist, sigma2).total
        rows["k"].append(k)
        rows["m"].append(seg.m)
        rows["d"].append(d)
        rows["bound_sum"].append(multidim.error_bound_sum_md(seg, target, dist, sigma2).total)
        rng = RngStream(config.seed, j)
        integral = multidim.error_bound_integral_md(uniform, cube, seg.m, target, dist, sigma2, rng)
        rows["bound_integral"].append(integral.total)
        rows["min_bound"].append(multidim.min_bound_md(seg.m, d, m_opt, target, dist, sigma2, config.eps).total)
        rows["exact"].append(exact)
        rows["mc_estimate"].append(mc.mean)
        rows["mc_stderr"].append(mc.stderr)
        logger.info(f"k={k} (m={seg.m}): bound {rows['bound_sum'][-1]:.6e}, Monte Carlo {mc.mean:.6e}")

    m_list = [int(m) for m in rows["m"] if m is not None]
    excess = [float(b) - sigma2 for b in rows["bound_sum"] if b is not None]
    return ExperimentOutput(
        command="mdbound",
        tables=(ResultTable.from_columns("mdbound", rows),),
        summary={"d": d, "m_opt": m_opt, "noise_floor": sigma2, "loglog_slope": _loglog_slope(m_list, excess)},
        metadata=build_metadata(config, "mdbound", d=d, m_opt=m_opt, n_mc=config.n_mc, constants_mode=str(mode)),
    )


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentOutput]] = {
    "density": run_density,
    "segment": run_segment,
    "approx-error": run_approx_error,
    "learn": run_learn,
    "tradeoff": run_tradeoff,
    "quantizer": run_quantizer,
    "mdbound": run_mdbound,
}


def render(output: ExperimentOutput, output_format: OutputFormat) -> dict[str, str]:
    """Renders an experiment output into file contents keyed by table name.

    JSON gives one document under the key ``""``. CSV gives the first table under ``""``
    and every further table under its own name, each headed by the metadata block.
    """
    if output_format == OutputFormat.JSON:
        return {"": exporter.to_json(output)}
    if not output.tables:
        summary = json.dumps(output.summary, indent=2, default=str)
        return {"": exporter.format_metadata(output.metadata) + summary + "\n"}
    first, *rest = output.tables
    files = {"": exporter.to_csv(first, output.metadata)}
    files.update({table.name: exporter.to_csv(table, output.metadata) for table in rest})
    return files


def sibling_path(path: Path, table: str) -> Path:
    """``results.csv`` -> ``results.<table>.csv``; the primary file keeps its name."""
    return path if not table else path.with_name(f"{path.stem}.{table}{path.suffix or '.csv'}")


__all__ = [
    "RUNNERS",
    "build_metadata",
    "load_config",
    "render",
    "run_approx_error",
    "run_density",
    "run_learn",
    "run_mdbound",
    "run_quantizer",
    "run_segment",
    "run_tradeoff",
    "sibling_path",
]
