from typing import Annotated

import typer

from moequant.api import run_density
from moequant.cli.utils import (
    ConfigOption,
    DistributionOption,
    ExpertsOption,
    FormatOption,
    OutOption,
    SeedOption,
    TargetOption,
    run_command,
)


def density(
    config: ConfigOption = None,
    m: ExpertsOption = None,
    target: TargetOption = None,
    distribution: DistributionOption = None,
    eps: Annotated[float | None, typer.Option("--eps", help="Floor applied before the cube root.")] = None,
    grid_size: Annotated[
        int | None, typer.Option("--grid-size", min=3, help="Nodes of the cumulative table used for inversion.")
    ] = None,
    export_points: Annotated[
        int | None, typer.Option("--points", min=2, help="Grid points of the exported density curve.")
    ] = None,
    seed: SeedOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
) -> None:
    """Export the optimal segment density and the segmentation it forms."""
    run_command(
        run_density,
        config,
        out,
        output_format,
        m=m,
        eps=eps,
        grid_size=grid_size,
        export_points=export_points,
        seed=seed,
        **{"target.name": target, "distribution.name": distribution},
    )
