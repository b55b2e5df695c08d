from typing import Annotated

import typer

from moequant.api import run_mdbound
from moequant.cli.utils import (
    ConfigOption,
    ConstantsModeOption,
    DistributionOption,
    FormatOption,
    OutOption,
    SeedOption,
    TargetOption,
    run_command,
)


def mdbound(
    config: ConfigOption = None,
    d: Annotated[int | None, typer.Option("--d", "-d", min=1, help="Input dimension.")] = None,
    k_values: Annotated[
        str | None, typer.Option("--k-values", help="Boxes per axis as 'a,b,c' or 'a:b[:step]'.")
    ] = None,
    m_opt: Annotated[
        float | None, typer.Option("--m-opt", help="Normalized moment of the optimal cell. Hexagon value in d=2.")
    ] = None,
    n_mc: Annotated[int | None, typer.Option("--n-mc", min=1, help="Monte Carlo test points per grid.")] = None,
    constants_mode: ConstantsModeOption = None,
    target: TargetOption = None,
    distribution: DistributionOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
) -> None:
    """Compare multidimensional error bounds with the realized test error on uniform grids."""
    run_command(
        run_mdbound,
        config,
        out,
        output_format,
        d=d,
        k_values=k_values,
        m_opt=m_opt,
        n_mc=n_mc,
        constants_mode=constants_mode,
        seed=seed,
        **{"target.name": target, "distribution.name": distribution},
    )
