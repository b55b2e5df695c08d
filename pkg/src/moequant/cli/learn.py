from typing import Annotated

import typer

from moequant.api import run_learn
from moequant.cli.utils import (
    ConfigOption,
    DistributionOption,
    ExpertsOption,
    FormatOption,
    OutOption,
    SeedOption,
    SegmentationOption,
    TargetOption,
    ThreadsOption,
    run_command,
)


def learn(
    config: ConfigOption = None,
    m: ExpertsOption = None,
    n: Annotated[int | None, typer.Option("--n", "-n", min=0, help="Training set size.")] = None,
    segmentation: SegmentationOption = None,
    target: TargetOption = None,
    distribution: DistributionOption = None,
    check_bounds: Annotated[
        bool, typer.Option("--check-bounds", help="Repeat training and count concentration-bound violations.")
    ] = False,
    gamma: Annotated[float | None, typer.Option("--gamma", min=0.0, help="Deviation level of the radius.")] = None,
    delta_tilde: Annotated[
        float | None, typer.Option("--delta-tilde", help="Target failure probability of the Chernoff event.")
    ] = None,
    repeats: Annotated[int | None, typer.Option("--repeats", "-r", min=1, help="Repeated trainings.")] = None,
    threads: ThreadsOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
) -> None:
    """Fit expert constants on sampled data and decompose the test error."""
    run_command(
        lambda cfg: run_learn(cfg, check_bounds=check_bounds),
        config,
        out,
        output_format,
        m=m,
        n=n,
        segmentation=segmentation,
        gamma=gamma,
        delta_tilde=delta_tilde,
        repeats=repeats,
        threads=threads,
        seed=seed,
        **{"target.name": target, "distribution.name": distribution},
    )
