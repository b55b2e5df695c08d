from typing import Annotated

import typer

from moequant.api import run_tradeoff
from moequant.cli.utils import (
    ConfigOption,
    DistributionOption,
    ExpertGridOption,
    FormatOption,
    OutOption,
    SeedOption,
    SegmentationOption,
    TargetOption,
    ThreadsOption,
    run_command,
)


def tradeoff(
    config: ConfigOption = None,
    m_values: ExpertGridOption = None,
    n_values: Annotated[
        str | None, typer.Option("--n-values", help="Training sizes as 'a,b,c' or 'a:b[:step]'.")
    ] = None,
    repeats: Annotated[int | None, typer.Option("--repeats", "-r", min=1, help="Trainings per (m, n) pair.")] = None,
    segmentation: SegmentationOption = None,
    target: TargetOption = None,
    distribution: DistributionOption = None,
    threads: ThreadsOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
) -> None:
    """Trace mean test error of learned models against m for several training sizes."""
    run_command(
        run_tradeoff,
        config,
        out,
        output_format,
        m_values=m_values,
        n_values=n_values,
        repeats=repeats,
        segmentation=segmentation,
        threads=threads,
        seed=seed,
        **{"target.name": target, "distribution.name": distribution},
    )
