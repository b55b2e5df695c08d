from typing import Annotated

import typer

from moequant.api import run_approx_error
from moequant.cli.utils import (
    ConfigOption,
    ConstantsModeOption,
    DistributionOption,
    ExpertGridOption,
    FormatOption,
    OutOption,
    SeedOption,
    SegmentationOption,
    TargetOption,
    run_command,
)


def approx_error(
    config: ConfigOption = None,
    m_values: ExpertGridOption = None,
    segmentation: SegmentationOption = None,
    constants_mode: ConstantsModeOption = None,
    target: TargetOption = None,
    distribution: DistributionOption = None,
    test_samples: Annotated[
        int | None, typer.Option("--test-samples", min=1, help="Noisy test points behind the empirical column.")
    ] = None,
    seed: SeedOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
) -> None:
    """Compare empirical and theoretical test error of best predictors over m."""
    run_command(
        run_approx_error,
        config,
        out,
        output_format,
        m_values=m_values,
        segmentation=segmentation,
        constants_mode=constants_mode,
        test_samples=test_samples,
        seed=seed,
        **{"target.name": target, "distribution.name": distribution},
    )
