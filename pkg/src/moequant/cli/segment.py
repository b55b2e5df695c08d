from moequant.api import run_segment
from moequant.cli.utils import (
    ConfigOption,
    ConstantsModeOption,
    DistributionOption,
    ExpertsOption,
    FormatOption,
    OutOption,
    SeedOption,
    SegmentationOption,
    TargetOption,
    run_command,
)


def segment(
    config: ConfigOption = None,
    m: ExpertsOption = None,
    segmentation: SegmentationOption = None,
    constants_mode: ConstantsModeOption = None,
    target: TargetOption = None,
    distribution: DistributionOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
) -> None:
    """Export breakpoints and best expert constants as i, a_i, c_i."""
    run_command(
        run_segment,
        config,
        out,
        output_format,
        m=m,
        segmentation=segmentation,
        constants_mode=constants_mode,
        seed=seed,
        **{"target.name": target, "distribution.name": distribution},
    )
