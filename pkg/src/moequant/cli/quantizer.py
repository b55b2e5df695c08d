from moequant.api import run_quantizer
from moequant.cli.utils import (
    ConfigOption,
    DistributionOption,
    ExpertGridOption,
    ExpertsOption,
    FormatOption,
    OutOption,
    run_command,
)


def quantizer(
    config: ConfigOption = None,
    m: ExpertsOption = None,
    m_values: ExpertGridOption = None,
    distribution: DistributionOption = None,
    out: OutOption = None,
    output_format: FormatOption = None,
) -> None:
    """Report the scalar-quantizer baseline error of an input distribution."""
    run_command(
        run_quantizer, config, out, output_format, m=m, m_values=m_values, **{"distribution.name": distribution}
    )
