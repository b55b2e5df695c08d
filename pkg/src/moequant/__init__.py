"""moe-quant: high-rate quantization analysis of zero-compute 1-sparse mixture-of-experts regression."""

__version__ = "0.1.0"

from moequant.api import (  # noqa: E402
    load_config,
    run_approx_error,
    run_density,
    run_learn,
    run_mdbound,
    run_quantizer,
    run_segment,
    run_tradeoff,
)
from moequant.core.builder import make_input_dist, make_target, sample_dataset  # noqa: E402
from moequant.core.density import optimal_density_1d, segmentation_from_density  # noqa: E402
from moequant.core.learning import decompose, fit_constants  # noqa: E402

__all__ = [
    "__version__",
    "decompose",
    "fit_constants",
    "load_config",
    "make_input_dist",
    "make_target",
    "optimal_density_1d",
    "run_approx_error",
    "run_density",
    "run_learn",
    "run_mdbound",
    "run_quantizer",
    "run_segment",
    "run_tradeoff",
    "sample_dataset",
    "segmentation_from_density",
]
