"""energyquant: compress a probability distribution into K representative
points under a smoothed energy distance, with a history-aware mode whose
repeated single-point solves yield a non-repeating ("aging") sampler.
"""

__version__ = "0.1.0"

from .core import (
    CompressionConfig,
    CompressionResult,
    HistoryLedger,
    NonFiniteLossError,
    compress,
    history_aware_loss,
    history_difference_measure,
    sample_next,
)
from .diagnostics import (
    allocation_counts,
    finite_difference_gradient,
    kernel_pair_sum,
    mc_energy_distance_sq,
    min_pairwise_distance,
)
from .distributions import (
    Empirical,
    GridMixture,
    StandardGaussian,
    TargetDistribution,
    TargetSpecError,
    load_empirical,
    parse_target_spec,
)
from .estimator import MeasureCompressor
from .kernel import Kernel
from .measure import (
    SignedPointMeasure,
    combine,
    distance_squared,
    distance_squared_gradient,
    uniform,
)
from .rng import SeededRng, derive_seed

__all__ = [
    "CompressionConfig",
    "CompressionResult",
    "Empirical",
    "GridMixture",
    "HistoryLedger",
    "Kernel",
    "MeasureCompressor",
    "NonFiniteLossError",
    "SeededRng",
    "SignedPointMeasure",
    "StandardGaussian",
    "TargetDistribution",
    "TargetSpecError",
    "allocation_counts",
    "combine",
    "compress",
    "derive_seed",
    "distance_squared",
    "distance_squared_gradient",
    "finite_difference_gradient",
    "history_aware_loss",
    "history_difference_measure",
    "kernel_pair_sum",
    "load_empirical",
    "mc_energy_distance_sq",
    "min_pairwise_distance",
    "parse_target_spec",
    "sample_next",
    "uniform",
    "__version__",
]
