"""Bootstrap inference for high-dimensional weakly dependent time series."""

from hdts.blockcore import (
    BlockScheme,
    BlockSums,
    BootstrapDistribution,
    StatisticKind,
    block_sums_bigsmall,
    block_sums_centered,
    make_scheme_bigsmall,
    make_scheme_single,
    multiplier_bootstrap,
    nonoverlap_block_bootstrap,
)
from hdts.blocksize import BlockSizeReport, select_block_size
from hdts.dgp import DgpConfig, ErrorCase, Model, simulate
from hdts.estimators import (
    AutocovarianceTest,
    BandednessTest,
    BlockSizeSelector,
    UniformConfidenceBand,
    WhiteNoiseTest,
)
from hdts.gausslab import (
    ArchFig1,
    GaussianAnalog,
    MaxStatSample,
    estimate_kolmogorov_distance,
    pp_curve,
    sample_max_stat,
)
from hdts.harness import PRESETS, ExperimentConfig, load_config, run_experiment, write_outputs
from hdts.linstat import (
    InfluenceSpec,
    SpectralMeanSpec,
    autocov_spec,
    linstat_test,
    linstat_test_blockboot,
    mean_spec,
    spectral_mean_estimate,
    spectral_mean_influence,
    studentized_variant,
)
from hdts.numerics import RngStream
from hdts.procedures import (
    ConfidenceBand,
    TestResult,
    autocov_structure_test,
    bandedness_test,
    uniform_confidence_band,
    white_noise_test,
)

__version__ = "0.1.0"
