"""Multi-target tracking with Gaussian-mixture CPHD/PHD filters and
field-of-view-robust density fusion."""

from mosaic._core import (  # noqa: F401
    BernoulliSet,
    CardinalityDistribution,
    ConfigError,
    GaussianComponent,
    GMIntensity,
    IIDClusterDensity,
    NumericError,
    __version__,
    aa_fuse,
    chi2_cdf,
    cluster_components,
    convolve_cardinality,
    corrected_mahalanobis,
    esf,
    esf_all,
    expected_cardinality,
    extract_estimates,
    gci_fuse,
    gm_evaluate,
    gm_reduce,
    load_scenario,
    map_cardinality,
    mb_cardinality,
    ospa,
    poisson_cardinality,
    robust_fuse,
    run_scenario,
)
