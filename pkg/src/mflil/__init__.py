"""mflil: a numerical laboratory for multifractal product measures.

The package groups five kinds of tooling around a shared model layer:

* ``models`` / ``symbolic``: coded measures on digit grids and self-similar
  attractors, with exact cylinder masses and seeded path sampling.
* ``spectrum``: scale-free pressure exponents tau(q), their derived local
  dimension and variance constants, and flatness diagnostics.
* ``lil``: normalized log-mass fluctuation ensembles, exact finite-level
  distributions, and first-passage tail probabilities.
* ``gauges``: iterated-logarithm corrected gauge functions and Monte Carlo
  mass-versus-gauge comparisons.
* ``qb``: concatenation-constant estimation, partition bound checks, and
  the absolute-continuity dichotomy verdict.

``cli`` exposes all of it as the ``mflil`` command; ``report`` holds the
independently derived reference values used to pin the test suite.
"""

from .errors import (
    BudgetError,
    FlatSpectrumError,
    MFLilError,
    NumericalError,
    ValidationError,
)
from .symbolic import Alphabet, Word, cube_length, cube_of_point, word, word_concat
from .models import (
    BernoulliProduct,
    MarkovMeasure,
    MeasureModel,
    MultinomialMeasure,
    SelfSimilarMeasure,
    SupportInfo,
    cylinder_diameter,
    cylinder_mass,
    homogeneous_measure,
    log_cylinder_diameter,
    log_cylinder_mass,
    log_symbol_weights,
    model_from_dict,
    model_to_dict,
    parse_model_file,
    path_rng,
    sample_path,
    sample_symbols,
    stationary_distribution,
    support_info,
    symbol_weights,
)
from .spectrum import (
    ChiProfile,
    LogBase,
    NotFlatResult,
    Sigma2Result,
    SpectrumTable,
    chi,
    chi_inverse,
    dimension,
    is_flat,
    log_partition_sum,
    not_flat_check,
    sigma2,
    sigma2_scale_free,
    sigma2_to_base,
    spectrum_table,
    tau,
    tau_empirical,
    tau_scale_free,
    tau_to_base,
    theta_gauge,
)
from .lil import (
    EnsembleSummary,
    LilConvention,
    PathStats,
    exact_distribution,
    exact_moments,
    lil_convention,
    lil_ratio,
    log_inverse_diameter_process,
    path_stats,
    per_symbol_moments,
    run_ensemble,
    running_max_tail,
    s_process,
)
from .gauges import (
    GaugeSpec,
    GaugeTestResult,
    GaugeValue,
    ThetaCorrection,
    gauge_test,
    gauge_value,
    lil_sigma,
    mass_gauge_fraction,
    theta_correction,
)
from .qb import (
    DichotomyResult,
    PartitionBoundReport,
    QBReport,
    dichotomy_classify,
    partition_bound_check,
    qb_constant,
)
from .zoo import ZOO_NAMES, load_zoo_model, zoo_models, zoo_text

try:
    from importlib.metadata import version as _version

    __version__ = _version("mflil")
except Exception:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "Alphabet",
    "BernoulliProduct",
    "BudgetError",
    "ChiProfile",
    "DichotomyResult",
    "EnsembleSummary",
    "FlatSpectrumError",
    "GaugeSpec",
    "GaugeTestResult",
    "GaugeValue",
    "LilConvention",
    "LogBase",
    "MFLilError",
    "MarkovMeasure",
    "MeasureModel",
    "MultinomialMeasure",
    "NotFlatResult",
    "NumericalError",
    "PartitionBoundReport",
    "PathStats",
    "QBReport",
    "SelfSimilarMeasure",
    "Sigma2Result",
    "SpectrumTable",
    "SupportInfo",
    "ThetaCorrection",
    "ValidationError",
    "Word",
    "ZOO_NAMES",
    "chi",
    "chi_inverse",
    "cube_length",
    "cube_of_point",
    "cylinder_diameter",
    "cylinder_mass",
    "dimension",
    "dichotomy_classify",
    "exact_distribution",
    "exact_moments",
    "gauge_test",
    "gauge_value",
    "homogeneous_measure",
    "is_flat",
    "lil_convention",
    "lil_ratio",
    "lil_sigma",
    "load_zoo_model",
    "log_cylinder_diameter",
    "log_cylinder_mass",
    "log_inverse_diameter_process",
    "log_partition_sum",
    "log_symbol_weights",
    "mass_gauge_fraction",
    "model_from_dict",
    "model_to_dict",
    "not_flat_check",
    "parse_model_file",
    "partition_bound_check",
    "path_rng",
    "path_stats",
    "per_symbol_moments",
    "qb_constant",
    "run_ensemble",
    "running_max_tail",
    "s_process",
    "sample_path",
    "sample_symbols",
    "sigma2",
    "sigma2_scale_free",
    "sigma2_to_base",
    "spectrum_table",
    "stationary_distribution",
    "support_info",
    "symbol_weights",
    "tau",
    "tau_empirical",
    "tau_scale_free",
    "tau_to_base",
    "theta_correction",
    "theta_gauge",
    "word",
    "word_concat",
    "zoo_models",
    "zoo_text",
]
