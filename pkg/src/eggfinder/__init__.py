"""Exogenous-variable search in linear non-Gaussian acyclic models.

The central estimator is :class:`EggFinder`: repeatedly select the most
non-Gaussian surviving variable as an exogenous candidate, then drop every
variable significantly correlated with a candidate under per-round FDR
control. The package also ships the synthetic model generator and the
benchmark protocols used to evaluate the method.
"""

from .bench import (
    PrecisionRecallRecord,
    ScalingSummary,
    TopMCurve,
    experiment1,
    experiment2,
    lower_median,
    read_curves_csv,
    read_records_csv,
    top_m_percentages,
    write_curves_csv,
    write_manifest,
    write_records_csv,
)
from .data import DataMatrix, load_csv, load_group_labels, save_csv
from .exceptions import (
    ConstantColumnWarning,
    CsvFormatError,
    DegenerateSeries,
    EggFinderError,
    InvalidPValue,
    LabelLengthMismatch,
    SingularParentContribution,
    TooFewObservations,
    TooManyEdges,
)
from .finder import (
    BootstrapReport,
    EggFinder,
    IterationTrace,
    bootstrap_selection,
    flag_significant,
)
from .nongauss import (
    GAUSSIAN_REFERENCE_ROBUST_EXP,
    NonGaussianityScore,
    StandardizedSeries,
    gaussian_reference_constant,
    nongaussianity,
    rank_by_nongaussianity,
    standardize,
)
from .stats import (
    CorrelationTestResult,
    FdrDecision,
    bh_fdr,
    correlation_test,
    group_mean_center,
    welch_t_test,
)
from .synth import (
    CausalModel,
    Dag,
    ExternalInfluenceSpec,
    assign_coefficients,
    generate,
    load_model,
    model_covariance,
    random_dag,
    random_model,
    sample_dataset,
    sample_external_influence,
    save_model,
    theoretical_term_std,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapReport",
    "CausalModel",
    "ConstantColumnWarning",
    "CorrelationTestResult",
    "CsvFormatError",
    "Dag",
    "DataMatrix",
    "DegenerateSeries",
    "EggFinder",
    "EggFinderError",
    "ExternalInfluenceSpec",
    "FdrDecision",
    "GAUSSIAN_REFERENCE_ROBUST_EXP",
    "InvalidPValue",
    "IterationTrace",
    "LabelLengthMismatch",
    "NonGaussianityScore",
    "PrecisionRecallRecord",
    "ScalingSummary",
    "SingularParentContribution",
    "StandardizedSeries",
    "TooFewObservations",
    "TooManyEdges",
    "TopMCurve",
    "assign_coefficients",
    "bh_fdr",
    "bootstrap_selection",
    "correlation_test",
    "experiment1",
    "experiment2",
    "flag_significant",
    "gaussian_reference_constant",
    "generate",
    "group_mean_center",
    "load_csv",
    "load_group_labels",
    "load_model",
    "lower_median",
    "model_covariance",
    "nongaussianity",
    "random_dag",
    "random_model",
    "rank_by_nongaussianity",
    "read_curves_csv",
    "read_records_csv",
    "sample_dataset",
    "sample_external_influence",
    "save_csv",
    "save_model",
    "standardize",
    "theoretical_term_std",
    "top_m_percentages",
    "welch_t_test",
    "write_curves_csv",
    "write_manifest",
    "write_records_csv",
]
