"""Annealed Langevin sampling lab for diagonal Gaussian mixtures.

Four layers: mixtures (exact densities, scores, sampling), the
time-inhomogeneous preconditioned Langevin engine, closed-form error bounds
with summability diagnostics, and a kNN divergence estimator. The experiment
harness and CLI live in :mod:`aldlab.experiments` and :mod:`aldlab.cli`.
"""

from .spectra import SignedSpectrum, SpectrumError, SpectrumSpec
from .mixture import (
    DiagGaussian,
    DiagGMM,
    MixtureError,
    MixturePerturbation,
    apply_perturbation,
    build_truncated_mixture,
    mean_rule_to_vector,
    smooth,
)
from .engine import (
    ALDConfig,
    AnnealSchedule,
    ChainBatch,
    ChainDivergenceError,
    EngineError,
    config_digest,
    drift_exact,
    drift_ideal,
    drift_misspecified,
    em_step,
    init_exact_smoothed,
    make_schedule,
    run_chains,
)
from .bounds import (
    BoundInputs,
    BoundsError,
    BrespBound,
    ErrorBudget,
    bcomp_bound,
    bresp_upper,
    component_init_kl,
    delta1_bound,
    error_budget,
    horizon,
    init_kl_bound,
    kd_constant,
    r2_mixture_bound,
    ratio_p_moment,
    score_fourth_moment,
    tilted_params,
    tilted_score_fourth_bound,
    weight_kl,
)
from .conditions import ConditionRecord, ConditionReport, PowerLaw, condition_report
from .knn_kl import KLEstimate, KnnError, knn_distances, knn_kl

__version__ = "0.1.0"

__all__ = [
    "ALDConfig",
    "AnnealSchedule",
    "BoundInputs",
    "BoundsError",
    "BrespBound",
    "ChainBatch",
    "ChainDivergenceError",
    "ConditionRecord",
    "ConditionReport",
    "DiagGaussian",
    "DiagGMM",
    "EngineError",
    "ErrorBudget",
    "KLEstimate",
    "KnnError",
    "MixtureError",
    "MixturePerturbation",
    "PowerLaw",
    "SignedSpectrum",
    "SpectrumError",
    "SpectrumSpec",
    "apply_perturbation",
    "bcomp_bound",
    "bresp_upper",
    "build_truncated_mixture",
    "component_init_kl",
    "condition_report",
    "config_digest",
    "delta1_bound",
    "drift_exact",
    "drift_ideal",
    "drift_misspecified",
    "em_step",
    "error_budget",
    "horizon",
    "init_exact_smoothed",
    "init_kl_bound",
    "kd_constant",
    "knn_distances",
    "knn_kl",
    "make_schedule",
    "mean_rule_to_vector",
    "r2_mixture_bound",
    "ratio_p_moment",
    "run_chains",
    "score_fourth_moment",
    "smooth",
    "tilted_params",
    "tilted_score_fourth_bound",
    "weight_kl",
]
