"""Adaptive density estimation on the unit sphere with a needlet frame.

The package builds a tight frame of localized zonal functions over dyadic
levels, provides exact and sampled coefficient analysis, and implements a
thresholding density estimator with honest confidence intervals, plus the
replicated experiments that exercise its convergence behavior.
"""

from .checks import format_results, run_checks
from .cubature import build_rule
from .densities import (
    Cusp,
    SelfSimilar,
    Uniform,
    VmfMixture,
    make_self_similar,
    model_from_spec,
    sample_density,
    sup_norm,
)
from .estimators import (
    EstimatorConfig,
    apply_threshold,
    choose_J,
    choose_linear_J,
    confidence_interval,
    estimate_report,
    kappa,
    linear_estimate,
    make_config,
    plug_in_sup,
    sigma_hat,
    survivors,
    threshold_estimate,
    with_survivor_w,
)
from .experiments import (
    ExperimentPlan,
    fit_slope,
    load_table,
    persist,
    run_bernstein,
    run_coverage,
    run_decay,
    run_rates,
)
from .figures import render_record
from .frame import (
    CoefficientTable,
    NeedletFrame,
    analyze_function,
    analyze_sample,
    analyze_zonal,
    build_frame,
    evaluation_indices,
    frame_norms,
    lowpass_zonal_value,
    psi_eval,
    psi_values,
    synthesize,
)
from .sphere import SphereDim, rng_stream, sample_uniform, unit_vector
from .windows import WindowPair, certify_floor, eval_a, eval_b

__version__ = "0.1.0"

__all__ = [
    "CoefficientTable",
    "Cusp",
    "EstimatorConfig",
    "ExperimentPlan",
    "NeedletFrame",
    "SelfSimilar",
    "SphereDim",
    "Uniform",
    "VmfMixture",
    "WindowPair",
    "analyze_function",
    "analyze_sample",
    "analyze_zonal",
    "apply_threshold",
    "build_frame",
    "build_rule",
    "certify_floor",
    "choose_J",
    "choose_linear_J",
    "confidence_interval",
    "estimate_report",
    "eval_a",
    "eval_b",
    "evaluation_indices",
    "fit_slope",
    "format_results",
    "frame_norms",
    "kappa",
    "linear_estimate",
    "load_table",
    "lowpass_zonal_value",
    "make_config",
    "make_self_similar",
    "model_from_spec",
    "persist",
    "plug_in_sup",
    "psi_eval",
    "psi_values",
    "render_record",
    "rng_stream",
    "run_bernstein",
    "run_checks",
    "run_coverage",
    "run_decay",
    "run_rates",
    "sample_density",
    "sample_uniform",
    "sigma_hat",
    "sup_norm",
    "survivors",
    "synthesize",
    "threshold_estimate",
    "unit_vector",
    "with_survivor_w",
    "__version__",
]
