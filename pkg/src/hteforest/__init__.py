"""Heterogeneous treatment effect estimation and evaluation with honest forests."""

__version__ = "0.1.0"

from .blp import BlpResult, best_linear_projection, modifier_correlations
from .cate import (
    CausalForestModel,
    fit_causal_forest,
    predict_cate,
    predict_cate_oob,
    prescreen_covariates,
)
from .data import (
    Dataset,
    DgpSpec,
    SplitIndices,
    load_csv,
    save_csv,
    simulate,
    split_train_test,
)
from .effects import (
    AteResult,
    DrScores,
    ate_aipw,
    compute_dr_scores,
    difference_in_means,
    group_ates,
)
from .evaluation import (
    AutocTest,
    CurveResult,
    PriorityRule,
    autoc_difference_test,
    autoc_test,
    fit_risk_model,
    qini_curve,
    toc_curve,
)
from .forest import (
    Forest,
    ForestConfig,
    ImportanceReport,
    Tree,
    fit_regression_forest,
    forest_from_dict,
    forest_to_dict,
    load_forest,
    predict,
    predict_oob,
    save_forest,
    variable_importance,
)
from .nuisance import (
    NuisanceEstimates,
    OverlapReport,
    estimate_nuisances,
    overlap_report,
)

__all__ = [
    "AteResult",
    "AutocTest",
    "BlpResult",
    "CausalForestModel",
    "CurveResult",
    "Dataset",
    "DgpSpec",
    "DrScores",
    "Forest",
    "ForestConfig",
    "ImportanceReport",
    "NuisanceEstimates",
    "OverlapReport",
    "PriorityRule",
    "SplitIndices",
    "Tree",
    "ate_aipw",
    "autoc_difference_test",
    "autoc_test",
    "best_linear_projection",
    "compute_dr_scores",
    "difference_in_means",
    "estimate_nuisances",
    "fit_causal_forest",
    "fit_regression_forest",
    "fit_risk_model",
    "forest_from_dict",
    "forest_to_dict",
    "group_ates",
    "load_csv",
    "load_forest",
    "modifier_correlations",
    "overlap_report",
    "predict",
    "predict_cate",
    "predict_cate_oob",
    "predict_oob",
    "prescreen_covariates",
    "qini_curve",
    "save_csv",
    "save_forest",
    "simulate",
    "split_train_test",
    "toc_curve",
    "variable_importance",
]
