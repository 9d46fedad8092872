"""Archimedean survival-copula models with Yang-Prentice marginal regressions.

Bivariate AMH, Clayton, Frank, Gumbel-Hougaard and Joe copulas join two
censored margins, each a Yang-Prentice regression (with PH and PO as special
cases) over a Weibull, Bernstein-polynomial or piecewise-exponential baseline.
"""

__version__ = "0.1.0"

from .baselines import (
    Baseline,
    BaselineDomainError,
    bernstein,
    exp_weibull,
    piecewise_exponential,
    structural_size,
    weibull,
)
from .copulas import Copula, CopulaDomainError, Family, UnattainableTauError, kendall_tau, tau_inverse
from .crossing import NoCrossingError, bootstrap_crossing, crossing_point, run_crossing_study, true_crossing
from .estimation import FitOptions, FitResult, aic, fit, fit_nested, lr_test, tau_with_interval
from .likelihood import BaselineKind, Model, ModelSpec, ParamSet, SurvivalData, total_loglik
from .regression import RegressionClass, RegressionSpec
from .simulation import Scenario, generate_dataset, mc_statistics, replica_rngs, run_lr_study, run_mc

__all__ = [
    "Baseline",
    "BaselineDomainError",
    "BaselineKind",
    "Copula",
    "CopulaDomainError",
    "Family",
    "FitOptions",
    "FitResult",
    "Model",
    "ModelSpec",
    "NoCrossingError",
    "ParamSet",
    "RegressionClass",
    "RegressionSpec",
    "Scenario",
    "SurvivalData",
    "UnattainableTauError",
    "aic",
    "bernstein",
    "bootstrap_crossing",
    "crossing_point",
    "exp_weibull",
    "fit",
    "fit_nested",
    "generate_dataset",
    "kendall_tau",
    "lr_test",
    "mc_statistics",
    "piecewise_exponential",
    "replica_rngs",
    "run_crossing_study",
    "run_lr_study",
    "run_mc",
    "structural_size",
    "tau_inverse",
    "tau_with_interval",
    "total_loglik",
    "true_crossing",
    "weibull",
]
