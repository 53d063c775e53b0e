"""Partial copulas of trivariate models.

Construction of conditional and partial copulas (closed form and quadrature),
their dependence measures, conditional-inversion sampling with CPITs, and the
joint-vs-stepwise maximum-likelihood experiment, with a verification CLI.
"""

from .errors import (
    DegenerateResiduals,
    DensityUnavailable,
    EvaluationAtBoundary,
    NonConvergent,
    NonpositiveDensity,
    OptimizerDiverged,
    ParameterOutOfRange,
    PartialCopError,
    RootNotBracketed,
    SingularDesign,
    UnsupportedFamily,
)
from .families import (
    AmhCopula,
    BivariateCopula,
    ClaytonCopula,
    ClaytonTrivariate,
    ComonotoneCopula,
    Family,
    FamilySpec,
    FgmCopula,
    FgmTrivariate,
    FrankCopula,
    FrankTrivariate,
    GaussianCopula,
    GaussianTrivariate,
    PolyCETrivariate,
    PolyPerturbationCopula,
    ProductCopula,
    TrivariateCopula,
    cdf3,
    debye1,
    debye2,
    frank_kendall_tau,
    frank_spearman_rho,
    frank_tau_to_theta,
    hfunc,
    hfunc_inv,
    make_copula,
    pdf3,
    validate,
)
from .fitting import (
    ExperimentReport,
    FitResult,
    MLModel,
    fit_joint,
    fit_stepwise,
    joint_vs_stepwise_experiment,
    mean_loglik,
    sample_ml_dataset,
)
from .measures import (
    DependenceSummary,
    cond_corr_profile,
    conditional_measure_curve,
    dependence_summary,
    expected_conditional_measure,
    kendall_tau,
    partial_correlation,
    spearman_rho,
    tail_coefficient,
)
from .partial import (
    AssociativityResult,
    ConditionalFamily,
    PartialCopula,
    associativity_check,
    conditional_copula,
    kl_divergence,
    l2_projection_bruteforce,
    l2_projection_fgm,
    partial_cdf,
    partial_copula,
    partial_pdf,
)
from .quadrature import QuadratureRule, gauss_rule
from .sampling import (
    ConditionalIndependenceDemo,
    SampleSet,
    conditional_independence_demo,
    cpit,
    empirical_copula,
    empirical_copula_grid,
    empirical_copula_sup_distance,
    ks_uniform_stat,
    make_rng,
    sample_trivariate,
    uniformity_ok,
)
from .verify import CheckResult, run_verification

__version__ = "0.1.0"
