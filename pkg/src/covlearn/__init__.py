"""Covariance-learning sparse recovery for jointly sparse (MMV) signals.

Library layout:

- :mod:`covlearn.model`: covariance model, likelihood, rank-one identities
- :mod:`covlearn.sparsity`: top-K element/peak selection
- :mod:`covlearn.clbcd`: block-coordinate descent solver
- :mod:`covlearn.clomp`: greedy conditional-likelihood pursuit
- :mod:`covlearn.baselines`: comparison methods (IAA, SAMV2, SBL, ...)
- :mod:`covlearn.scenario`: experiment synthesis, metrics, Monte-Carlo engine
- :mod:`covlearn.cli`: batch benchmark runner (``covlearn run ...``)
"""

from .baselines import (
    BaselineConfig,
    cwo_update,
    iaa_update,
    matched_filter_powers,
    mle_single_source,
    msbl_em_step,
    music_doas,
    ratio_update,
    run_cwo,
    run_iaa,
    run_msbl,
    run_samv2,
    run_sbl,
    samv2_noise_update,
    somp,
)
from .clbcd import (
    ClBcdConfig,
    SolverResult,
    fp_g_noise,
    fp_gamma_update,
    relative_change,
    run_clbcd,
    run_clbcd_scm,
)
from .clomp import SweepResult, conditional_gamma_star, run_clomp, run_clomp_scm, sweep_errors
from .methods import MethodSpec, TrialOutcome, list_method_tags, solve_trial
from .model import (
    CovarianceState,
    DegenerateDowndateError,
    Dictionary,
    NumericError,
    RankDeficientError,
    atom_quadratic_forms,
    build_covariance,
    loo_quadratic_form,
    negative_llf,
    nll_gradient,
    noise_mle,
    provisional_mle,
    pseudo_inverse_apply,
    sample_covariance,
)
from .scenario import (
    MetricsRecord,
    ScenarioConfig,
    doa_rmse,
    gaussian_dictionary,
    generate_snapshots,
    grid_angles_deg,
    per_metric,
    power_nmse,
    run_monte_carlo,
    steering_matrix,
    ula_grid,
    ula_steering,
)
from .sparsity import SupportSet, hard_threshold, peak_mask

__version__ = "0.1.0"
