"""Numerical laboratory for an SIS epidemic with nonlocal dispersal and a
hostile exterior.

The package discretizes the model on a midpoint quadrature grid, computes
its threshold quantities (principal eigenvalues, spectral bounds, the basic
reproduction number), constructs disease-free and endemic equilibria by
monotone iteration, and time-integrates the dynamics to check extinction
and persistence against those predictions.
"""

__version__ = "0.1.0"

from .domain import (
    CoefficientField,
    DomainSpec,
    FieldSpec,
    Grid,
    KernelSpec,
    ModelParams,
    ValidationReport,
    build_field,
    build_grid,
    kernel_mass_in_domain,
    kernel_mass_profile,
    kernel_total_mass,
    kernel_value,
    load_coefficient_table,
    sample_field_values,
    validate_instance,
)
from .dynamics import (
    FieldTrajectory,
    IntegratorConfig,
    RateEstimate,
    State,
    Trajectory,
    check_convergence,
    estimate_rate,
    integrate,
    integrate_linear_infection,
    integrate_logistic,
    integrate_total_population,
    rhs,
)
from .equilibrium import (
    EndemicPair,
    EquilibriumResult,
    solve_disease_free,
    solve_endemic,
    solve_logistic_stationary,
    write_field_csv,
)
from .errors import (
    BracketBreach,
    ConfigError,
    IntegrationFailure,
    InvalidArgumentError,
    InvalidBracketError,
    InvalidCoefficientError,
    InvalidConfigError,
    InvalidStateError,
    InvalidWindowError,
    NoEndemicState,
    NonlocalSISError,
    NoPositiveState,
    PreconditionError,
    SolverFailure,
    SolverInconsistency,
    UniquenessViolation,
)
from .experiments import (
    ExperimentConfig,
    Instance,
    RunReport,
    load_config,
    parse_config,
    random_instance,
    run_scenario,
    run_verify_suite,
    write_report,
)
from .operators import (
    DispersalMatrix,
    ReactionDispersalOperator,
    apply_dispersal,
    assemble_dispersal,
    assemble_reaction_operator,
    dump_matrix_csv,
    weighted_form,
)
from .spectral import (
    Eigenpair,
    R0Result,
    SpectralReport,
    ThresholdResult,
    basic_reproduction_number,
    compute_spectral_report,
    critical_dispersal_rate,
    dispersal_principal_eigenpair,
    extreme_eigenpair,
    infection_growth_rate,
    recovery_spectral_bound,
)
