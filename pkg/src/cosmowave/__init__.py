"""Numerical laboratory for wave equations with time-dependent speed.

The package studies u_tt - a(t)^2 Lap(u) +/- b(t) u_t = F(u, u_t, grad u)
for the named coefficient families (polynomially or exponentially
expanding and contracting backgrounds, plus tabulated profiles): regime
classification, a finite-difference solver with blow-up detection, a
reduced scalar blow-up oracle, and epsilon-sweep scaling experiments.
"""

__version__ = "0.1.0"

from .coefficients import (  # noqa: F401
    AntiDeSitter,
    Custom,
    DeSitter,
    FlrwContracting,
    FlrwExpanding,
    Integrability,
    PowerSpeed,
    SignConvention,
    TailClass,
    a_pm1_integrable,
    alpha_sup,
    beta_inf,
    big_A,
    big_A_pm1,
    check_dissipative,
    eval_coeffs,
    profile_from_dict,
)
from .errors import CosmowaveError  # noqa: F401
from .experiments import (  # noqa: F401
    Engine,
    SweepPoint,
    SweepResult,
    compare_to_theory,
    fit_log_law,
    fit_power_law,
    run_sweep,
    verify_integral_bound,
)
from .ode_oracle import (  # noqa: F401
    OdeProblem,
    ScalarOde,
    bernoulli_blowup_time,
    integrate_reduced_ode,
    log_identity_check,
    w_lower_bound,
)
from .pde_solver import (  # noqa: F401
    GridConfig,
    InitialData,
    Nonlinearity,
    Outcome,
    ProblemSpec,
    SmoothBump,
    StopRule,
    energy,
    estimate_blowup_time,
    init_state,
    run,
    step,
    support_radius,
    w_functional,
)
from .theory import (  # noqa: F401
    FKind,
    LawForm,
    LifespanLaw,
    RegimeReport,
    Verdict,
    classify,
    critical_exponent,
    predicted_lifespan_lower,
    predicted_lifespan_upper,
)
