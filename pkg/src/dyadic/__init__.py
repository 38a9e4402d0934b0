"""Dyadic (KP-type) shell models of the Euler equations.

Simulation, Sobolev and flux diagnostics, blow-up certificates and
self-similar profiles for

    da_j/dt = alpha (lam^j a_{j-1}^2 - lam^{j+1} a_j a_{j+1})
            + beta (lam^j a_{j-1} a_j - lam^{j+1} a_{j+1}^2)
            - nu lam^(2 gamma j) a_j + f0 [j = 0]

on shells ``j = 0..J-1`` with ``a_{-1} = a_J = 0``.
"""

from .certificate import (
    Certificate,
    EmptyAdmissibleSet,
    Interval,
    admissible_w,
    beta_max,
    beta_max_closed_form,
    check_initial_data,
    make_certificate,
    optimal_eta,
    theta_window,
    transfer_margin,
)
from .diagnostics import (
    energy,
    energy_flux,
    positivity_margin,
    riccati_residual,
    sobolev_norm,
    total_energy_rate,
    truncated_energy,
    weighted_functionals,
)
from .integrator import (
    BLOWUP_PROXIES,
    BlowupEstimate,
    NoBlowupTrend,
    StepControl,
    StopCondition,
    Termination,
    Trajectory,
    estimate_blowup_time,
    integrate,
    step,
)
from .model import (
    LAMBDA_3D,
    LAMBDA_DEFAULT,
    ForcingSpec,
    GenericModelCoefficients,
    ModelParams,
    NonFiniteStateError,
    RescaledState,
    ShellState,
    classify_conservative_model,
    from_rescaled,
    rhs,
    rhs_rescaled,
    to_rescaled,
)
from .selfsimilar import (
    ProfileClass,
    SelfSimilarProfile,
    decay_ratio,
    eval_solution,
    forced_fixed_point,
    kp_residual,
    profile_sequence,
    shoot_c0,
)

__version__ = "0.1.0"
