"""Stochastic contact Hamiltonian integrators and structure diagnostics."""

from .core import (
    ContactSystem,
    OscillatorParams,
    PhaseState,
    check_partials,
    constant_omega,
    contact_form,
    eval_diffusion,
    eval_drift,
    free_particle,
    make_oscillator,
)
from .diagnostics import (
    ContactReport,
    ConvergenceReport,
    FlowJacobian,
    conformal_reference,
    contact_residuals,
    convergence_study,
    flow_jacobian,
    ms_error,
    order_fit,
)
from .hj import HJConfig, HJState, coeff_step, hj_step, sensitivity_step
from .integrators import SchemeId, SchemeOptions, Trajectory, em_step, herglotz_step, integrate
from .noise import BrownianPath, MultiIndex, generate, increment, refine, stratonovich_j
from .oracle import OracleConfig, deterministic_exact, pathwise_reference

__version__ = "0.1.0"
