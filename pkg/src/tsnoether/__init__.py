"""Calculus, optimal control and Noether-type conservation laws on time scales."""

from .calculus import GridFunction, cumulative_integral, delta_derivative, delta_integral, sigma_shift
from .expr import Dual, Expr, evaluate, parse, partial
from .extremal import (
    ExtremalReport,
    SweepOptions,
    adjoint_backward,
    forward_backward_sweep,
    solve_stationarity,
    verify_extremal,
)
from .noether import (
    ConservationReport,
    Generators,
    TransformationFamily,
    check_invariance,
    check_invariance_state_only,
    check_invariance_time_state,
    conserved_quantity_state_only,
    conserved_quantity_time_state,
    generators_at_zero,
    time_translation,
)
from .ocp import (
    ControlProblem,
    Extremal,
    admissibility_residual,
    cost,
    hamiltonian,
    hamiltonian_rho,
    make_problem,
    regularity_check,
    simulate,
)
from .timescale import TimeScale, kappa, make_explicit, make_qscale, make_uniform, parse_scale

__version__ = "0.1.0"
