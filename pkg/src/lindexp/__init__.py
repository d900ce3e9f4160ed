"""Positivity- and trace-preserving exponential integrators for forward
and adjoint Lindblad master equations, in full-rank and low-rank forms,
with certified reference solvers and an experiment harness."""

from .model import (
    LindbladModel,
    Signal,
    cat_state,
    initial_cat_state,
    terminal_cat_state,
    ising_chain,
    load_model,
    model_from_dict,
    random_lowrank_states,
    state_overlap,
    control_objective,
)
from .frem import (
    FremRun,
    FremStep,
    frem_forward_step,
    frem_backward_step,
    frem_forward_run,
    frem_backward_run,
)
from .lrem import (
    LremConfig,
    LremRun,
    LremStep,
    lrem_forward_step,
    lrem_backward_step,
    lrem_forward_run,
    lrem_backward_run,
    state_factor,
)
from .oracle import (
    OracleFailure,
    ReferenceCache,
    ReferenceSolution,
    reference_forward,
    reference_backward,
    check_duality,
)
from .harness import (
    ExperimentSpec,
    ExperimentReport,
    run_convergence,
    run_structure_series,
    run_lowrank_sweep,
    run_timing,
    run_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
