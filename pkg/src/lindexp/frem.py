"""Full-rank exponential midpoint steppers for the Lindblad equation.

One forward step of size tau from t_n reads

    rho_half = E_n (rho_n + (tau/2) F(t_n, rho_n)) E_n^+
    rho_next = S rho_n S^+ + tau E_mid F(t_mid, rho_half) E_mid^+

with E_n = exp((tau/2) A(t_n)), E_mid = exp((tau/2) A(t_mid)) at the
midpoint t_mid = t_n + tau/2, S = E_mid^2, and F the forward dissipative
channel.  Every term is a congruence of the state or a weighted sum of
outer sandwiches, so Hermitian positive semidefinite inputs stay that way
for any step size; no eigenvalue clipping is ever applied.  The backward
stepper mirrors the structure with adjoint exponentials and the backward
channel, marching terminal data down to t = 0.  Normalized runs rescale
to unit trace after every step and record the trace the bare map produced.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import expm, hermiticity_defect, trace_norm
from .model import (
    LindbladModel,
    apply_backward_channel,
    apply_forward_channel,
    drift_operator,
)

STATE_TRACE_TOL = 1e-6


@dataclass(frozen=True)
class FremStep:
    """Output of one bare midpoint step, before any normalization."""

    half_state: np.ndarray
    full_state: np.ndarray
    trace_before_normalization: float


def frem_forward_step(model: LindbladModel, t_n: float, tau: float,
                      rho_n: np.ndarray) -> FremStep:
    """Advance the forward equation one step; two exponentials, one square."""
    if tau <= 0:
        raise ValueError("step size must be positive")
    rho_n = np.asarray(rho_n, dtype=complex)
    t_mid = t_n + 0.5 * tau
    e_n = expm(0.5 * tau * drift_operator(model, t_n))
    e_mid = expm(0.5 * tau * drift_operator(model, t_mid))

    boosted = rho_n + 0.5 * tau * apply_forward_channel(model, t_n, rho_n)
    rho_half = e_n @ boosted @ e_n.conj().T

    span = e_mid @ e_mid  # exp(tau A(t_mid)), exact square
    pumped = apply_forward_channel(model, t_mid, rho_half)
    rho_next = span @ rho_n @ span.conj().T \
        + tau * (e_mid @ pumped @ e_mid.conj().T)
    rho_next = 0.5 * (rho_next + rho_next.conj().T)
    return FremStep(rho_half, rho_next, float(np.trace(rho_next).real))


def frem_backward_step(model: LindbladModel, t_next: float, tau: float,
                       q_next: np.ndarray) -> FremStep:
    """March the adjoint equation from t_next down to t_next - tau."""
    if tau <= 0:
        raise ValueError("step size must be positive")
    q_next = np.asarray(q_next, dtype=complex)
    t_mid = t_next - 0.5 * tau
    e_next = expm(0.5 * tau * drift_operator(model, t_next))
    e_mid = expm(0.5 * tau * drift_operator(model, t_mid))

    boosted = q_next + 0.5 * tau * apply_backward_channel(model, t_next,
                                                          q_next)
    q_half = e_next.conj().T @ boosted @ e_next

    span = e_mid @ e_mid
    pumped = apply_backward_channel(model, t_mid, q_half)
    q_prev = span.conj().T @ q_next @ span \
        + tau * (e_mid.conj().T @ pumped @ e_mid)
    q_prev = 0.5 * (q_prev + q_prev.conj().T)
    return FremStep(q_half, q_prev, float(np.trace(q_prev).real))


@dataclass
class FremRun:
    """Trajectory and per-step diagnostics of a full-rank propagation."""

    times: np.ndarray
    final_state: np.ndarray
    states: list | None
    node_traces: np.ndarray
    step_traces: np.ndarray
    min_eigenvalues: np.ndarray | None
    normalized: bool
    direction: str

    @property
    def max_trace_defect(self) -> float:
        return float(np.max(np.abs(self.node_traces - 1.0)))

    @property
    def min_eigenvalue(self) -> float:
        if self.min_eigenvalues is None:
            raise ValueError("run was made without track_spectra")
        return float(np.min(self.min_eigenvalues))


def _check_run_inputs(state, T, steps):
    state = np.asarray(state, dtype=complex)
    if not isinstance(steps, (int, np.integer)) or steps < 1:
        raise ValueError("need at least one step")
    if T <= 0:
        raise ValueError("horizon must be positive")
    scale = max(1.0, float(np.linalg.norm(state)))
    if hermiticity_defect(state) > 1e-10 * scale:
        raise ValueError("state must be Hermitian")
    if abs(np.trace(state).real - 1.0) > STATE_TRACE_TOL:
        raise ValueError("state must have unit trace")
    return 0.5 * (state + state.conj().T)


def frem_forward_run(model: LindbladModel, rho0: np.ndarray, T: float,
                     steps: int, normalized: bool = True,
                     keep_trajectory: bool = True,
                     track_spectra: bool = False,
                     observer=None) -> FremRun:
    """Iterate the forward stepper on the uniform grid tau = T/steps."""
    state = _check_run_inputs(rho0, T, steps)
    tau = T / steps
    times = np.linspace(0.0, T, steps + 1)
    node_traces = np.empty(steps + 1)
    step_traces = np.empty(steps)
    min_eigs = np.empty(steps + 1) if track_spectra else None
    trajectory = [state] if keep_trajectory else None

    node_traces[0] = np.trace(state).real
    if track_spectra:
        min_eigs[0] = np.linalg.eigvalsh(state)[0]
    if observer is not None:
        observer(0, times[0], state)

    for n in range(steps):
        out = frem_forward_step(model, times[n], tau, state)
        step_traces[n] = out.trace_before_normalization
        state = out.full_state
        if normalized:
            if out.trace_before_normalization <= 0.0:
                raise RuntimeError(
                    f"normalization degenerated at step {n}: "
                    f"trace {out.trace_before_normalization}")
            state = state / out.trace_before_normalization
        node_traces[n + 1] = np.trace(state).real
        if track_spectra:
            min_eigs[n + 1] = np.linalg.eigvalsh(state)[0]
        if keep_trajectory:
            trajectory.append(state)
        if observer is not None:
            observer(n + 1, times[n + 1], state)

    return FremRun(times, state, trajectory, node_traces, step_traces,
                   min_eigs, normalized, "forward")


def frem_backward_run(model: LindbladModel, q_terminal: np.ndarray, T: float,
                      steps: int, normalized: bool = True,
                      keep_trajectory: bool = True,
                      track_spectra: bool = False,
                      observer=None) -> FremRun:
    """Iterate the backward stepper from t = T down to t = 0.

    Node arrays are indexed by grid node (entry n belongs to t_n), so the
    terminal data sits at the last index and final_state at index 0.
    """
    state = _check_run_inputs(q_terminal, T, steps)
    tau = T / steps
    times = np.linspace(0.0, T, steps + 1)
    node_traces = np.empty(steps + 1)
    step_traces = np.empty(steps)
    min_eigs = np.empty(steps + 1) if track_spectra else None
    trajectory = [None] * (steps + 1) if keep_trajectory else None

    node_traces[steps] = np.trace(state).real
    if track_spectra:
        min_eigs[steps] = np.linalg.eigvalsh(state)[0]
    if keep_trajectory:
        trajectory[steps] = state
    if observer is not None:
        observer(steps, times[steps], state)

    for n in range(steps - 1, -1, -1):
        out = frem_backward_step(model, times[n + 1], tau, state)
        step_traces[n] = out.trace_before_normalization
        state = out.full_state
        if normalized:
            if out.trace_before_normalization <= 0.0:
                raise RuntimeError(
                    f"normalization degenerated at node {n}: "
                    f"trace {out.trace_before_normalization}")
            state = state / out.trace_before_normalization
        node_traces[n] = np.trace(state).real
        if track_spectra:
            min_eigs[n] = np.linalg.eigvalsh(state)[0]
        if keep_trajectory:
            trajectory[n] = state
        if observer is not None:
            observer(n, times[n], state)

    return FremRun(times, state, trajectory, node_traces, step_traces,
                   min_eigs, normalized, "backward")


def dissipation_strength(model: LindbladModel, t0: float, t1: float) -> float:
    """sum_k (max rate on [t0, t1]) * ||L_k||_1^2, the channel Lipschitz sum."""
    norms = model.jump_trace_norms()
    peaks = np.array([g.max_on(t0, t1) for g in model.rates])
    return float(np.sum(peaks * norms ** 2))


def step_stability_factor(model: LindbladModel, tau: float, t0: float,
                          t1: float) -> float:
    """Bound on the trace-norm amplification of one bare midpoint step."""
    c = tau * dissipation_strength(model, t0, t1)
    return 1.0 + c + 0.5 * c * c


def propagation_contraction_gap(model: LindbladModel, sigma: np.ndarray,
                                t: float, s: float) -> float:
    """||sigma||_1 - ||e^{tA(s)} sigma e^{tA(s)+}||_1, nonnegative in theory."""
    e = expm(t * drift_operator(model, s))
    return trace_norm(sigma) - trace_norm(e @ sigma @ e.conj().T)
