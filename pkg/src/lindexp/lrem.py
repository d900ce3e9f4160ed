"""Low-rank exponential midpoint steppers operating on state factors.

The density matrix never appears: a step maps a factor X with rho = X X^+
to the next one through five stages, compressing after each concatenation
with an energy-budgeted truncated SVD and applying exponentials of the
drift through tolerance-controlled actions:

    1. channel blocks  G~ = [sqrt(tau gamma_k(t_n)) L_k X]_k,  compress;
    2. half step       X~ = exp((tau/2) A(t_n)) [X, sqrt(1/2) G],  compress;
    3. midpoint blocks G~' from the half-step factor at t_n + tau/2,  compress;
    4. full step       X~' = [exp(tau A_mid) X, exp((tau/2) A_mid) G'],
       compress;
    5. normalize to unit Frobenius norm.

Positivity holds by representation and Tr(X X^+) = 1 exactly after every
step.  Each of the four truncations gets the full per-stage tolerance;
channels with zero rate contribute no columns.  The backward stepper
mirrors the stages with adjoint operators and marches terminal factors
down to t = 0.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .linalg import expm_action, frobenius_norm, hconcat, truncate_svd
from .model import LindbladModel, drift_operator, scaled_jump_products

FACTOR_NORM_TOL = 1e-9


@dataclass(frozen=True)
class LremConfig:
    """Tolerances for compression (epsilon1) and exponential actions
    (epsilon2).

    With tolerance_scaling the per-step budgets are tau * epsilon; this is
    the regime the second-order error bound assumes.  max_rank caps every
    compression, recording energy beyond the epsilon1 budget as a
    violation instead of failing.
    """

    epsilon1: float = 0.0
    epsilon2: float = 0.0
    tolerance_scaling: bool = False
    max_rank: int | None = None
    dense_threshold: int = 64

    def __post_init__(self):
        if self.epsilon1 < 0:
            raise ValueError("epsilon1 must be nonnegative")
        if not 0.0 <= self.epsilon2 < 1.0:
            raise ValueError("epsilon2 must lie in [0, 1)")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError("max_rank must be at least 1")

    def effective(self, tau: float) -> tuple:
        if self.tolerance_scaling:
            return tau * self.epsilon1, tau * self.epsilon2
        return self.epsilon1, self.epsilon2


@dataclass(frozen=True)
class LremStep:
    """One factor update with its compression diagnostics.

    stage_columns holds the pre-compression widths of the four
    concatenations, in stage order.
    """

    factor: np.ndarray
    rank: int
    prenorm_trace: float
    discarded_energy: float
    eps1_excess: float
    stage_columns: tuple


def _compress(x: np.ndarray, tolerance: float, max_rank):
    out = truncate_svd(x, tolerance)
    factor, discarded, excess = out.factor, out.discarded_energy, 0.0
    if max_rank is not None and out.rank > max_rank:
        # factor columns carry the singular values, largest first
        dropped = float(np.sum(np.abs(factor[:, max_rank:]) ** 2))
        factor = factor[:, :max_rank]
        discarded += dropped
        excess = dropped
    return factor, discarded, excess


def _check_factor(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("factor must be a matrix with at least one column")
    if abs(frobenius_norm(x) - 1.0) > FACTOR_NORM_TOL:
        raise ValueError("factor must have unit Frobenius norm")
    return x


def _channel_blocks(model, t, x, tau, adjoint):
    blocks = scaled_jump_products(model, t, x, tau, adjoint=adjoint)
    if not blocks:
        return np.zeros((x.shape[0], 0), dtype=complex)
    return hconcat(blocks)


def _finish(x_hat, stage_columns, discarded, excess) -> LremStep:
    norm = frobenius_norm(x_hat)
    if x_hat.shape[1] == 0 or norm == 0.0:
        raise RuntimeError("factor degenerated to zero under compression")
    factor = x_hat / norm
    return LremStep(factor, factor.shape[1], norm * norm, discarded, excess,
                    stage_columns)


def lrem_forward_step(model: LindbladModel, t_n: float, tau: float,
                      x_n: np.ndarray, cfg: LremConfig) -> LremStep:
    """Advance a forward factor one step; three exponential actions."""
    if tau <= 0:
        raise ValueError("step size must be positive")
    x_n = _check_factor(x_n)
    eps1, eps2 = cfg.effective(tau)
    t_mid = t_n + 0.5 * tau
    a_n = drift_operator(model, t_n)
    a_mid = drift_operator(model, t_mid)

    g_tilde = _channel_blocks(model, t_n, x_n, tau, adjoint=False)
    g_n, d1, v1 = _compress(g_tilde, eps1, cfg.max_rank)

    half_input = x_n
    if g_n.shape[1]:
        half_input = hconcat([x_n, np.sqrt(0.5) * g_n])
    x_tilde_half = expm_action(0.5 * tau * a_n, half_input, eps2,
                               cfg.dense_threshold)
    x_half, d2, v2 = _compress(x_tilde_half, eps1, cfg.max_rank)

    g_tilde_mid = _channel_blocks(model, t_mid, x_half, tau, adjoint=False)
    g_mid, d3, v3 = _compress(g_tilde_mid, eps1, cfg.max_rank)

    parts = [expm_action(tau * a_mid, x_n, eps2, cfg.dense_threshold)]
    if g_mid.shape[1]:
        parts.append(expm_action(0.5 * tau * a_mid, g_mid, eps2,
                                 cfg.dense_threshold))
    x_tilde_next = hconcat(parts)
    x_hat, d4, v4 = _compress(x_tilde_next, eps1, cfg.max_rank)

    columns = (g_tilde.shape[1], half_input.shape[1], g_tilde_mid.shape[1],
               x_tilde_next.shape[1])
    return _finish(x_hat, columns, d1 + d2 + d3 + d4, v1 + v2 + v3 + v4)


def lrem_backward_step(model: LindbladModel, t_next: float, tau: float,
                       y_next: np.ndarray, cfg: LremConfig) -> LremStep:
    """March an adjoint factor from t_next down to t_next - tau."""
    if tau <= 0:
        raise ValueError("step size must be positive")
    y_next = _check_factor(y_next)
    eps1, eps2 = cfg.effective(tau)
    t_mid = t_next - 0.5 * tau
    a_next = drift_operator(model, t_next)
    a_mid = drift_operator(model, t_mid)

    w_tilde = _channel_blocks(model, t_next, y_next, tau, adjoint=True)
    w_next, d1, v1 = _compress(w_tilde, eps1, cfg.max_rank)

    half_input = y_next
    if w_next.shape[1]:
        half_input = hconcat([y_next, np.sqrt(0.5) * w_next])
    y_tilde_half = expm_action((0.5 * tau * a_next).conj().T, half_input,
                               eps2, cfg.dense_threshold)
    y_half, d2, v2 = _compress(y_tilde_half, eps1, cfg.max_rank)

    w_tilde_mid = _channel_blocks(model, t_mid, y_half, tau, adjoint=True)
    w_mid, d3, v3 = _compress(w_tilde_mid, eps1, cfg.max_rank)

    parts = [expm_action((tau * a_mid).conj().T, y_next, eps2,
                         cfg.dense_threshold)]
    if w_mid.shape[1]:
        parts.append(expm_action((0.5 * tau * a_mid).conj().T, w_mid, eps2,
                                 cfg.dense_threshold))
    y_tilde_prev = hconcat(parts)
    y_hat, d4, v4 = _compress(y_tilde_prev, eps1, cfg.max_rank)

    columns = (w_tilde.shape[1], half_input.shape[1], w_tilde_mid.shape[1],
               y_tilde_prev.shape[1])
    return _finish(y_hat, columns, d1 + d2 + d3 + d4, v1 + v2 + v3 + v4)


@dataclass
class LremRun:
    """Factor trajectory with rank and compression diagnostics."""

    times: np.ndarray
    final_factor: np.ndarray
    factors: list | None
    ranks: np.ndarray
    node_traces: np.ndarray
    prenorm_traces: np.ndarray
    discarded_energies: np.ndarray
    eps1_excesses: np.ndarray
    direction: str
    elapsed_seconds: float

    @property
    def max_rank(self) -> int:
        return int(np.max(self.ranks))

    @property
    def cumulative_discarded(self) -> float:
        return float(np.sum(self.discarded_energies))

    @property
    def max_trace_defect(self) -> float:
        return float(np.max(np.abs(self.node_traces - 1.0)))

    def final_state(self) -> np.ndarray:
        return self.final_factor @ self.final_factor.conj().T


def _trace(x: np.ndarray) -> float:
    return float(frobenius_norm(x) ** 2)


def lrem_forward_run(model: LindbladModel, x0: np.ndarray, T: float,
                     steps: int, cfg: LremConfig, keep_factors: bool = True,
                     observer=None) -> LremRun:
    """Iterate the forward factor stepper on the uniform grid tau = T/steps."""
    factor = _check_factor(x0)
    if not isinstance(steps, (int, np.integer)) or steps < 1:
        raise ValueError("need at least one step")
    if T <= 0:
        raise ValueError("horizon must be positive")
    tau = T / steps
    times = np.linspace(0.0, T, steps + 1)
    ranks = np.empty(steps + 1, dtype=int)
    node_traces = np.empty(steps + 1)
    prenorm = np.empty(steps)
    discarded = np.empty(steps)
    excesses = np.empty(steps)
    kept = [factor] if keep_factors else None

    ranks[0] = factor.shape[1]
    node_traces[0] = _trace(factor)
    if observer is not None:
        observer(0, times[0], factor)

    start = time.perf_counter()
    for n in range(steps):
        out = lrem_forward_step(model, times[n], tau, factor, cfg)
        factor = out.factor
        ranks[n + 1] = out.rank
        node_traces[n + 1] = _trace(factor)
        prenorm[n] = out.prenorm_trace
        discarded[n] = out.discarded_energy
        excesses[n] = out.eps1_excess
        if keep_factors:
            kept.append(factor)
        if observer is not None:
            observer(n + 1, times[n + 1], factor)
    elapsed = time.perf_counter() - start

    return LremRun(times, factor, kept, ranks, node_traces, prenorm,
                   discarded, excesses, "forward", elapsed)


def lrem_backward_run(model: LindbladModel, y_terminal: np.ndarray, T: float,
                      steps: int, cfg: LremConfig, keep_factors: bool = True,
                      observer=None) -> LremRun:
    """Iterate the adjoint factor stepper from t = T down to t = 0."""
    factor = _check_factor(y_terminal)
    if not isinstance(steps, (int, np.integer)) or steps < 1:
        raise ValueError("need at least one step")
    if T <= 0:
        raise ValueError("horizon must be positive")
    tau = T / steps
    times = np.linspace(0.0, T, steps + 1)
    ranks = np.empty(steps + 1, dtype=int)
    node_traces = np.empty(steps + 1)
    prenorm = np.empty(steps)
    discarded = np.empty(steps)
    excesses = np.empty(steps)
    kept = [None] * (steps + 1) if keep_factors else None

    ranks[steps] = factor.shape[1]
    node_traces[steps] = _trace(factor)
    if keep_factors:
        kept[steps] = factor
    if observer is not None:
        observer(steps, times[steps], factor)

    start = time.perf_counter()
    for n in range(steps - 1, -1, -1):
        out = lrem_backward_step(model, times[n + 1], tau, factor, cfg)
        factor = out.factor
        ranks[n] = out.rank
        node_traces[n] = _trace(factor)
        prenorm[n] = out.prenorm_trace
        discarded[n] = out.discarded_energy
        excesses[n] = out.eps1_excess
        if keep_factors:
            kept[n] = factor
        if observer is not None:
            observer(n, times[n], factor)
    elapsed = time.perf_counter() - start

    return LremRun(times, factor, kept, ranks, node_traces, prenorm,
                   discarded, excesses, "backward", elapsed)


def state_factor(rho: np.ndarray, tolerance: float = 0.0) -> np.ndarray:
    """PSD factor X with rho ~= X X^+, smallest eigenvalues dropped first.

    Keeps the minimal set of eigenpairs whose discarded total stays within
    the trace-norm tolerance.  Intended for building full- or near-full-rank
    starting factors from dense states.
    """
    rho = np.asarray(rho, dtype=complex)
    values, vectors = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    scale = max(1.0, float(values[-1]))
    if values[0] < -1e-8 * scale:
        raise ValueError("state is not positive semidefinite")
    values = np.clip(values[::-1], 0.0, None)  # descending
    vectors = vectors[:, ::-1]
    tails = np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])
    rank = int(np.argmax(tails <= tolerance))
    rank = max(rank, 1)
    return vectors[:, :rank] * np.sqrt(values[:rank])
