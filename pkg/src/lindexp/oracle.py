"""Independent reference solvers and brute-force consistency checkers.

Error measurements need a trustworthy state to compare against, produced by
machinery unrelated to the exponential midpoint family.  This module
integrates the forward and adjoint master equations with classical
fourth-order Runge-Kutta directly on the matrix ODE, doubling the substep
count until two successive answers agree in trace norm, and only then
accepts the result.  Constant-coefficient systems get a second, fully
closed route through the vectorized generator: one matrix exponential of
the m^2 x m^2 Liouvillian.  Accepted references can be stored in a small
binary cache keyed by the model fingerprint.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import expm, hermiticity_defect, trace_norm
from .model import (
    LindbladModel,
    apply_backward_channel,
    apply_forward_channel,
    drift_operator,
)

GAP_TOL = 1e-10
ACCURACY_CEILING = 1e-9
LIOUVILLIAN_DIM_LIMIT = 64
CACHE_ENV_VAR = "LINDEXP_CACHE_DIR"


class OracleFailure(RuntimeError):
    """A reference computation could not be certified."""


@dataclass(frozen=True)
class ReferenceSolution:
    """Certified endpoint state with its accuracy estimate."""

    state: np.ndarray
    method: str
    substeps: int
    estimated_accuracy: float


@dataclass(frozen=True)
class OracleTrajectory:
    """States on a uniform grid, integrated at oracle resolution."""

    times: np.ndarray
    states: list


# ------------------------------------------------------------ RK4 marching

def _forward_rhs(model: LindbladModel, t: float, rho: np.ndarray):
    # rho stays Hermitian along the flow, so rho A^+ = (A rho)^+
    flow = drift_operator(model, t) @ rho
    return flow + flow.conj().T + apply_forward_channel(model, t, rho)


def _backward_rhs_reversed(model: LindbladModel, s: float, q: np.ndarray,
                           horizon: float):
    # in reversed time s = T - t the adjoint equation runs forward
    t = horizon - s
    flow = drift_operator(model, t).conj().T @ q
    return flow + flow.conj().T + apply_backward_channel(model, t, q)


def _rk4(rhs, y0: np.ndarray, t0: float, t1: float, substeps: int):
    h = (t1 - t0) / substeps
    y = y0
    for n in range(substeps):
        t = t0 + n * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return y


def rk4_forward(model: LindbladModel, rho0: np.ndarray, t0: float, t1: float,
                substeps: int) -> np.ndarray:
    """Integrate the forward equation from t0 to t1 with fixed substeps."""
    rho0 = np.asarray(rho0, dtype=complex)
    return _rk4(lambda t, y: _forward_rhs(model, t, y), rho0, t0, t1,
                substeps)


def rk4_backward(model: LindbladModel, q_terminal: np.ndarray, horizon: float,
                 substeps: int) -> np.ndarray:
    """Integrate the adjoint equation from t = horizon down to t = 0."""
    q = np.asarray(q_terminal, dtype=complex)
    return _rk4(lambda s, y: _backward_rhs_reversed(model, s, y, horizon),
                q, 0.0, horizon, substeps)


def oracle_forward_trajectory(model: LindbladModel, rho0: np.ndarray,
                              horizon: float, nodes: int,
                              substeps_per_interval: int = 64
                              ) -> OracleTrajectory:
    """Forward states on the uniform grid with `nodes` intervals."""
    times = np.linspace(0.0, horizon, nodes + 1)
    state = np.asarray(rho0, dtype=complex)
    states = [state]
    for n in range(nodes):
        state = rk4_forward(model, state, times[n], times[n + 1],
                            substeps_per_interval)
        states.append(state)
    return OracleTrajectory(times, states)


def oracle_backward_trajectory(model: LindbladModel, q_terminal: np.ndarray,
                               horizon: float, nodes: int,
                               substeps_per_interval: int = 64
                               ) -> OracleTrajectory:
    """Adjoint states on the same grid, indexed so entry n belongs to t_n."""
    times = np.linspace(0.0, horizon, nodes + 1)
    state = np.asarray(q_terminal, dtype=complex)
    states = [None] * (nodes + 1)
    states[nodes] = state
    for n in range(nodes - 1, -1, -1):
        state = _rk4(
            lambda s, y: _backward_rhs_reversed(model, s, y, horizon),
            state, horizon - times[n + 1], horizon - times[n],
            substeps_per_interval)
        states[n] = state
    return OracleTrajectory(times, states)


# -------------------------------------------------------- certified answers

def _check_reference_input(state: np.ndarray, horizon: float) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise ValueError("state must be a square matrix")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    scale = max(1.0, float(np.linalg.norm(state)))
    if hermiticity_defect(state) > 1e-10 * scale:
        raise ValueError("state must be Hermitian")
    if abs(np.trace(state).real - 1.0) > 1e-6:
        raise ValueError("state must have unit trace")
    if np.linalg.eigvalsh(state)[0] < -1e-8:
        raise ValueError("state must be positive semidefinite")
    return state


def _halving_ladder(advance, start_substeps: int, gap_tol: float,
                    max_substeps: int):
    substeps = start_substeps
    coarse = advance(substeps)
    while True:
        substeps *= 2
        if substeps > max_substeps:
            raise OracleFailure(
                f"no convergence to gap {gap_tol:g} within "
                f"{max_substeps} substeps")
        fine = advance(substeps)
        gap = trace_norm(fine - coarse)
        if gap <= gap_tol:
            return fine, substeps, gap
        coarse = fine


def reference_forward(model: LindbladModel, rho0: np.ndarray, horizon: float,
                      gap_tol: float = GAP_TOL, start_substeps: int = 0,
                      max_substeps: int = 2 ** 20,
                      cache=None) -> ReferenceSolution:
    """Certified rho(horizon), by substep halving on the matrix RK4."""
    rho0 = _check_reference_input(rho0, horizon)
    if cache is not None:
        hit = cache.load(model, "forward", rho0, horizon, gap_tol)
        if hit is not None:
            return hit
    if start_substeps < 1:
        start_substeps = max(32, int(np.ceil(16 * horizon)))
    state, substeps, gap = _halving_ladder(
        lambda n: rk4_forward(model, rho0, 0.0, horizon, n),
        start_substeps, gap_tol, max_substeps)
    solution = _accept(state, "rk4-fine", substeps, gap)
    if cache is not None:
        cache.store(model, "forward", rho0, horizon, gap_tol, solution)
    return solution


def reference_backward(model: LindbladModel, q_terminal: np.ndarray,
                       horizon: float, gap_tol: float = GAP_TOL,
                       start_substeps: int = 0, max_substeps: int = 2 ** 20,
                       cache=None) -> ReferenceSolution:
    """Certified q(0), by substep halving on the adjoint matrix RK4."""
    q_terminal = _check_reference_input(q_terminal, horizon)
    if cache is not None:
        hit = cache.load(model, "backward", q_terminal, horizon, gap_tol)
        if hit is not None:
            return hit
    if start_substeps < 1:
        start_substeps = max(32, int(np.ceil(16 * horizon)))
    state, substeps, gap = _halving_ladder(
        lambda n: rk4_backward(model, q_terminal, horizon, n),
        start_substeps, gap_tol, max_substeps)
    solution = _accept(state, "rk4-fine", substeps, gap)
    if cache is not None:
        cache.store(model, "backward", q_terminal, horizon, gap_tol, solution)
    return solution


def _accept(state, method, substeps, accuracy) -> ReferenceSolution:
    if accuracy > ACCURACY_CEILING:
        raise OracleFailure(
            f"estimated accuracy {accuracy:g} exceeds the acceptance "
            f"ceiling {ACCURACY_CEILING:g}")
    return ReferenceSolution(state, method, substeps, float(accuracy))


# --------------------------------------------------- vectorized generator

def build_liouvillian(model: LindbladModel, t: float) -> np.ndarray:
    """Generator on column-stacked states: vec(rhs(rho)) = L vec(rho)."""
    m = model.dim
    if m > LIOUVILLIAN_DIM_LIMIT:
        raise ValueError(
            f"dimension {m} exceeds the dense Liouvillian guard "
            f"({LIOUVILLIAN_DIM_LIMIT})")
    eye = np.eye(m)
    a = drift_operator(model, t)
    gen = np.kron(eye, a) + np.kron(a.conj(), eye)
    for l, w in zip(model.jumps, model.rate_values(t)):
        if w != 0.0:
            gen += w * np.kron(l.conj(), l)
    return gen


def _vec(a: np.ndarray) -> np.ndarray:
    return np.reshape(a, -1, order="F")


def _unvec(v: np.ndarray, m: int) -> np.ndarray:
    return np.reshape(v, (m, m), order="F")


def _require_constant_generator(model: LindbladModel) -> None:
    drifting = (model.coupling is not None
                and model.drive.kind != "constant")
    varying_rates = any(g.kind != "constant" for g in model.rates)
    if drifting or varying_rates:
        raise ValueError("vectorized route needs constant coefficients")


def liouvillian_forward(model: LindbladModel, rho0: np.ndarray,
                        horizon: float) -> ReferenceSolution:
    """rho(horizon) by one exponential of the constant generator."""
    _require_constant_generator(model)
    rho0 = _check_reference_input(rho0, horizon)
    gen = build_liouvillian(model, 0.0)
    state = _unvec(expm(horizon * gen) @ _vec(rho0), model.dim)
    return ReferenceSolution(state, "liouvillian-expm", 1, 1e-12)


def liouvillian_backward(model: LindbladModel, q_terminal: np.ndarray,
                         horizon: float) -> ReferenceSolution:
    """q(0) by one exponential of the adjoint constant generator."""
    _require_constant_generator(model)
    q_terminal = _check_reference_input(q_terminal, horizon)
    gen = build_liouvillian(model, 0.0)
    state = _unvec(expm(horizon * gen.conj().T) @ _vec(q_terminal),
                   model.dim)
    return ReferenceSolution(state, "liouvillian-expm", 1, 1e-12)


# ------------------------------------------------------------------ pairing

def check_duality(forward: OracleTrajectory, backward) -> float:
    """Largest drift of Tr(q(t_n) rho(t_n)) from its initial value.

    Accepts any pair of objects carrying matching `times` and `states`
    (oracle trajectories or integrator runs).
    """
    tf = np.asarray(forward.times)
    tb = np.asarray(backward.times)
    if tf.shape != tb.shape or not np.allclose(tf, tb, atol=1e-12):
        raise ValueError("trajectories must share one grid")
    pairings = [float(np.einsum("ij,ji->", q, rho).real)
                for q, rho in zip(backward.states, forward.states)]
    return float(np.max(np.abs(np.array(pairings) - pairings[0])))


# -------------------------------------------------------------------- cache

class ReferenceCache:
    """Directory of certified endpoint states, keyed by content hashes.

    Layout per entry: `<key>.bin` holds a dims header (two little-endian
    uint64) followed by interleaved re/im float64 entries; `<key>.json`
    holds method, substeps, and estimated accuracy.
    """

    def __init__(self, root=None):
        if root is None:
            root = os.environ.get(CACHE_ENV_VAR)
        self.root = Path(root) if root is not None else None

    def _key(self, model, direction, state, horizon, gap_tol) -> str:
        import hashlib
        h = hashlib.sha256()
        h.update(model.fingerprint().encode())
        h.update(direction.encode())
        h.update(np.ascontiguousarray(state).tobytes())
        h.update(repr(float(horizon)).encode())
        h.update(repr(float(gap_tol)).encode())
        return h.hexdigest()

    def load(self, model, direction, state, horizon,
             gap_tol) -> ReferenceSolution | None:
        if self.root is None:
            return None
        key = self._key(model, direction, state, horizon, gap_tol)
        binary = self.root / f"{key}.bin"
        sidecar = self.root / f"{key}.json"
        if not (binary.exists() and sidecar.exists()):
            return None
        meta = json.loads(sidecar.read_text())
        raw = np.frombuffer(binary.read_bytes(), dtype="<u8", count=2)
        rows, cols = int(raw[0]), int(raw[1])
        parts = np.frombuffer(binary.read_bytes(), dtype="<f8", offset=16)
        parts = parts.reshape(rows, cols, 2)
        matrix = parts[..., 0] + 1j * parts[..., 1]
        return ReferenceSolution(matrix, meta["method"],
                                 int(meta["substeps"]),
                                 float(meta["estimated_accuracy"]))

    def store(self, model, direction, state, horizon, gap_tol,
              solution: ReferenceSolution) -> None:
        if self.root is None:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        key = self._key(model, direction, state, horizon, gap_tol)
        matrix = np.asarray(solution.state, dtype=complex)
        parts = np.empty(matrix.shape + (2,), dtype="<f8")
        parts[..., 0] = matrix.real
        parts[..., 1] = matrix.imag
        header = np.array(matrix.shape, dtype="<u8").tobytes()
        (self.root / f"{key}.bin").write_bytes(header + parts.tobytes())
        (self.root / f"{key}.json").write_text(json.dumps({
            "method": solution.method,
            "substeps": solution.substeps,
            "estimated_accuracy": solution.estimated_accuracy,
        }, sort_keys=True))
