"""Lindblad system definitions and the benchmark spin-chain family.

A model bundles the static Hamiltonian, an optional driven coupling term, the
jump operators, and their (possibly time-dependent) rates.  From these it
derives the non-Hermitian drift operator

    A(t) = -i H(t) - 1/2 sum_k gamma_k(t) L_k^+ L_k

and the dissipative channels sum_k gamma_k(t) L_k rho L_k^+ (forward) and
sum_k gamma_k(t) L_k^+ q L_k (backward).  Diagonal jump operators get a fast
Hadamard-product path since the benchmark family uses only those.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .linalg import hermiticity_defect, trace_norm

HERMITIAN_BUILD_RTOL = 1e-10


# ------------------------------------------------------------------ signals

@dataclass(frozen=True)
class Signal:
    """Scalar function of time: a drive amplitude or a dissipation rate."""

    kind: str
    params: dict = field(default_factory=dict)
    fn: Callable[[float], float] | None = None

    @classmethod
    def constant(cls, value: float) -> "Signal":
        return cls("constant", {"value": float(value)})

    @classmethod
    def sine(cls, amplitude: float = 1.0, frequency: float = 1.0,
             phase: float = 0.0) -> "Signal":
        return cls("sine", {
            "amplitude": float(amplitude),
            "frequency": float(frequency),
            "phase": float(phase),
        })

    @classmethod
    def samples(cls, times, values) -> "Signal":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("samples need matching 1-d times and values")
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        return cls("samples", {
            "times": times.tolist(),
            "values": values.tolist(),
        })

    @classmethod
    def custom(cls, fn: Callable[[float], float]) -> "Signal":
        return cls("custom", {}, fn)

    @classmethod
    def from_spec(cls, spec: dict) -> "Signal":
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ValueError("signal specification needs a 'kind' field")
        kind = spec["kind"]
        if kind == "constant":
            return cls.constant(spec.get("value", 0.0))
        if kind == "sine":
            return cls.sine(spec.get("amplitude", 1.0),
                            spec.get("frequency", 1.0),
                            spec.get("phase", 0.0))
        if kind == "samples":
            if "times" not in spec or "values" not in spec:
                raise ValueError("sampled signal needs 'times' and 'values'")
            return cls.samples(spec["times"], spec["values"])
        raise ValueError(f"unknown signal kind {kind!r}")

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.params["value"]
        if self.kind == "sine":
            p = self.params
            return p["amplitude"] * np.sin(
                2.0 * np.pi * p["frequency"] * t + p["phase"])
        if self.kind == "samples":
            return float(np.interp(t, self.params["times"],
                                   self.params["values"]))
        return float(self.fn(t))

    def max_on(self, t0: float, t1: float, samples: int = 1001) -> float:
        """Largest value attained on [t0, t1], by dense sampling."""
        if self.kind == "constant":
            return self.params["value"]
        grid = np.linspace(t0, t1, samples)
        return max(self(t) for t in grid)

    def descriptor(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom signals have no stable descriptor")
        return {"kind": self.kind, **self.params}


# ------------------------------------------------------------------- models

@dataclass(eq=False)
class LindbladModel:
    """H(t) = h0 + drive(t)*coupling, jump operators, and their rates.

    All matrices are dense complex.  Instances are immutable after
    construction; evaluators must be pure functions of t, so a model can be
    shared freely between steppers.
    """

    h0: np.ndarray
    jumps: list
    rates: list
    coupling: np.ndarray | None = None
    drive: Signal | None = None
    label: str = ""

    def __post_init__(self):
        self.h0 = np.asarray(self.h0, dtype=complex)
        if self.h0.ndim != 2 or self.h0.shape[0] != self.h0.shape[1]:
            raise ValueError("h0 must be a square matrix")
        self.dim = self.h0.shape[0]
        _require_hermitian(self.h0, "h0")
        if self.coupling is not None:
            self.coupling = np.asarray(self.coupling, dtype=complex)
            if self.coupling.shape != self.h0.shape:
                raise ValueError("coupling must match h0 in shape")
            _require_hermitian(self.coupling, "coupling")
        if (self.drive is None) != (self.coupling is None):
            raise ValueError("drive and coupling must be given together")
        self.jumps = [np.asarray(l, dtype=complex) for l in self.jumps]
        for l in self.jumps:
            if l.shape != self.h0.shape:
                raise ValueError("jump operators must match h0 in shape")
        if len(self.rates) != len(self.jumps):
            raise ValueError("need one rate per jump operator")
        for g in self.rates:
            if not isinstance(g, Signal):
                raise ValueError("rates must be Signal instances")
            if g.kind == "constant" and g.params["value"] < 0:
                raise ValueError("rates must be nonnegative")

        # diagonal-jump fast path: L rho L^+ becomes a Hadamard product
        self._jump_diagonals = []
        for l in self.jumps:
            diag = np.diagonal(l)
            off = l - np.diag(diag)
            self._jump_diagonals.append(
                diag.copy() if not np.any(off) else None)
        self._all_diagonal = (len(self.jumps) > 0
                              and all(d is not None
                                      for d in self._jump_diagonals))
        self._grams = [l.conj().T @ l for l in self.jumps]

        self._constant_rates = all(g.kind == "constant" for g in self.rates)
        if self._constant_rates:
            values = np.array([g.params["value"] for g in self.rates])
            self._rate_constants = values
            self._static_gram = _weighted_sum(self._grams, values, self.dim)
            if self._all_diagonal:
                self._static_channel = _diagonal_channel_matrix(
                    self._jump_diagonals, values)
        self._static_drift = None
        if self._constant_rates:
            self._static_drift = (-1j) * self.h0 - 0.5 * self._static_gram

    # -- evaluators ---------------------------------------------------------

    def hamiltonian(self, t: float) -> np.ndarray:
        if self.coupling is None:
            return self.h0.copy()
        return self.h0 + self.drive(t) * self.coupling

    def rate_values(self, t: float) -> np.ndarray:
        if self._constant_rates:
            return self._rate_constants
        values = np.array([g(t) for g in self.rates], dtype=float)
        if np.any(values < 0):
            raise ValueError(f"negative dissipation rate at t={t}")
        return values

    def weighted_gram(self, t: float) -> np.ndarray:
        """sum_k gamma_k(t) L_k^+ L_k."""
        if self._constant_rates:
            return self._static_gram
        return _weighted_sum(self._grams, self.rate_values(t), self.dim)

    def jump_trace_norms(self) -> np.ndarray:
        return np.array([trace_norm(l) for l in self.jumps])

    # -- cache keying -------------------------------------------------------

    def fingerprint(self) -> str:
        """Stable content hash, used to key cached reference solutions."""
        h = hashlib.sha256()
        h.update(np.int64(self.dim).tobytes())
        h.update(np.ascontiguousarray(self.h0).tobytes())
        if self.coupling is not None:
            h.update(np.ascontiguousarray(self.coupling).tobytes())
            h.update(json.dumps(self.drive.descriptor(),
                                sort_keys=True).encode())
        for l, g in zip(self.jumps, self.rates):
            h.update(np.ascontiguousarray(l).tobytes())
            h.update(json.dumps(g.descriptor(), sort_keys=True).encode())
        return h.hexdigest()


def _require_hermitian(a: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.linalg.norm(a)))
    if hermiticity_defect(a) > HERMITIAN_BUILD_RTOL * scale:
        raise ValueError(f"{name} must be Hermitian")


def _weighted_sum(mats, weights, dim) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    for m, w in zip(mats, weights):
        if w != 0.0:
            out += w * m
    return out


def _diagonal_channel_matrix(diagonals, weights) -> np.ndarray:
    d = np.vstack(diagonals)
    return np.einsum("k,ki,kj->ij", weights, d, d.conj())


# ------------------------------------------------------- operator assembly

def drift_operator(model: LindbladModel, t: float) -> np.ndarray:
    """A(t) = -i H(t) - 1/2 sum_k gamma_k(t) L_k^+ L_k."""
    if model._static_drift is not None:
        if model.coupling is None:
            return model._static_drift.copy()
        return model._static_drift + (-1j * model.drive(t)) * model.coupling
    return (-1j) * model.hamiltonian(t) - 0.5 * model.weighted_gram(t)


def apply_forward_channel(model: LindbladModel, t: float,
                          rho: np.ndarray) -> np.ndarray:
    """sum_k gamma_k(t) L_k rho L_k^+."""
    weights = model.rate_values(t)
    if model._all_diagonal:
        if model._constant_rates:
            return model._static_channel * rho
        return _diagonal_channel_matrix(model._jump_diagonals, weights) * rho
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    for l, w in zip(model.jumps, weights):
        if w != 0.0:
            out += w * (l @ rho @ l.conj().T)
    return out


def apply_backward_channel(model: LindbladModel, t: float,
                           q: np.ndarray) -> np.ndarray:
    """sum_k gamma_k(t) L_k^+ q L_k."""
    weights = model.rate_values(t)
    if model._all_diagonal:
        if model._constant_rates:
            return model._static_channel.conj() * q
        w = _diagonal_channel_matrix(model._jump_diagonals, weights)
        return w.conj() * q
    out = np.zeros_like(np.asarray(q, dtype=complex))
    for l, w in zip(model.jumps, weights):
        if w != 0.0:
            out += w * (l.conj().T @ q @ l)
    return out


def scaled_jump_products(model: LindbladModel, t: float, x: np.ndarray,
                         prefactor: float, adjoint: bool = False) -> list:
    """Blocks sqrt(prefactor*gamma_k(t)) L_k x, skipping zero-rate channels.

    With adjoint=True the blocks use L_k^+ instead of L_k.
    """
    weights = prefactor * model.rate_values(t)
    blocks = []
    for l, d, w in zip(model.jumps, model._jump_diagonals, weights):
        if w == 0.0:
            continue
        c = np.sqrt(w)
        if d is not None:
            col = d.conj() if adjoint else d
            blocks.append((c * col)[:, None] * x)
        else:
            op = l.conj().T if adjoint else l
            blocks.append(c * (op @ x))
    return blocks


# ------------------------------------------------------ spin-chain builders

def spin_z(d: int) -> np.ndarray:
    """J_z = diag(j, j-1, ..., -j) for spin j = (d-1)/2."""
    j = (d - 1) / 2.0
    return np.diag(j - np.arange(d)).astype(complex)


def spin_x(d: int) -> np.ndarray:
    """J_x = (J_+ + J_-)/2, symmetric tridiagonal."""
    j = (d - 1) / 2.0
    m = j - np.arange(1, d)
    off = 0.5 * np.sqrt(j * (j + 1) - m * (m + 1))
    return (np.diag(off, 1) + np.diag(off, -1)).astype(complex)


def site_operator(op: np.ndarray, site: int, d: int, count: int) -> np.ndarray:
    """Embed a single-site operator at the given site of a d^count chain."""
    out = np.eye(d ** site, dtype=complex)
    out = np.kron(out, op)
    return np.kron(out, np.eye(d ** (count - site - 1), dtype=complex))


def ising_chain(d: int, count: int, a: float = 1.5, b: float = 1.0,
                gamma: float = 0.05,
                drive: Signal | None = None) -> LindbladModel:
    """Driven X-X coupled chain of `count` d-level systems.

    H(t) = sum_k (a J_z_k + b J_z_k^2) + u(t) sum_{k<l} J_x_k J_x_l, with one
    dephasing channel L_k = J_z_k per site at constant rate gamma.
    """
    if d < 2 or count < 1:
        raise ValueError("need d >= 2 levels and count >= 1 sites")
    if drive is None:
        drive = Signal.sine()
    jz = spin_z(d)
    h0 = sum(site_operator(a * jz + b * (jz @ jz), k, d, count)
             for k in range(count))
    jumps = [site_operator(jz, k, d, count) for k in range(count)]
    rates = [Signal.constant(gamma)] * count
    coupling = None
    if count > 1:
        jx = spin_x(d)
        sites = [site_operator(jx, k, d, count) for k in range(count)]
        coupling = sum(sites[k] @ sites[l]
                       for k in range(count) for l in range(k + 1, count))
    else:
        drive = None
    return LindbladModel(h0=h0, jumps=jumps, rates=rates, coupling=coupling,
                         drive=drive, label=f"ising(d={d},K={count})")


# ------------------------------------------------------------------- states

def _cat_indices(d: int, count: int, levels: tuple) -> tuple:
    l1, l2 = levels
    if not (0 <= l1 < d and 0 <= l2 < d):
        raise ValueError("levels must lie in range(d)")
    stride = (d ** count - 1) // (d - 1)  # index of |l...l> is l*(1+d+...)
    return l1 * stride, l2 * stride


def cat_state(d: int, count: int, levels: tuple) -> np.ndarray:
    """Unit vector along |l1..l1> + |l2..l2> on a d^count chain."""
    i1, i2 = _cat_indices(d, count, levels)
    w = np.zeros(d ** count, dtype=complex)
    if i1 == i2:
        w[i1] = 1.0
    else:
        w[i1] = w[i2] = 1.0 / np.sqrt(2.0)
    return w


def _cat_density(d: int, count: int, levels: tuple) -> np.ndarray:
    # explicit placement keeps the 1/2 entries exact
    i1, i2 = _cat_indices(d, count, levels)
    rho = np.zeros((d ** count,) * 2, dtype=complex)
    if i1 == i2:
        rho[i1, i1] = 1.0
    else:
        rho[[i1, i1, i2, i2], [i1, i2, i1, i2]] = 0.5
    return rho


def initial_cat_state(d: int, count: int) -> np.ndarray:
    """Rank-1 density matrix of the cat state over levels 0 and d-1."""
    return _cat_density(d, count, (0, d - 1))


def terminal_cat_state(d: int, count: int) -> np.ndarray:
    """Rank-1 density matrix of the cat state over levels 1 and d-2."""
    if d < 3:
        raise ValueError("terminal cat state needs d >= 3")
    return _cat_density(d, count, (1, d - 2))


class RandomStates(NamedTuple):
    initial_state: np.ndarray
    initial_factor: np.ndarray
    terminal_state: np.ndarray
    terminal_factor: np.ndarray


def random_lowrank_states(m: int, delta: float, seed: int,
                          scaled_factor: bool = False) -> RandomStates:
    """Near-rank-1 states (1-delta/2) z z^T + (delta/2) z' z'^T, seeded.

    The four orthonormal vectors come from the SVD of a random real m-by-4
    matrix; columns 1-2 build the initial pair, columns 3-4 the terminal
    pair.  The default factor is the unscaled leading vector, which makes
    ||state - factor factor^+||_1 equal delta exactly; scaled_factor=True
    rescales it by sqrt(1-delta/2) so the deviation is delta/2 instead.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    if m < 4:
        raise ValueError("need dimension m >= 4")
    rng = np.random.default_rng(seed)
    z = np.linalg.svd(rng.standard_normal((m, 4)),
                      full_matrices=False)[0].astype(complex)
    scale = np.sqrt(1.0 - delta / 2.0) if scaled_factor else 1.0

    def pair(v1, v2):
        state = ((1.0 - delta / 2.0) * np.outer(v1, v1.conj())
                 + (delta / 2.0) * np.outer(v2, v2.conj()))
        return state, (scale * v1)[:, None]

    rho0, x0 = pair(z[:, 0], z[:, 1])
    q_t, y_t = pair(z[:, 2], z[:, 3])
    return RandomStates(rho0, x0, q_t, y_t)


# -------------------------------------------------------------- observables

def state_overlap(q: np.ndarray, rho: np.ndarray) -> float:
    """Tr(q rho) for Hermitian arguments."""
    return float(np.einsum("ij,ji->", q, rho).real)


def control_objective(q: np.ndarray, rho_final: np.ndarray, u_samples,
                      alpha: float, tau: float) -> float:
    """Tr(q rho(T)) - (alpha/2) * integral of u^2, trapezoid on the grid."""
    u = np.asarray(u_samples, dtype=float)
    return state_overlap(q, rho_final) - 0.5 * alpha * float(
        np.trapezoid(u * u, dx=tau))


# ----------------------------------------------------------- specifications

def model_from_dict(cfg: dict) -> LindbladModel:
    """Build a model from a parsed specification dictionary."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise ValueError("model specification needs a 'type' field")
    kind = cfg["type"]
    if kind == "ising":
        control = cfg.get("control", {"kind": "sine"})
        return ising_chain(
            d=int(cfg.get("d", 2)),
            count=int(cfg.get("K", 1)),
            a=float(cfg.get("a", 1.5)),
            b=float(cfg.get("b", 1.0)),
            gamma=float(cfg.get("gamma", 0.05)),
            drive=Signal.from_spec(control),
        )
    if kind == "custom-dense":
        h0 = _matrix_from_parts(cfg["h0"], "h0")
        coupling = None
        drive = None
        if "coupling" in cfg:
            coupling = _matrix_from_parts(cfg["coupling"], "coupling")
            drive = Signal.from_spec(cfg.get("control", {"kind": "sine"}))
        jumps = [_matrix_from_parts(j, f"jumps[{i}]")
                 for i, j in enumerate(cfg.get("jumps", []))]
        gamma = cfg.get("gamma", 1.0)
        if np.isscalar(gamma):
            gamma = [gamma] * len(jumps)
        if len(gamma) != len(jumps):
            raise ValueError("need one gamma per jump operator")
        rates = [Signal.constant(g) for g in gamma]
        return LindbladModel(h0=h0, jumps=jumps, rates=rates,
                             coupling=coupling, drive=drive,
                             label=cfg.get("label", "custom"))
    raise ValueError(f"unknown model type {kind!r}")


def _matrix_from_parts(parts: dict, name: str) -> np.ndarray:
    if not isinstance(parts, dict) or "re" not in parts:
        raise ValueError(f"{name} must supply 're' (and optionally 'im')")
    re = np.asarray(parts["re"], dtype=float)
    im = np.asarray(parts.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape or re.ndim != 2:
        raise ValueError(f"{name} parts must be matching 2-d arrays")
    return re + 1j * im


def load_model(path) -> LindbladModel:
    """Read a model specification from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid model file {path}: {exc}") from exc
    return model_from_dict(cfg)
