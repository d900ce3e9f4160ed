"""Experiment orchestration: convergence studies with order fitting,
structure-preservation time series, low-rank tolerance sweeps, and timing
comparisons at matched accuracy, with CSV/JSON report emission.

Every reported error is measured against a certified reference and carries
the reference's accuracy stamp; errors closer than a factor of ten to that
stamp are flagged unreliable, and the order fitter drops points sitting on
a floor.  Report tables use a fixed column order so runs diff cleanly;
wall-clock columns are the only nondeterministic entries.
"""
import csv
import json
import math
import time
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from threadpoolctl import threadpool_limits

from .linalg import frobenius_norm, trace_norm
from .model import (
    LindbladModel,
    Signal,
    drift_operator,
    initial_cat_state,
    ising_chain,
    random_lowrank_states,
)
from .frem import (
    frem_backward_run,
    frem_backward_step,
    frem_forward_run,
    frem_forward_step,
    propagation_contraction_gap,
    step_stability_factor,
)
from .lrem import (
    LremConfig,
    lrem_backward_run,
    lrem_forward_run,
    state_factor,
)
from .oracle import (
    GAP_TOL,
    oracle_backward_trajectory,
    oracle_forward_trajectory,
    check_duality,
    reference_backward,
    reference_forward,
)

SCHEMES = ("frem-forward", "frem-backward", "lrem-forward", "lrem-backward")

REPORT_COLUMNS = ("tau", "error_trace", "error_frob", "min_eig",
                  "trace_drift", "max_rank", "wall_s")
SERIES_COLUMNS = ("step", "t", "population", "trace_drift", "min_eig",
                  "rank")
TIMING_COLUMNS = ("method", "m", "steps", "error_trace", "wall_s", "status")

# errors below RELIABILITY_FACTOR * oracle accuracy are flagged; the order
# fitter additionally drops points within FLOOR_FACTOR of a known floor
RELIABILITY_FACTOR = 10.0
FLOOR_FACTOR = 5.0


# ----------------------------------------------------------- specifications

@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """One propagation experiment: model, scheme, step grid, tolerances.

    `initial_state` is the propagated boundary condition (terminal state
    for backward schemes).  When omitted, a seeded random low-rank pair
    supplies it; `delta` is the trace-norm budget for the starting factor
    of low-rank schemes.
    """

    model: LindbladModel
    scheme: str
    grid: tuple
    config: LremConfig = LremConfig(epsilon1=1e-10, epsilon2=1e-10)
    normalized: bool = True
    delta: float = 0.0
    horizon: float = 1.0
    seed: int = 0
    initial_state: np.ndarray | None = None
    out: str | None = None
    label: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        grid = tuple(int(n) for n in self.grid)
        if not grid or any(n < 1 for n in grid):
            raise ValueError("grid must contain step counts >= 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")

    @property
    def backward(self) -> bool:
        return self.scheme.endswith("backward")

    @property
    def lowrank(self) -> bool:
        return self.scheme.startswith("lrem")


def resolve_states(spec: ExperimentSpec):
    """Boundary state and (for low-rank schemes) its starting factor.

    Random draws need dimension four or more; below that a seeded dense
    density matrix stands in, with the factor truncated to the delta
    budget.
    """
    state = spec.initial_state
    factor = None
    if state is None and spec.model.dim >= 4:
        draw = random_lowrank_states(spec.model.dim, spec.delta, spec.seed)
        if spec.backward:
            state, factor = draw.terminal_state, draw.terminal_factor
        else:
            state, factor = draw.initial_state, draw.initial_factor
    else:
        if state is None:
            rng = np.random.default_rng(spec.seed)
            state = _random_density(rng, spec.model.dim)
        if spec.lowrank:
            factor = state_factor(np.asarray(state, dtype=complex),
                                  spec.delta)
    if not spec.lowrank:
        factor = None
    return np.asarray(state, dtype=complex), factor


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class ReportRow:
    tau: float
    error_trace: float
    error_frob: float
    min_eig: float
    trace_drift: float
    max_rank: int
    wall_s: float
    unreliable: bool = False

    def values(self):
        return (self.tau, self.error_trace, self.error_frob, self.min_eig,
                self.trace_drift, self.max_rank, self.wall_s)


@dataclass(frozen=True)
class ExperimentReport:
    scheme: str
    label: str
    horizon: float
    rows: tuple
    fitted_order: float
    points_fit: int
    oracle_accuracy: float
    oracle_substeps: int

    @property
    def errors(self):
        return np.array([r.error_trace for r in self.rows])

    @property
    def taus(self):
        return np.array([r.tau for r in self.rows])

    def meta(self) -> dict:
        return {
            "scheme": self.scheme,
            "label": self.label,
            "horizon": self.horizon,
            "fitted_order": self.fitted_order,
            "points_fit": self.points_fit,
            "oracle_accuracy": self.oracle_accuracy,
            "oracle_substeps": self.oracle_substeps,
            "unreliable_rows": [i for i, r in enumerate(self.rows)
                                if r.unreliable],
        }


class SeriesRow(NamedTuple):
    step: int
    t: float
    population: float
    trace_drift: float
    min_eig: float
    rank: int


@dataclass(frozen=True)
class SeriesReport:
    scheme: str
    label: str
    horizon: float
    rows: tuple
    population_index: int

    def meta(self) -> dict:
        return {
            "scheme": self.scheme,
            "label": self.label,
            "horizon": self.horizon,
            "population_index": self.population_index,
        }


@dataclass(frozen=True)
class SweepReport:
    vary: str
    values: tuple
    reports: tuple
    plateau_levels: tuple
    plateaued: tuple

    def meta(self) -> dict:
        return {
            "vary": self.vary,
            "values": list(self.values),
            "plateau_levels": list(self.plateau_levels),
            "plateaued": list(self.plateaued),
        }


@dataclass(frozen=True)
class TimingRow:
    method: str
    m: int
    steps: int
    error_trace: float
    wall_s: float
    status: str  # ok | dnf-accuracy | dnf-budget | dnf-memory

    def values(self):
        return (self.method, self.m, self.steps, self.error_trace,
                self.wall_s, self.status)


@dataclass(frozen=True)
class TimingReport:
    target: float
    horizon: float
    repeats: int
    rows: tuple

    def cell(self, method, m):
        for row in self.rows:
            if row.method == method and row.m == m:
                return row
        raise KeyError(f"no timing row for {method} at m={m}")

    def meta(self) -> dict:
        return {
            "target": self.target,
            "horizon": self.horizon,
            "repeats": self.repeats,
        }


# ------------------------------------------------------------ order fitting

def fit_order(taus, errors, floor=0.0):
    """Least-squares slope of log error vs log tau on the asymptotic regime.

    Points within FLOOR_FACTOR of `floor` (an error plateau or the oracle
    reliability level) are excluded.  Returns (slope, points_used); slope
    is nan when fewer than two points survive.
    """
    taus = np.asarray(taus, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = (errors > FLOOR_FACTOR * floor) & (errors > 0.0)
    used = int(np.count_nonzero(keep))
    if used < 2:
        return float("nan"), used
    slope = np.polyfit(np.log(taus[keep]), np.log(errors[keep]), 1)[0]
    return float(slope), used


def plateau_level(errors, flat_ratio=2.5):
    """Level where an error curve (tau decreasing) stops improving.

    Returns (level, plateaued): the geometric mean of the trailing run of
    points within `flat_ratio` of the final error, and whether that run
    has at least two points.  Without a plateau the level is the final
    error itself.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("no errors to analyze")
    tail = [errors[-1]]
    for value in errors[-2::-1]:
        if value <= flat_ratio * errors[-1]:
            tail.append(value)
        else:
            break
    level = float(np.exp(np.mean(np.log(tail))))
    return level, len(tail) >= 2


# ------------------------------------------------------------- convergence

def _propagate(spec: ExperimentSpec, state, factor, steps: int):
    """One scheme run; returns (final_state, min_eig, trace_drift, rank)."""
    model, T = spec.model, spec.horizon
    if spec.scheme == "frem-forward":
        run = frem_forward_run(model, state, T, steps,
                               normalized=spec.normalized,
                               keep_trajectory=False, track_spectra=True)
        return (run.final_state, run.min_eigenvalue, run.max_trace_defect,
                model.dim)
    if spec.scheme == "frem-backward":
        run = frem_backward_run(model, state, T, steps,
                                normalized=spec.normalized,
                                keep_trajectory=False, track_spectra=True)
        return (run.final_state, run.min_eigenvalue, run.max_trace_defect,
                model.dim)
    if spec.scheme == "lrem-forward":
        run = lrem_forward_run(model, factor, T, steps, spec.config,
                               keep_factors=False)
    else:
        run = lrem_backward_run(model, factor, T, steps, spec.config,
                                keep_factors=False)
    # factored states are PSD by construction
    return run.final_state(), 0.0, run.max_trace_defect, int(run.max_rank)


def run_convergence(spec: ExperimentSpec, cache=None,
                    gap_tol=GAP_TOL) -> ExperimentReport:
    """Errors against a certified reference over the spec's step grid."""
    state, factor = resolve_states(spec)
    if spec.backward:
        ref = reference_backward(spec.model, state, spec.horizon,
                                 gap_tol=gap_tol, cache=cache)
    else:
        ref = reference_forward(spec.model, state, spec.horizon,
                                gap_tol=gap_tol, cache=cache)
    rows = []
    for steps in spec.grid:
        begin = time.perf_counter()
        final, min_eig, drift, rank = _propagate(spec, state, factor, steps)
        wall = time.perf_counter() - begin
        gap = final - ref.state
        error = trace_norm(gap)
        rows.append(ReportRow(
            tau=spec.horizon / steps,
            error_trace=error,
            error_frob=frobenius_norm(gap),
            min_eig=min_eig,
            trace_drift=drift,
            max_rank=rank,
            wall_s=wall,
            unreliable=error < RELIABILITY_FACTOR * ref.estimated_accuracy,
        ))
    slope, used = fit_order(
        [r.tau for r in rows], [r.error_trace for r in rows],
        floor=RELIABILITY_FACTOR * ref.estimated_accuracy)
    return ExperimentReport(
        scheme=spec.scheme, label=spec.label or spec.model.label,
        horizon=spec.horizon, rows=tuple(rows), fitted_order=slope,
        points_fit=used, oracle_accuracy=ref.estimated_accuracy,
        oracle_substeps=ref.substeps)


# ------------------------------------------------------------------ series

def _factor_population(factor, index):
    return float(np.sum(np.abs(factor[index, :]) ** 2))


def run_structure_series(spec: ExperimentSpec,
                         population_index=None) -> SeriesReport:
    """Per-step populations, trace drift, and spectra for a single run."""
    if len(spec.grid) != 1:
        raise ValueError("structure series expects a single step count")
    state, factor = resolve_states(spec)
    steps = spec.grid[0]
    m = spec.model.dim
    if population_index is None:
        population_index = min(3 if spec.backward else 7, m - 1)
    if not 0 <= population_index < m:
        raise ValueError("population index outside the state dimension")
    rows = []
    if spec.lowrank:
        runner = lrem_backward_run if spec.backward else lrem_forward_run
        run = runner(spec.model, factor, spec.horizon, steps, spec.config)
        for node in range(steps + 1):
            rows.append(SeriesRow(node, float(run.times[node]),
                                  _factor_population(run.factors[node],
                                                     population_index),
                                  abs(run.node_traces[node] - 1.0), 0.0,
                                  int(run.ranks[node])))
    else:
        runner = frem_backward_run if spec.backward else frem_forward_run
        run = runner(spec.model, state, spec.horizon, steps,
                     normalized=spec.normalized, track_spectra=True)
        for node in range(steps + 1):
            rows.append(SeriesRow(node, float(run.times[node]),
                                  float(run.states[node][population_index,
                                                         population_index]
                                        .real),
                                  abs(run.node_traces[node] - 1.0),
                                  float(run.min_eigenvalues[node]), m))
    return SeriesReport(scheme=spec.scheme,
                        label=spec.label or spec.model.label,
                        horizon=spec.horizon, rows=tuple(rows),
                        population_index=population_index)


# ------------------------------------------------------------------ sweeps

def run_lowrank_sweep(spec: ExperimentSpec, vary: str, values,
                      cache=None, gap_tol: float = GAP_TOL) -> SweepReport:
    """Family of convergence reports as one low-rank driver varies.

    `delta` varies the starting-factor deviation with tolerances fixed;
    `eps1`/`eps2` vary one compression tolerance in the per-step scaled
    regime (effective tolerance tau times the given value).
    """
    if vary not in ("delta", "eps1", "eps2"):
        raise ValueError("vary must be one of delta, eps1, eps2")
    if not spec.lowrank:
        raise ValueError("tolerance sweeps require a low-rank scheme")
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError("no sweep values given")
    reports = []
    for value in values:
        if vary == "delta":
            derived = replace(spec, delta=value)
        elif vary == "eps1":
            derived = replace(spec, config=replace(
                spec.config, epsilon1=value, tolerance_scaling=True))
        else:
            derived = replace(spec, config=replace(
                spec.config, epsilon2=value, tolerance_scaling=True))
        reports.append(run_convergence(derived, cache=cache,
                                       gap_tol=gap_tol))
    levels, flats = [], []
    for report in reports:
        level, flat = plateau_level(report.errors)
        levels.append(level)
        flats.append(flat)
    return SweepReport(vary=vary, values=values, reports=tuple(reports),
                       plateau_levels=tuple(levels), plateaued=tuple(flats))


# ------------------------------------------------------------------ timing

def _vectorized_generator(model: LindbladModel):
    """Dense Liouvillian pieces L0 (static) and Lv (drive modulated).

    Propagating vec(rho) through these is the conventional dense approach
    the factored scheme is raced against; it needs constant rates and an
    affine drive dependence.
    """
    for rate in model.rates:
        if rate.kind != "constant":
            raise ValueError("vectorized baseline needs constant rates")
    m = model.dim
    eye = np.eye(m, dtype=complex)
    a0 = drift_operator(model, 0.0)
    if model.coupling is not None:
        a0 = a0 + 1j * model.drive(0.0) * model.coupling
    l0 = np.kron(eye, a0) + np.kron(a0.conj(), eye)
    for rate, jump in zip(model.rates, model.jumps):
        l0 += rate(0.0) * np.kron(jump.conj(), jump)
    if model.coupling is None:
        return l0, None
    v = -1j * model.coupling
    return l0, np.kron(eye, v) + np.kron(v.conj(), eye)


def vectorized_rk4(model: LindbladModel, generator, rho0, horizon: float,
                   steps: int):
    """Classical RK4 on the vectorized density matrix."""
    l0, lv = generator
    m = model.dim
    drive = model.drive if lv is not None else None

    def rhs(t, y):
        out = l0 @ y
        if drive is not None:
            out += drive(t) * (lv @ y)
        return out

    tau = horizon / steps
    y = np.asarray(rho0, dtype=complex).reshape(-1, order="F").copy()
    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + tau / 2, y + (tau / 2) * k1)
        k3 = rhs(t + tau / 2, y + (tau / 2) * k2)
        k4 = rhs(t + tau, y + tau * k3)
        y += (tau / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += tau
    return y.reshape(m, m, order="F")


TIMING_METHODS = ("frem", "lrem", "dense-vec")


def _timing_runner(method, model, rho0, x0, horizon, eps2, generator):
    if method == "frem":
        return lambda n: frem_forward_run(
            model, rho0, horizon, n, keep_trajectory=False).final_state
    if method == "lrem":
        def run(n):
            tau = horizon / n
            cfg = LremConfig(epsilon1=tau ** 3, epsilon2=eps2)
            return lrem_forward_run(model, x0, horizon, n, cfg,
                                    keep_factors=False).final_state()
        return run
    return lambda n: vectorized_rk4(model, generator, rho0, horizon, n)


def run_timing(dims=(4, 6, 8, 12), count=2, target=1e-3, horizon=1.0,
               gamma=0.05, eps2=1e-6, repeats=5, start_steps=8,
               max_steps=4096, memory_limit_bytes=2 * 1024 ** 3,
               cell_seconds=240.0, gap_tol=1e-9, cache=None,
               progress=None) -> TimingReport:
    """Wall time of each method at matched accuracy, per dimension.

    Each method's step count is calibrated (doubling from `start_steps`)
    until its endpoint error drops to `target`; the calibrated run is then
    timed single-threaded, median of `repeats` after one warm-up.  A method
    that cannot reach the target, would exceed its time budget, or needs
    more memory than allowed is recorded as a DNF with the reason.
    """
    rows = []
    for d in dims:
        model = ising_chain(d, count, gamma=gamma)
        m = model.dim
        rho0 = initial_cat_state(d, count)
        x0 = state_factor(rho0)
        ref = reference_forward(model, rho0, horizon, gap_tol=gap_tol,
                                cache=cache)
        generator = None
        for method in TIMING_METHODS:
            if progress is not None:
                progress(f"timing {method} at m={m}")
            if method == "dense-vec":
                # two dense m^2 x m^2 operators
                needed = 2 * (m * m) ** 2 * 16
                if needed > memory_limit_bytes:
                    rows.append(TimingRow(method, m, 0, float("nan"),
                                          float("nan"), "dnf-memory"))
                    continue
                generator = _vectorized_generator(model)
            runner = _timing_runner(method, model, rho0, x0, horizon,
                                    eps2, generator)
            with threadpool_limits(limits=1):
                steps, error, probe_wall, status = _calibrate(
                    runner, ref.state, target, start_steps, max_steps,
                    cell_seconds)
                if status == "ok" and probe_wall * (repeats + 1) \
                        > cell_seconds:
                    status = "dnf-budget"
                if status != "ok":
                    rows.append(TimingRow(method, m, steps, error,
                                          probe_wall, status))
                    continue
                runner(steps)  # warm-up
                walls = []
                for _ in range(repeats):
                    begin = time.perf_counter()
                    runner(steps)
                    walls.append(time.perf_counter() - begin)
            rows.append(TimingRow(method, m, steps, error,
                                  float(np.median(walls)), "ok"))
    return TimingReport(target=target, horizon=horizon, repeats=repeats,
                        rows=tuple(rows))


def _calibrate(runner, reference, target, start_steps, max_steps,
               budget_seconds):
    """Smallest doubling step count whose endpoint error meets the target."""
    steps = start_steps
    spent = 0.0
    while True:
        begin = time.perf_counter()
        final = runner(steps)
        wall = time.perf_counter() - begin
        spent += wall
        error = trace_norm(final - reference)
        if error <= target:
            return steps, error, wall, "ok"
        if steps >= max_steps:
            return steps, error, wall, "dnf-accuracy"
        if spent + 2 * wall > budget_seconds:
            return steps, error, wall, "dnf-budget"
        steps *= 2


# ----------------------------------------------------------- invariant run

def _random_check_model(rng, m, channels):
    h = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    h = 0.5 * (h + h.conj().T)
    jumps, rates = [], []
    for _ in range(channels):
        jumps.append((rng.standard_normal((m, m))
                      + 1j * rng.standard_normal((m, m))) / np.sqrt(m))
        rates.append(Signal.constant(float(rng.uniform(0.0, 0.6))))
    return LindbladModel(h, jumps, rates)


def _random_density(rng, m):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def run_check(seed=0, samples=200):
    """Seeded invariant battery; returns (ok, lines) for display.

    Covers propagation contraction, one-step Lipschitz stability, full-rank
    positivity and trace preservation, exact low-rank traces, the low-rank
    to full-rank equivalence at zero tolerance, and forward/backward
    duality of the reference integrator.
    """
    rng = np.random.default_rng(seed)
    lines = []
    ok = True

    def record(name, passed, worst):
        nonlocal ok
        ok = ok and passed
        lines.append(f"{'pass' if passed else 'FAIL'}  {name} "
                     f"(worst {worst:.3e})")

    worst = np.inf
    for _ in range(samples):
        m = int(rng.integers(2, 7))
        model = _random_check_model(rng, m, int(rng.integers(1, 3)))
        sigma = _random_density(rng, m)
        t, s = rng.uniform(0.0, 2.0), rng.uniform(0.01, 0.7)
        worst = min(worst, propagation_contraction_gap(model, sigma, t, s))
    record("contraction slack", worst >= -1e-12, worst)

    worst = 0.0
    for _ in range(samples // 2):
        m = int(rng.integers(2, 7))
        model = _random_check_model(rng, m, 2)
        tau = rng.uniform(0.02, 0.3)
        rho, sigma = _random_density(rng, m), _random_density(rng, m)
        bound = step_stability_factor(model, tau, 0.0, tau)
        fwd = frem_forward_step(model, 0.0, tau, rho).full_state
        gwd = frem_forward_step(model, 0.0, tau, sigma).full_state
        excess = trace_norm(fwd - gwd) \
            - bound * trace_norm(rho - sigma) - 1e-10
        worst = max(worst, excess)
    record("one-step Lipschitz", worst <= 0.0, worst)

    worst_eig, worst_tr = 0.0, 0.0
    for _ in range(samples // 4):
        m = int(rng.integers(2, 7))
        model = _random_check_model(rng, m, 2)
        run = frem_forward_run(model, _random_density(rng, m), 1.0, 10,
                               keep_trajectory=False, track_spectra=True)
        worst_eig = min(worst_eig, run.min_eigenvalue)
        worst_tr = max(worst_tr, run.max_trace_defect)
    record("full-rank positivity", worst_eig >= -1e-11, worst_eig)
    record("full-rank trace", worst_tr <= 1e-12, worst_tr)

    model = ising_chain(3, 2, gamma=0.2)
    draw = random_lowrank_states(model.dim, 0.0, seed)
    run = lrem_forward_run(model, draw.initial_factor, 1.0, 20,
                           LremConfig(epsilon1=1e-9, epsilon2=1e-9),
                           keep_factors=False)
    record("low-rank trace", run.max_trace_defect <= 1e-14,
           run.max_trace_defect)

    exact = LremConfig()
    low = lrem_forward_run(model, draw.initial_factor, 1.0, 10, exact)
    full = frem_forward_run(model, draw.initial_state, 1.0, 10)
    worst = max(trace_norm(x @ x.conj().T - dense)
                for x, dense in zip(low.factors, full.states))
    record("low-rank equivalence", worst <= 1e-10, worst)

    unitary = ising_chain(2, 2, gamma=0.0)
    fwd = oracle_forward_trajectory(unitary, _random_density(rng, 4),
                                    0.5, 8, substeps_per_interval=128)
    bwd = oracle_backward_trajectory(unitary, _random_density(rng, 4),
                                     0.5, 8, substeps_per_interval=128)
    gap = check_duality(fwd, bwd)
    record("oracle duality", gap <= 1e-11, gap)

    return ok, lines


# ----------------------------------------------------------------- writers

def _format(value):
    if isinstance(value, (int, np.integer)) \
            and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table_csv(path, columns, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(v) for v in row])


def write_report(report, stem, fmt="csv"):
    """Emit a report as `<stem>.csv` plus `<stem>.json` metadata, or a
    single `<stem>.json` carrying rows and metadata together."""
    if isinstance(report, ExperimentReport):
        columns, rows = REPORT_COLUMNS, [r.values() for r in report.rows]
    elif isinstance(report, SeriesReport):
        columns, rows = SERIES_COLUMNS, list(report.rows)
    elif isinstance(report, TimingReport):
        columns, rows = TIMING_COLUMNS, [r.values() for r in report.rows]
    else:
        raise TypeError(f"cannot serialize {type(report).__name__}")
    stem = str(stem)
    if fmt == "csv":
        write_table_csv(stem + ".csv", columns, rows)
        with open(stem + ".json", "w") as handle:
            json.dump(report.meta(), handle, indent=1, sort_keys=True)
            handle.write("\n")
        return [stem + ".csv", stem + ".json"]
    if fmt != "json":
        raise ValueError(f"unknown report format {fmt!r}")
    payload = {"columns": list(columns),
               "rows": [list(r) for r in rows],
               "meta": report.meta()}
    with open(stem + ".json", "w") as handle:
        json.dump(payload, handle, indent=1, sort_keys=True)
        handle.write("\n")
    return [stem + ".json"]


def strip_wall_column(csv_text: str) -> str:
    """Drop wall-clock columns; what remains is run-to-run reproducible."""
    lines = csv_text.strip().splitlines()
    header = lines[0].split(",")
    keep = [i for i, name in enumerate(header) if name != "wall_s"]
    out = []
    for line in lines:
        cells = line.split(",")
        out.append(",".join(cells[i] for i in keep))
    return "\n".join(out) + "\n"
