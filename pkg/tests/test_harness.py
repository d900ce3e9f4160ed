"""Experiment harness: order fitting, reports, sweeps, timing, checks."""
import numpy as np
import pytest

from lindexp import linalg
from lindexp.harness import (
    REPORT_COLUMNS,
    ExperimentSpec,
    _vectorized_generator,
    fit_order,
    plateau_level,
    resolve_states,
    run_check,
    run_convergence,
    run_lowrank_sweep,
    run_structure_series,
    run_timing,
    strip_wall_column,
    vectorized_rk4,
    write_report,
)
from lindexp.lrem import LremConfig
from lindexp.model import ising_chain, random_lowrank_states
from lindexp.oracle import rk4_forward


def qubit_chain(**kwargs):
    kwargs.setdefault("gamma", 0.2)
    return ising_chain(2, 1, **kwargs)


# ----------------------------------------------------------- order fitting

def test_fit_order_recovers_exact_slope():
    taus = np.array([0.1, 0.05, 0.025, 0.0125])
    slope, used = fit_order(taus, 3.0 * taus ** 2)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert used == 4


def test_fit_order_drops_floor_points():
    taus = np.array([0.1, 0.05, 0.025, 0.0125, 0.00625])
    errors = np.array([1e-2, 2.5e-3, 6.25e-4, 1.2e-5, 1.05e-5])
    slope, used = fit_order(taus, errors, floor=1e-5)  # last two flat
    assert used == 3
    assert slope == pytest.approx(2.0, abs=1e-12)


def test_fit_order_degenerates_to_nan():
    slope, used = fit_order([0.1, 0.05], [1e-9, 1e-9], floor=1e-8)
    assert used == 0
    assert np.isnan(slope)


def test_plateau_level_flat_tail():
    errors = [1e-2, 1e-3, 2.1e-5, 1.9e-5, 2.0e-5]
    level, flat = plateau_level(errors)
    assert flat
    assert level == pytest.approx(2e-5, rel=0.1)


def test_plateau_level_still_decreasing():
    errors = [1e-2, 2.5e-3, 6e-4, 1.5e-4]
    level, flat = plateau_level(errors)
    assert not flat
    assert level == pytest.approx(1.5e-4)


# ------------------------------------------------------------------- specs

def test_spec_validation():
    model = qubit_chain()
    with pytest.raises(ValueError):
        ExperimentSpec(model, "midpoint", (10, 20))
    with pytest.raises(ValueError):
        ExperimentSpec(model, "frem-forward", (20, 10))
    with pytest.raises(ValueError):
        ExperimentSpec(model, "frem-forward", ())
    with pytest.raises(ValueError):
        ExperimentSpec(model, "frem-forward", (10,), delta=1.5)
    with pytest.raises(ValueError):
        ExperimentSpec(model, "frem-forward", (10,), horizon=0.0)


def test_resolve_states_random_draw_is_seeded():
    model = ising_chain(2, 2, gamma=0.1)
    spec = ExperimentSpec(model, "lrem-forward", (10,), delta=0.01, seed=5)
    state_a, factor_a = resolve_states(spec)
    state_b, factor_b = resolve_states(spec)
    np.testing.assert_array_equal(state_a, state_b)
    np.testing.assert_array_equal(factor_a, factor_b)
    gap = linalg.trace_norm(state_a - factor_a @ factor_a.conj().T)
    assert gap == pytest.approx(0.01, abs=1e-12)


def test_resolve_states_explicit_state_is_factored():
    model = ising_chain(2, 2, gamma=0.1)
    rho = np.diag([0.85, 0.1, 0.04, 0.01]).astype(complex)
    spec = ExperimentSpec(model, "lrem-forward", (10,), delta=0.05,
                          initial_state=rho)
    state, factor = resolve_states(spec)
    np.testing.assert_array_equal(state, rho)
    assert factor.shape[1] == 2  # the two smallest eigenvalues fit in delta
    frem_spec = ExperimentSpec(model, "frem-forward", (10,),
                               initial_state=rho)
    _, none_factor = resolve_states(frem_spec)
    assert none_factor is None


# ------------------------------------------------------------- convergence

def test_convergence_report_full_rank():
    spec = ExperimentSpec(qubit_chain(), "frem-forward", (8, 16, 32, 64),
                          seed=3)
    report = run_convergence(spec)
    assert 1.7 <= report.fitted_order <= 2.3
    assert report.points_fit == 4
    assert report.oracle_accuracy <= 1e-9
    for row in report.rows:
        assert row.max_rank == 2
        assert row.min_eig >= -1e-12
        assert row.trace_drift <= 1e-12
        assert row.wall_s > 0
        assert not row.unreliable


def test_convergence_report_low_rank_backward():
    spec = ExperimentSpec(ising_chain(2, 2, gamma=0.1), "lrem-backward",
                          (8, 16, 32, 64), seed=1)
    report = run_convergence(spec)
    assert 1.7 <= report.fitted_order <= 2.3
    assert all(row.max_rank <= 4 for row in report.rows)
    assert all(row.min_eig == 0.0 for row in report.rows)


def test_report_csv_determinism(tmp_path):
    spec = ExperimentSpec(qubit_chain(), "frem-forward", (8, 16), seed=2)
    paths = []
    for tag in ("one", "two"):
        report = run_convergence(spec)
        paths += write_report(report, tmp_path / f"r_{tag}", "csv")
    first = strip_wall_column((tmp_path / "r_one.csv").read_text())
    second = strip_wall_column((tmp_path / "r_two.csv").read_text())
    assert first == second
    header = (tmp_path / "r_one.csv").read_text().splitlines()[0]
    assert header == ",".join(REPORT_COLUMNS)


def test_report_json_payload(tmp_path):
    spec = ExperimentSpec(qubit_chain(), "frem-forward", (8, 16), seed=2)
    report = run_convergence(spec)
    (path,) = write_report(report, tmp_path / "r", "json")
    import json
    payload = json.loads(open(path).read())
    assert payload["columns"] == list(REPORT_COLUMNS)
    assert len(payload["rows"]) == 2
    assert "fitted_order" in payload["meta"]


def test_strip_wall_column():
    text = "tau,wall_s,err\n0.1,0.5,1e-3\n"
    assert strip_wall_column(text) == "tau,err\n0.1,1e-3\n"


# ------------------------------------------------------------------ series

def test_structure_series_full_rank():
    spec = ExperimentSpec(qubit_chain(), "frem-forward", (50,),
                          horizon=5.0, seed=0)
    report = run_structure_series(spec)
    assert len(report.rows) == 51
    assert report.population_index == 1
    for _, t, pop, drift, eig, rank in report.rows:
        assert 0.0 <= t <= 5.0
        assert -1e-10 <= pop <= 1.0 + 1e-10
        assert drift <= 1e-12
        assert eig >= -1e-10
        assert rank == 2


def test_structure_series_low_rank_ranks():
    spec = ExperimentSpec(ising_chain(2, 2, gamma=0.3), "lrem-forward",
                          (40,), horizon=4.0,
                          config=LremConfig(epsilon1=1e-9, epsilon2=1e-9))
    report = run_structure_series(spec)
    drifts = [row[3] for row in report.rows]
    ranks = [row[5] for row in report.rows]
    assert max(drifts) <= 1e-14
    assert 1 <= min(ranks) and max(ranks) <= 4
    assert all(row[4] == 0.0 for row in report.rows)


def test_structure_series_validation():
    spec = ExperimentSpec(qubit_chain(), "frem-forward", (10, 20))
    with pytest.raises(ValueError):
        run_structure_series(spec)
    single = ExperimentSpec(qubit_chain(), "frem-forward", (10,))
    with pytest.raises(ValueError):
        run_structure_series(single, population_index=9)


# ------------------------------------------------------------------ sweeps

def test_delta_sweep_orders_plateaus():
    spec = ExperimentSpec(ising_chain(2, 2, gamma=0.1), "lrem-forward",
                          (10, 20, 40, 80), seed=4)
    sweep = run_lowrank_sweep(spec, "delta", (1e-2, 1e-4))
    assert sweep.plateau_levels[0] > sweep.plateau_levels[1]
    assert len(sweep.reports) == 2
    assert sweep.reports[0].rows[0].tau == pytest.approx(0.1)


def test_eps_sweep_scales_tolerances():
    spec = ExperimentSpec(ising_chain(3, 2, gamma=0.3), "lrem-forward",
                          (10, 20, 40), seed=4)
    sweep = run_lowrank_sweep(spec, "eps1", (1e-2, 1e-5))
    assert sweep.plateau_levels[0] > sweep.plateau_levels[1]


def test_sweep_validation():
    spec = ExperimentSpec(ising_chain(2, 2), "lrem-forward", (10, 20))
    with pytest.raises(ValueError):
        run_lowrank_sweep(spec, "tau", (0.1,))
    with pytest.raises(ValueError):
        run_lowrank_sweep(spec, "delta", ())
    dense = ExperimentSpec(ising_chain(2, 2), "frem-forward", (10, 20))
    with pytest.raises(ValueError):
        run_lowrank_sweep(dense, "delta", (1e-3,))


# ------------------------------------------------------------------ timing

def test_vectorized_rk4_matches_matrix_rk4():
    model = ising_chain(2, 2, gamma=0.3)
    rho0 = random_lowrank_states(4, 0.0, 7).initial_state
    generator = _vectorized_generator(model)
    vec = vectorized_rk4(model, generator, rho0, 1.0, 32)
    mat = rk4_forward(model, rho0, 0.0, 1.0, 32)
    assert linalg.trace_norm(vec - mat) <= 1e-12


def test_timing_smoke_all_methods():
    report = run_timing(dims=(2,), count=1, target=1e-3, repeats=1,
                        start_steps=4, max_steps=512)
    assert len(report.rows) == 3
    for method in ("frem", "lrem", "dense-vec"):
        row = report.cell(method, 2)
        assert row.status == "ok"
        assert row.error_trace <= 1e-3
        assert row.wall_s > 0


def test_timing_memory_dnf():
    report = run_timing(dims=(2,), count=1, target=1e-3, repeats=1,
                        start_steps=4, max_steps=512,
                        memory_limit_bytes=0)
    row = report.cell("dense-vec", 2)
    assert row.status == "dnf-memory"
    assert report.cell("frem", 2).status == "ok"


def test_timing_accuracy_dnf():
    report = run_timing(dims=(2,), count=1, target=1e-14, repeats=1,
                        start_steps=4, max_steps=8)
    assert report.cell("frem", 2).status == "dnf-accuracy"
    assert report.cell("frem", 2).steps == 8


# ------------------------------------------------------------------- check

def test_run_check_passes():
    ok, lines = run_check(seed=0, samples=40)
    assert ok
    assert len(lines) == 7
    assert all(line.startswith("pass") for line in lines)
