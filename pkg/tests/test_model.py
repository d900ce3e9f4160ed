"""Model layer: signals, drift assembly, channels, chain family, states.

Chain operators are cross-checked against a brute-force Kronecker assembly
written independently here; small-system values are hand computations.
"""
import numpy as np
import pytest

from lindexp import linalg
from lindexp.model import (
    LindbladModel,
    Signal,
    apply_backward_channel,
    apply_forward_channel,
    cat_state,
    control_objective,
    drift_operator,
    initial_cat_state,
    ising_chain,
    model_from_dict,
    load_model,
    random_lowrank_states,
    scaled_jump_products,
    site_operator,
    spin_x,
    spin_z,
    state_overlap,
    terminal_cat_state,
)

SZ = np.diag([1.0, -1.0]).astype(complex)
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|


def qubit_model(gamma=1.0):
    return LindbladModel(h0=SZ, jumps=[LOWER],
                         rates=[Signal.constant(gamma)])


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def random_psd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T


# ------------------------------------------------------------------ signals

def test_signal_constant():
    s = Signal.constant(0.7)
    assert s(0.0) == 0.7
    assert s(12.3) == 0.7


def test_signal_sine_default_is_unit_sine():
    s = Signal.sine()
    assert s(0.25) == pytest.approx(1.0, abs=1e-15)
    assert s(0.5) == pytest.approx(0.0, abs=1e-15)


def test_signal_samples_interpolates():
    s = Signal.samples([0.0, 1.0, 2.0], [0.0, 2.0, 2.0])
    assert s(0.5) == pytest.approx(1.0)
    assert s(1.7) == pytest.approx(2.0)


def test_signal_samples_rejects_unsorted_times():
    with pytest.raises(ValueError):
        Signal.samples([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])


def test_signal_max_on():
    assert Signal.sine().max_on(0.0, 1.0) == pytest.approx(1.0, abs=1e-4)
    assert Signal.constant(3.0).max_on(0.0, 10.0) == 3.0


def test_signal_from_spec_round_trip():
    s = Signal.from_spec({"kind": "sine", "amplitude": 2.0})
    assert s(0.25) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        Signal.from_spec({"kind": "triangle"})
    with pytest.raises(ValueError):
        Signal.from_spec({"amplitude": 1.0})


# ------------------------------------------------------------- construction

def test_model_rejects_non_hermitian_h0():
    with pytest.raises(ValueError):
        LindbladModel(h0=LOWER, jumps=[], rates=[])


def test_model_rejects_mismatched_rates():
    with pytest.raises(ValueError):
        LindbladModel(h0=SZ, jumps=[LOWER], rates=[])


def test_model_rejects_negative_constant_rate():
    with pytest.raises(ValueError):
        LindbladModel(h0=SZ, jumps=[LOWER], rates=[Signal.constant(-1.0)])


def test_model_rejects_coupling_without_drive():
    with pytest.raises(ValueError):
        LindbladModel(h0=SZ, jumps=[], rates=[], coupling=SZ)


# ------------------------------------------------------------------- drift

def test_drift_trivial_zero():
    m = LindbladModel(h0=np.zeros((3, 3)), jumps=[], rates=[])
    np.testing.assert_array_equal(drift_operator(m, 0.3), np.zeros((3, 3)))


def test_drift_single_qubit_hand_value():
    a = drift_operator(qubit_model(), 0.0)
    expected = -1j * SZ - 0.5 * np.diag([0.0, 1.0])
    np.testing.assert_allclose(a, expected, atol=1e-15)


def test_drift_ising_matches_kronecker_oracle():
    d, count = 2, 2
    m = ising_chain(d, count, a=1.5, b=1.0, gamma=0.05)
    jz, jx = spin_z(d), spin_x(d)
    eye = np.eye(d)
    jz1, jz2 = np.kron(jz, eye), np.kron(eye, jz)
    h0 = 1.5 * (jz1 + jz2) + (jz1 @ jz1 + jz2 @ jz2)
    # u(0) = 0, so A(0) = -i H0 - (gamma/2) (Jz1^2 + Jz2^2)
    expected = -1j * h0 - 0.025 * (jz1 @ jz1 + jz2 @ jz2)
    np.testing.assert_allclose(drift_operator(m, 0.0), expected, atol=1e-13)
    t = 0.37
    u = np.sin(2 * np.pi * t)
    expected_t = expected - 1j * u * np.kron(jx, jx)
    np.testing.assert_allclose(drift_operator(m, t), expected_t, atol=1e-13)


def test_drift_dissipative_part_negative_semidefinite():
    rng = np.random.default_rng(61)
    m = ising_chain(3, 2, gamma=0.3)
    for t in rng.uniform(0.0, 2.0, size=5):
        a = drift_operator(m, t)
        np.testing.assert_allclose(a + a.conj().T, -m.weighted_gram(t),
                                   atol=1e-12)
        top = linalg.hermitian_spectrum(a + a.conj().T)[0]
        assert top <= 1e-12


# ----------------------------------------------------------------- channels

def test_forward_channel_zero_rates():
    m = LindbladModel(h0=SZ, jumps=[LOWER], rates=[Signal.constant(0.0)])
    rho = np.array([[0.3, 0.1], [0.1, 0.7]], dtype=complex)
    np.testing.assert_array_equal(apply_forward_channel(m, 0.0, rho),
                                  np.zeros((2, 2)))


def test_forward_channel_identity_jump_scales():
    m = LindbladModel(h0=np.zeros((2, 2)), jumps=[np.eye(2)],
                      rates=[Signal.constant(2.0)])
    rho = np.array([[0.3, 0.1j], [-0.1j, 0.7]])
    np.testing.assert_allclose(apply_forward_channel(m, 0.0, rho), 2 * rho,
                               atol=1e-15)


def test_channels_single_qubit_hand_values():
    m = qubit_model()
    rho = np.diag([0.3, 0.7]).astype(complex)
    np.testing.assert_allclose(apply_forward_channel(m, 0.0, rho),
                               np.diag([0.7, 0.0]), atol=1e-15)
    np.testing.assert_allclose(apply_backward_channel(m, 0.0, rho),
                               np.diag([0.0, 0.3]), atol=1e-15)


def test_channels_match_direct_sum_on_chain():
    # diagonal fast path against the literal sum of sandwich products
    m = ising_chain(3, 2, gamma=0.4)
    rng = np.random.default_rng(67)
    rho = random_hermitian(rng, m.dim)
    direct_f = sum(0.4 * (l @ rho @ l.conj().T) for l in m.jumps)
    direct_b = sum(0.4 * (l.conj().T @ rho @ l) for l in m.jumps)
    np.testing.assert_allclose(apply_forward_channel(m, 0.1, rho), direct_f,
                               atol=1e-13)
    np.testing.assert_allclose(apply_backward_channel(m, 0.1, rho), direct_b,
                               atol=1e-13)


def test_channel_duality():
    rng = np.random.default_rng(71)
    l1 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    l2 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    m = LindbladModel(h0=np.zeros((4, 4)), jumps=[l1, l2],
                      rates=[Signal.constant(0.8), Signal.constant(0.2)])
    for _ in range(10):
        q = random_hermitian(rng, 4)
        rho = random_hermitian(rng, 4)
        lhs = np.trace(q @ apply_forward_channel(m, 0.0, rho))
        rhs = np.trace(apply_backward_channel(m, 0.0, q) @ rho)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_forward_channel_preserves_psd():
    rng = np.random.default_rng(73)
    m = ising_chain(4, 2, gamma=0.7)
    for _ in range(5):
        rho = random_psd(rng, m.dim)
        out = apply_forward_channel(m, 0.0, rho)
        spectrum = linalg.hermitian_spectrum(out)
        assert spectrum[-1] >= -1e-10 * max(1.0, spectrum[0])


def test_time_dependent_rates_rescale_channel():
    g = Signal.samples([0.0, 1.0], [0.0, 2.0])
    m = LindbladModel(h0=SZ, jumps=[LOWER], rates=[g])
    rho = np.diag([0.3, 0.7]).astype(complex)
    np.testing.assert_allclose(apply_forward_channel(m, 0.5, rho),
                               np.diag([0.7, 0.0]), atol=1e-15)


def test_scaled_jump_products_matches_channel():
    m = ising_chain(3, 2, gamma=0.4)
    rng = np.random.default_rng(79)
    x = rng.standard_normal((m.dim, 3)) + 1j * rng.standard_normal((m.dim, 3))
    tau = 0.25
    blocks = scaled_jump_products(m, 0.0, x, tau)
    assert len(blocks) == 2
    stacked = sum(b @ b.conj().T for b in blocks)
    expected = tau * apply_forward_channel(m, 0.0, x @ x.conj().T)
    np.testing.assert_allclose(stacked, expected, atol=1e-13)


def test_scaled_jump_products_skips_zero_rates():
    m = LindbladModel(h0=np.zeros((2, 2)), jumps=[LOWER, np.eye(2)],
                      rates=[Signal.constant(0.0), Signal.constant(1.0)])
    blocks = scaled_jump_products(m, 0.0, np.eye(2, 1, dtype=complex), 1.0)
    assert len(blocks) == 1


def test_scaled_jump_products_adjoint():
    m = qubit_model()
    y = np.array([[1.0], [2.0]], dtype=complex)
    blocks = scaled_jump_products(m, 0.0, y, 1.0, adjoint=True)
    np.testing.assert_allclose(blocks[0], LOWER.conj().T @ y, atol=1e-15)


# --------------------------------------------------------------- spin chain

def test_spin_x_qubit_is_half_pauli():
    np.testing.assert_allclose(spin_x(2),
                               0.5 * np.array([[0, 1], [1, 0]]), atol=1e-15)


def test_spin_z_diagonal_values():
    np.testing.assert_allclose(np.diagonal(spin_z(4)).real,
                               [1.5, 0.5, -0.5, -1.5], atol=1e-15)


def test_spin_commutators():
    # [Jz, Jx] = i Jy, [Jx, Jy] = i Jz, so [Jx, [Jz, Jx]] = -[Jx, iJy] = Jz
    for d in (2, 3, 5):
        jz, jx = spin_z(d), spin_x(d)
        comm = jz @ jx - jx @ jz
        double = jx @ comm - comm @ jx
        np.testing.assert_allclose(double, -jz, atol=1e-13)


def test_ising_chain_dimensions():
    assert ising_chain(6, 2).dim == 36
    assert ising_chain(4, 4).dim == 256


def test_ising_chain_single_site_has_no_coupling():
    m = ising_chain(2, 1, a=1.5, b=1.0)
    assert m.coupling is None
    jz = spin_z(2)
    np.testing.assert_allclose(m.hamiltonian(0.33),
                               1.5 * jz + jz @ jz, atol=1e-15)


def test_ising_chain_jumps_are_hermitian_diagonal():
    m = ising_chain(4, 4)
    for l in m.jumps:
        assert np.all(l == np.diag(np.diagonal(l)))
        assert linalg.hermiticity_defect(l) == 0.0


def test_ising_hamiltonian_hermitian_at_random_times():
    rng = np.random.default_rng(83)
    m = ising_chain(3, 3)
    for t in rng.uniform(0.0, 5.0, size=4):
        assert linalg.hermiticity_defect(m.hamiltonian(t)) <= 1e-12


def test_ising_coupling_matches_kron_pairs():
    m = ising_chain(3, 2)
    jx = spin_x(3)
    np.testing.assert_allclose(m.coupling, np.kron(jx, jx), atol=1e-14)
    m3 = ising_chain(2, 3)
    jx = spin_x(2)
    eye = np.eye(2)
    expected = (np.kron(np.kron(jx, jx), eye)
                + np.kron(np.kron(jx, eye), jx)
                + np.kron(np.kron(eye, jx), jx))
    np.testing.assert_allclose(m3.coupling, expected, atol=1e-14)


def test_ising_chain_rejects_bad_sizes():
    with pytest.raises(ValueError):
        ising_chain(1, 2)
    with pytest.raises(ValueError):
        ising_chain(2, 0)


def test_site_operator_places_blocks():
    op = np.array([[0.0, 1.0], [0.0, 0.0]])
    left = site_operator(op, 0, 2, 2)
    np.testing.assert_array_equal(left, np.kron(op, np.eye(2)))
    right = site_operator(op, 1, 2, 2)
    np.testing.assert_array_equal(right, np.kron(np.eye(2), op))


# ------------------------------------------------------------------- states

def test_initial_cat_state_qubit():
    rho = initial_cat_state(2, 1)
    np.testing.assert_allclose(rho, 0.5 * np.ones((2, 2)), atol=1e-15)
    np.testing.assert_allclose(linalg.hermitian_spectrum(rho), [1.0, 0.0],
                               atol=1e-15)


def test_initial_cat_state_two_hexits_support():
    rho = initial_cat_state(6, 2)
    nonzero = {(i, j) for i, j in zip(*np.nonzero(rho))}
    assert nonzero == {(0, 0), (0, 35), (35, 0), (35, 35)}
    assert np.all(rho[np.nonzero(rho)] == 0.5)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)


def test_terminal_cat_state_support():
    rho = terminal_cat_state(6, 2)
    nonzero = {(i, j) for i, j in zip(*np.nonzero(rho))}
    assert nonzero == {(7, 7), (7, 28), (28, 7), (28, 28)}


def test_cat_states_are_rank_one_unit_trace():
    for d, count in ((3, 1), (4, 2), (6, 2)):
        for rho in (initial_cat_state(d, count), terminal_cat_state(d, count)):
            spectrum = linalg.hermitian_spectrum(rho)
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
            assert spectrum[0] == pytest.approx(1.0, abs=1e-14)
            assert abs(spectrum[1]) <= 1e-12


def test_terminal_cat_state_needs_three_levels():
    with pytest.raises(ValueError):
        terminal_cat_state(2, 1)


def test_terminal_cat_state_degenerates_cleanly_at_three_levels():
    # levels 1 and d-2 coincide at d=3: the state collapses to a projector
    np.testing.assert_array_equal(terminal_cat_state(3, 1),
                                  np.diag([0.0, 1.0, 0.0]))


def test_cat_state_rejects_out_of_range_levels():
    with pytest.raises(ValueError):
        cat_state(3, 1, (0, 3))


# ------------------------------------------------------- random state pairs

def test_random_lowrank_deviation_zero_delta():
    states = random_lowrank_states(16, 0.0, seed=1)
    gap = linalg.trace_norm(
        states.initial_state
        - states.initial_factor @ states.initial_factor.conj().T)
    assert gap <= 1e-14


def test_random_lowrank_deviation_equals_delta():
    delta = 1e-3
    states = random_lowrank_states(16, delta, seed=2)
    for state, factor in ((states.initial_state, states.initial_factor),
                          (states.terminal_state, states.terminal_factor)):
        gap = linalg.trace_norm(state - factor @ factor.conj().T)
        assert gap == pytest.approx(delta, abs=1e-12)


def test_random_lowrank_scaled_factor_halves_deviation():
    delta = 1e-3
    states = random_lowrank_states(16, delta, seed=2, scaled_factor=True)
    gap = linalg.trace_norm(
        states.initial_state
        - states.initial_factor @ states.initial_factor.conj().T)
    assert gap == pytest.approx(delta / 2, abs=1e-12)


def test_random_lowrank_states_are_density_matrices():
    states = random_lowrank_states(8, 0.2, seed=3)
    for state in (states.initial_state, states.terminal_state):
        assert np.trace(state).real == pytest.approx(1.0, abs=1e-14)
        assert linalg.hermitian_spectrum(state)[-1] >= -1e-14


def test_random_lowrank_deterministic_under_seed():
    a = random_lowrank_states(12, 0.1, seed=9)
    b = random_lowrank_states(12, 0.1, seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_random_lowrank_rejects_bad_delta():
    with pytest.raises(ValueError):
        random_lowrank_states(8, -0.1, seed=0)
    with pytest.raises(ValueError):
        random_lowrank_states(8, 1.1, seed=0)


# -------------------------------------------------------------- observables

def test_overlap_identical_projectors():
    rho = initial_cat_state(4, 1)
    assert state_overlap(rho, rho) == pytest.approx(1.0, abs=1e-14)


def test_overlap_orthogonal_projectors():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    assert state_overlap(p0, p1) == pytest.approx(0.0, abs=1e-15)


def test_control_objective_quadratic_penalty():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    n = 50
    u = np.ones(n + 1)
    cost = control_objective(p0, p1, u, alpha=2.0, tau=1.0 / n)
    assert cost == pytest.approx(-1.0, abs=1e-13)


# ----------------------------------------------------------- specifications

def test_model_from_dict_ising_matches_builder():
    cfg = {"type": "ising", "d": 3, "K": 2, "a": 1.5, "b": 1.0,
           "gamma": 0.05, "control": {"kind": "sine"}}
    built = model_from_dict(cfg)
    direct = ising_chain(3, 2, 1.5, 1.0, 0.05)
    assert built.fingerprint() == direct.fingerprint()
    np.testing.assert_allclose(drift_operator(built, 0.4),
                               drift_operator(direct, 0.4), atol=1e-15)


def test_model_from_dict_custom_dense():
    cfg = {
        "type": "custom-dense",
        "h0": {"re": [[1.0, 0.0], [0.0, -1.0]]},
        "jumps": [{"re": [[0.0, 1.0], [0.0, 0.0]]}],
        "gamma": 1.0,
    }
    m = model_from_dict(cfg)
    expected = -1j * SZ - 0.5 * np.diag([0.0, 1.0])
    np.testing.assert_allclose(drift_operator(m, 0.0), expected, atol=1e-15)


def test_model_from_dict_rejects_bad_inputs():
    with pytest.raises(ValueError):
        model_from_dict({"d": 2})
    with pytest.raises(ValueError):
        model_from_dict({"type": "heisenberg"})
    with pytest.raises(ValueError):
        model_from_dict({
            "type": "custom-dense",
            "h0": {"re": [[0.0, 1.0], [0.0, 0.0]]},  # not Hermitian
        })
    with pytest.raises(ValueError):
        model_from_dict({
            "type": "custom-dense",
            "h0": {"re": [[0.0]]},
            "jumps": [{"re": [[1.0]]}],
            "gamma": [1.0, 2.0],
        })


def test_load_model_round_trip(tmp_path):
    path = tmp_path / "chain.json"
    path.write_text('{"type": "ising", "d": 2, "K": 1, "gamma": 0.1}')
    m = load_model(path)
    assert m.dim == 2
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        load_model(bad)


def test_fingerprint_separates_models():
    a = ising_chain(3, 2, gamma=0.05)
    b = ising_chain(3, 2, gamma=0.06)
    assert a.fingerprint() != b.fingerprint()
    assert a.fingerprint() == ising_chain(3, 2, gamma=0.05).fingerprint()
