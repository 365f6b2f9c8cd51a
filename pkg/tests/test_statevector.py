import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowq.statevector import (
    H,
    SWAP,
    X,
    DensityMatrix,
    ImpossibleOutcome,
    RegisterLayout,
    SimulationError,
    Statevector,
    apply_qft,
    apply_unitary,
    dense,
    diagonal,
    evolve_hamiltonian,
    expm_hermitian,
    marginal_probabilities,
    measure_counts,
    partial_trace,
    permutation,
    postselect,
    postselect_register,
    qft_matrix,
    trace_distance,
)


def _random_state(layout, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return Statevector(layout, v / np.linalg.norm(v))


def test_layout_qubit_indices_msb_first():
    lay = RegisterLayout.of(("a", 1), ("b", 2))
    assert lay.total_qubits == 3
    assert lay.qubits("a") == (2,)
    assert lay.qubits("b") == (1, 0)


def test_layout_rejects_duplicates():
    with pytest.raises(SimulationError):
        RegisterLayout.of(("a", 1), ("a", 2))


def test_x_on_lsb_gives_01():
    lay = RegisterLayout.of(("q", 2))
    s = apply_unitary(Statevector.zeros(lay), dense(X), [0])
    assert np.allclose(s.amplitudes, [0, 1, 0, 0])


def test_hadamards_give_uniform():
    lay = RegisterLayout.of(("q", 2))
    s = Statevector.zeros(lay)
    s = apply_unitary(s, dense(H), [0])
    s = apply_unitary(s, dense(H), [1])
    assert np.allclose(s.amplitudes, [0.5] * 4)


def test_non_unitary_rejected():
    with pytest.raises(SimulationError):
        dense(np.array([[1, 1], [0, 1]]))


def test_controlled_x_flips_target_only_when_control_set():
    lay = RegisterLayout.of(("q", 2))
    cx = dense(X).on([0]).controlled_by([1])
    s = apply_unitary(Statevector.basis(lay, 0b10), cx)
    assert np.allclose(np.abs(s.amplitudes), [0, 0, 0, 1])
    s = apply_unitary(Statevector.basis(lay, 0b00), cx)
    assert np.allclose(np.abs(s.amplitudes), [1, 0, 0, 0])


def test_operator_kinds_agree():
    lay = RegisterLayout.of(("q", 2))
    s = _random_state(lay, 0)
    perm = np.array([0, 2, 1, 3])
    a = apply_unitary(s, permutation(perm), [1, 0])
    b = apply_unitary(s, dense(SWAP), [1, 0])
    assert np.allclose(a.amplitudes, b.amplitudes)
    phases = np.exp(1j * np.arange(4))
    c = apply_unitary(s, diagonal(phases), [1, 0])
    d = apply_unitary(s, dense(np.diag(phases)), [1, 0])
    assert np.allclose(c.amplitudes, d.amplitudes)


def test_qft_matches_ortho_dft():
    F = qft_matrix(3)
    N = 8
    j, k = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    assert np.allclose(F, np.exp(2j * np.pi * j * k / N) / np.sqrt(N))


def test_apply_qft_then_inverse_is_identity():
    lay = RegisterLayout.of(("a", 1), ("p", 3))
    s = _random_state(lay, 3)
    back = apply_qft(apply_qft(s, "p"), "p", inverse=True)
    assert np.allclose(back.amplitudes, s.amplitudes)


def test_postselect_tracks_ledger():
    lay = RegisterLayout.of(("q", 1))
    s = apply_unitary(Statevector.zeros(lay), dense(H), [0])
    out, p = postselect(s, 0, 1)
    assert p == pytest.approx(0.5)
    assert out.norm_ledger == pytest.approx(np.sqrt(0.5))
    assert np.allclose(out.amplitudes, [0, 1])


def test_postselect_impossible_outcome():
    lay = RegisterLayout.of(("q", 1))
    with pytest.raises(ImpossibleOutcome):
        postselect(Statevector.zeros(lay), 0, 1)


def test_postselect_register_multi_bit():
    lay = RegisterLayout.of(("a", 2), ("b", 1))
    s = _random_state(lay, 4)
    out, p = postselect_register(s, "a", 0b10)
    expected = np.sum(np.abs(s.amplitudes[4:6]) ** 2)
    assert p == pytest.approx(expected)
    assert np.allclose(np.abs(out.amplitudes[4:6]), np.abs(s.amplitudes[4:6]) / np.sqrt(expected))


def test_marginals_and_counts():
    lay = RegisterLayout.of(("a", 1), ("b", 1))
    s = apply_unitary(Statevector.zeros(lay), dense(H), [1])
    assert np.allclose(marginal_probabilities(s, "a"), [0.5, 0.5])
    counts = measure_counts(s, "a", 1000, seed=7)
    assert counts == measure_counts(s, "a", 1000, seed=7)
    assert sum(counts.values()) == 1000


def test_bell_partial_trace_is_maximally_mixed():
    lay = RegisterLayout.of(("a", 1), ("b", 1))
    s = Statevector(lay, np.array([1, 0, 0, 1]) / np.sqrt(2))
    rho = partial_trace(s, "a")
    assert np.allclose(rho.entries, np.eye(2) / 2)
    assert rho.purity() == pytest.approx(0.5)
    assert rho.rank() == 2


def test_product_partial_trace_is_pure():
    lay = RegisterLayout.of(("a", 1), ("b", 1))
    s = Statevector(lay, np.kron([0.6, 0.8], [1, 0]))
    rho = partial_trace(s, "a")
    assert trace_distance(rho, DensityMatrix.pure(np.array([0.6, 0.8]))) < 1e-12


def test_evolution_sign_convention():
    # evolve_hamiltonian applies exp(+iHt)
    lay = RegisterLayout.of(("q", 1))
    Z = np.diag([1.0, -1.0])
    s = Statevector(lay, np.array([1, 1]) / np.sqrt(2))
    out = evolve_hamiltonian(s, Z, 0.3)
    assert np.allclose(out.amplitudes, np.array([np.exp(0.3j), np.exp(-0.3j)]) / np.sqrt(2))


def test_expm_rejects_non_hermitian():
    with pytest.raises(SimulationError):
        expm_hermitian(np.array([[0, 1], [0, 0]]), 1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), t=st.floats(-3, 3))
def test_evolution_preserves_norm_and_inverts(seed, t):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = g + g.conj().T
    lay = RegisterLayout.of(("q", 2))
    s = _random_state(lay, seed)
    out = evolve_hamiltonian(s, h, t)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-10
    assert np.allclose(evolve_hamiltonian(out, h, -t).amplitudes, s.amplitudes, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_random_unitary_preserves_norm(seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    lay = RegisterLayout.of(("a", 1), ("b", 2))
    s = _random_state(lay, seed + 1)
    out = apply_unitary(s, dense(q), [2, 0])
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


def test_qubit_cap(monkeypatch):
    monkeypatch.setenv("FLOWQ_MAX_QUBITS", "3")
    with pytest.raises(SimulationError):
        Statevector.zeros(RegisterLayout.of(("q", 4)))
