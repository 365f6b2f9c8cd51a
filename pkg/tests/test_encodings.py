import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowq.encodings import (
    BasisEncoding,
    EncodingError,
    amplitude_decode,
    amplitude_encode,
    basis_decode,
    basis_encode,
    basis_state,
    basis_to_amplitude,
    bit_pattern,
    block_encode,
    qubits_for,
)


def test_qubits_for():
    assert [qubits_for(n) for n in (1, 2, 3, 4, 5, 8, 9)] == [1, 1, 2, 2, 3, 3, 4]


def test_amplitude_encode_basis_vector():
    state, norm = amplitude_encode([0, 1, 0, 0])
    assert norm == 1.0
    assert np.allclose(state.amplitudes, [0, 1, 0, 0])


def test_amplitude_encode_uniform():
    state, norm = amplitude_encode([1, 1, 1, 1])
    assert norm == pytest.approx(2.0)
    assert np.allclose(state.amplitudes, [0.5] * 4)


def test_amplitude_encode_pads_and_rejects_zero():
    state, _ = amplitude_encode([3, 4, 0])
    assert state.num_qubits == 2
    assert np.allclose(state.amplitudes, [0.6, 0.8, 0, 0])
    with pytest.raises(EncodingError):
        amplitude_encode([0, 0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=17).filter(
    lambda v: np.linalg.norm(v) > 1e-6))
def test_amplitude_round_trip(values):
    x = np.array(values)
    state, norm = amplitude_encode(x)
    assert np.max(np.abs(amplitude_decode(state, x.size) * norm - x)) < 1e-12


def test_zero_value_conventions():
    assert basis_encode(0, BasisEncoding("binary", 4)) == 0
    assert basis_encode(0, BasisEncoding("unary", 4)) == 0
    with pytest.raises(EncodingError):
        basis_encode(0, BasisEncoding("one-hot", 4))


def test_unary_and_one_hot_patterns():
    assert bit_pattern(basis_encode(2, BasisEncoding("unary", 4)), 4) == "1100"
    assert bit_pattern(basis_encode(3, BasisEncoding("one-hot", 4)), 4) == "0100"


def test_fixed_point_grid_is_symmetric():
    spec = BasisEncoding("fixed-point", 2, scale=1.0)
    values = [basis_decode(i, spec) for i in range(4)]
    assert values == [-0.75, -0.25, 0.25, 0.75]


def test_invalid_patterns_rejected():
    with pytest.raises(EncodingError):
        basis_decode(0b0101, BasisEncoding("unary", 4))
    with pytest.raises(EncodingError):
        basis_decode(0b0110, BasisEncoding("one-hot", 4))
    with pytest.raises(EncodingError):
        basis_encode(16, BasisEncoding("binary", 4))


@settings(max_examples=50, deadline=None)
@given(flavor=st.sampled_from(["binary", "unary", "one-hot"]), width=st.integers(1, 8), data=st.data())
def test_integer_flavor_round_trip(flavor, width, data):
    spec = BasisEncoding(flavor, width)
    lo, hi = {"binary": (0, 2**width - 1), "unary": (0, width), "one-hot": (1, width)}[flavor]
    value = data.draw(st.integers(lo, hi))
    assert basis_decode(basis_encode(value, spec), spec) == value


@settings(max_examples=50, deadline=None)
@given(width=st.integers(1, 8), x=st.floats(-1, 1))
def test_fixed_point_rounding_error(width, x):
    spec = BasisEncoding("fixed-point", width)
    x = float(np.clip(x, -(1 - 2.0**-width), 1 - 2.0**-width))
    assert abs(basis_decode(basis_encode(x, spec), spec) - x) <= spec.resolution + 1e-15


def test_basis_state():
    s = basis_state(5, BasisEncoding("binary", 3))
    assert s.amplitudes[5] == 1


def test_basis_to_amplitude_zero_entry_is_exactly_zero():
    state, prob = basis_to_amplitude([0.5, 0.0, 1.0])
    assert state.amplitudes[1] == 0
    assert prob == pytest.approx((0.25 + 1.0) / 3)


def test_basis_to_amplitude_rejects_out_of_range():
    with pytest.raises(EncodingError):
        basis_to_amplitude([0.5, 1.5])


def test_basis_to_amplitude_finite_angle_register_approximates():
    d = np.array([0.2, 0.9, 0.5, 0.7])
    exact, _ = basis_to_amplitude(d)
    coarse, _ = basis_to_amplitude(d, psi_width=6)
    assert np.max(np.abs(coarse.amplitudes - exact.amplitudes)) < 0.05


def test_block_encode_identity():
    be = block_encode(np.eye(2), 1.0)
    assert np.allclose(be.U.data[:2, :2], np.eye(2))


def test_block_encode_rejects_small_alpha():
    with pytest.raises(EncodingError):
        block_encode(np.array([[2.0]]), 1.0)


def test_block_encode_at_spectral_norm_is_unitary():
    A = np.array([[0.5, 0.2], [0.1, -0.3]])
    be = block_encode(A, np.linalg.norm(A, 2))
    U = be.U.data
    assert np.allclose(U @ U.conj().T, np.eye(4), atol=1e-12)
    assert np.max(np.abs(be.extract() - A)) < 1e-12


def test_block_encode_pads_odd_dimension():
    A = np.arange(9.0).reshape(3, 3) / 20
    be = block_encode(A, 1.0)
    assert be.U.data.shape == (8, 8)
    assert np.max(np.abs(be.extract() - A)) < 1e-12
