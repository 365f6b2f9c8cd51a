"""Amplitude, basis and block encodings, plus basis -> amplitude conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .statevector import (
    RegisterLayout,
    SimulationError,
    Statevector,
    UnitaryOp,
    apply_unitary,
    dense,
    drop_registers,
    permutation,
    postselect,
)


class EncodingError(ValueError):
    pass


def qubits_for(n: int) -> int:
    """Smallest register width holding ``n`` basis states (at least one qubit)."""
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


# ---------------------------------------------------------------------------
# Amplitude encoding


@dataclass(frozen=True)
class AmplitudeEncoding:
    source: np.ndarray
    norm: float
    state: Statevector

    @property
    def length(self) -> int:
        return self.source.size


def amplitude_encode(x, register: str = "data") -> tuple[Statevector, float]:
    """Encode ``x`` as ``x / ||x||`` over ``ceil(log2 N)`` qubits, zero padded."""
    x = np.asarray(x)
    if x.ndim != 1 or x.size < 1:
        raise EncodingError("amplitude encoding needs a non-empty 1-D vector")
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise EncodingError("cannot amplitude-encode the zero vector")
    width = qubits_for(x.size)
    amps = np.zeros(2**width, dtype=complex)
    amps[: x.size] = x / norm
    state = Statevector(RegisterLayout(((register, width),)), amps, norm_ledger=norm)
    return state, norm


def amplitude_encoding(x, register: str = "data") -> AmplitudeEncoding:
    state, norm = amplitude_encode(x, register)
    return AmplitudeEncoding(np.asarray(x).copy(), norm, state)


def amplitude_decode(state: Statevector, length: int | None = None) -> np.ndarray:
    """Raw amplitudes (optionally only the first ``length``).

    Exact simulator readout; on hardware this would need tomography.
    Real vectors are returned as real arrays.
    """
    amps = state.amplitudes if length is None else state.amplitudes[:length]
    if np.all(np.abs(amps.imag) < 1e-15):
        return amps.real.copy()
    return amps.copy()


# ---------------------------------------------------------------------------
# Basis encodings

FLAVORS = ("binary", "fixed-point", "unary", "one-hot")


@dataclass(frozen=True)
class BasisEncoding:
    """``flavor`` is one of binary, fixed-point, unary, one-hot.

    Unary: value ``k`` sets the ``k`` most significant qubits, so 2 in a
    width-4 register reads ``|1100>``. One-hot: value ``k`` in ``1..width``
    sets qubit ``k-1``; zero is not representable. Fixed-point: a symmetric
    grid of ``2^width`` points ``scale * (2i + 1 - 2^width) / 2^width``.
    """

    flavor: str
    width: int
    scale: float = 1.0

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise EncodingError(f"unknown flavor {self.flavor!r}; expected one of {FLAVORS}")
        if self.width < 1:
            raise EncodingError("width must be >= 1")
        if self.flavor == "fixed-point" and not self.scale > 0:
            raise EncodingError("fixed-point scale must be positive")

    @property
    def resolution(self) -> float:
        return self.scale * 2.0 ** (-self.width) if self.flavor == "fixed-point" else 1.0


def basis_encode(value, spec: BasisEncoding) -> int:
    w = spec.width
    if spec.flavor == "fixed-point":
        bound = spec.scale * (1 - 2.0**-w)
        if not abs(value) <= bound + 1e-15:
            raise EncodingError(f"{value} outside fixed-point range +/-{bound}")
        raw = (value / spec.scale * 2**w + 2**w - 1) / 2
        return int(min(max(round(raw), 0), 2**w - 1))
    if int(value) != value:
        raise EncodingError(f"{spec.flavor} encoding needs an integer, got {value}")
    value = int(value)
    if spec.flavor == "binary":
        if not 0 <= value < 2**w:
            raise EncodingError(f"{value} does not fit in {w} bits")
        return value
    if spec.flavor == "unary":
        if not 0 <= value <= w:
            raise EncodingError(f"unary width {w} holds 0..{w}, got {value}")
        return ((1 << value) - 1) << (w - value)
    if not 1 <= value <= w:
        raise EncodingError(f"one-hot width {w} holds 1..{w}, got {value}")
    return 1 << (value - 1)


def basis_decode(index: int, spec: BasisEncoding):
    w = spec.width
    if not 0 <= index < 2**w:
        raise EncodingError(f"index {index} outside {w}-qubit register")
    if spec.flavor == "binary":
        return index
    if spec.flavor == "fixed-point":
        return spec.scale * (2 * index + 1 - 2**w) / 2**w
    ones = bin(index).count("1")
    if spec.flavor == "unary":
        if index != ((1 << ones) - 1) << (w - ones):
            raise EncodingError(f"{index:0{w}b} is not a valid unary pattern")
        return ones
    if ones != 1:
        raise EncodingError(f"{index:0{w}b} is not a valid one-hot pattern")
    return index.bit_length()


def bit_pattern(index: int, width: int) -> str:
    """Ket label, most significant qubit first."""
    return format(index, f"0{width}b")


def basis_state(value, spec: BasisEncoding, register: str = "b") -> Statevector:
    layout = RegisterLayout(((register, spec.width),))
    return Statevector.basis(layout, basis_encode(value, spec))


# ---------------------------------------------------------------------------
# Basis -> amplitude conversion


def _angle_register_map(n_index: int, psi_width: int, codes: np.ndarray) -> np.ndarray:
    # |j>|p>|a> -> |j>|p xor code_j>|a>; an involution, hence its own uncompute
    idx = np.arange(2 ** (n_index + psi_width + 1))
    j = idx >> (psi_width + 1)
    p = (idx >> 1) & (2**psi_width - 1)
    a = idx & 1
    new_p = p ^ codes[j]
    return (j << (psi_width + 1)) | (new_p << 1) | a


def _rotation(psi: float) -> np.ndarray:
    # exp(i pi psi Y / 2): |0> -> cos(pi psi/2)|0> - sin(pi psi/2)|1>
    c, s = math.cos(math.pi * psi / 2), math.sin(math.pi * psi / 2)
    return np.array([[c, s], [-s, c]], dtype=complex)


def basis_to_amplitude(d, psi_width: int | None = None) -> tuple[Statevector, float]:
    """Probabilistic conversion of data ``d_j in [0, 1]`` into amplitudes.

    Starts from the uniform superposition over the index register, computes the
    angle ``psi_j = (2/pi) arccos d_j`` into an angle register, rotates an
    ancilla by ``exp(i pi psi_j Y / 2)``, uncomputes the angle register and
    post-selects the ancilla on ``|0>``.

    With ``psi_width=None`` the angle oracle is exact (the rotation is
    controlled directly on the index). With a finite width the angle is
    rounded to ``k / (2^w - 1)`` in a ``w``-qubit register, so the output is
    only approximately proportional to ``d``.

    Returns the index-register state and the success probability, which is
    ``sum(d_j^2) / N`` for the exact oracle.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.size < 1:
        raise EncodingError("need at least one data value")
    if np.any(d < 0) or np.any(d > 1) or not np.all(np.isfinite(d)):
        raise EncodingError("basis_to_amplitude needs every d_j in [0, 1]")
    n = d.size
    n_index = qubits_for(n)
    size = 2**n_index
    psi = np.ones(size)  # padded slots get d = 0, i.e. psi = 1
    psi[:n] = 2 / math.pi * np.arccos(d)

    if psi_width is None:
        layout = RegisterLayout((("index", n_index), ("anc", 1)))
        amps = np.zeros(layout.dim, dtype=complex)
        amps[: 2 * n : 2] = 1 / math.sqrt(n)
        state = Statevector(layout, amps)
        # cos(pi psi_j / 2) is d_j itself; using it avoids cos(arccos(0)) ~ 6e-17
        dp = np.zeros(size)
        dp[:n] = d
        sp = np.sqrt(1.0 - dp**2)
        blocks = np.stack([np.array([[c, s], [-s, c]], dtype=complex) for c, s in zip(dp, sp)])
        rot = np.einsum("jab,jb->ja", blocks, state.amplitudes.reshape(size, 2))
        state = state.with_amplitudes(rot.reshape(-1))
    else:
        if psi_width < 1:
            raise EncodingError("psi_width must be >= 1")
        levels = 2**psi_width - 1
        codes = np.rint(psi * levels).astype(np.int64)
        layout = RegisterLayout((("index", n_index), ("psi", psi_width), ("anc", 1)))
        amps = np.zeros(layout.dim, dtype=complex)
        stride = 2 ** (psi_width + 1)
        amps[: n * stride : stride] = 1 / math.sqrt(n)
        state = Statevector(layout, amps)
        oracle = permutation(_angle_register_map(n_index, psi_width, codes))
        state = apply_unitary(state, oracle)
        blocks = np.stack([_rotation(k / levels) for k in range(2**psi_width)])
        view = state.amplitudes.reshape(size, 2**psi_width, 2)
        rot = np.einsum("pab,jpb->jpa", blocks, view)
        state = state.with_amplitudes(rot.reshape(-1))
        state = apply_unitary(state, oracle)

    state, prob = postselect(state, 0, 0)
    drop = ["anc"] if psi_width is None else ["psi", "anc"]
    state = drop_registers(state, drop)
    return state, prob


# ---------------------------------------------------------------------------
# Block encoding


@dataclass(frozen=True)
class BlockEncoding:
    A: np.ndarray
    alpha: float
    U: UnitaryOp

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def extract(self) -> np.ndarray:
        """``alpha * P1 U P2`` restricted to the original ``N x N`` block."""
        return self.alpha * self.U.data[: self.n, : self.n]


def block_encode(A, alpha: float) -> BlockEncoding:
    """Unitary dilation ``U = [[B, sqrt(I - B B^H)], [sqrt(I - B^H B), -B^H]]``, ``B = A/alpha``.

    ``A`` is zero padded to a power-of-two dimension first; the ancilla is the
    most significant qubit so the ``|0>`` block is the top-left corner.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1]:
        raise EncodingError("block encoding needs a square matrix")
    spectral = float(np.linalg.norm(A, 2))
    if alpha < spectral - 1e-12:
        raise EncodingError(f"alpha = {alpha} is below ||A|| = {spectral}")
    n = A.shape[0]
    size = 2 ** qubits_for(n) if n > 1 else 1
    B = np.zeros((size, size), dtype=complex)
    B[:n, :n] = A / alpha
    # square roots from one SVD so the dilation stays unitary when alpha == ||A||
    W, sig, Vh = np.linalg.svd(B)
    comp = np.sqrt(np.clip(1.0 - sig**2, 0.0, None))
    top_right = (W * comp) @ W.conj().T
    bottom_left = (Vh.conj().T * comp) @ Vh
    U = np.block([[B, top_right], [bottom_left, -B.conj().T]])
    try:
        op = dense(U, name="block-encoding")
    except SimulationError as exc:
        raise EncodingError(str(exc)) from exc
    return BlockEncoding(A, float(alpha), op)
