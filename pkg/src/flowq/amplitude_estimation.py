"""Quantum amplitude estimation and quantum mean estimation.

The phase register ``R`` holds ``n_phase`` qubits, the system register ``S``
holds the prepared state. QAE runs QFT on ``R``, the controlled powers
``Q^(2^t)`` (one per phase qubit), the inverse QFT, and reads ``R`` only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statevector import (
    RegisterLayout,
    SimulationError,
    Statevector,
    UnitaryOp,
    apply_qft,
    apply_unitary,
    dense,
    marginal_probabilities,
    measure_counts,
    qft_matrix,
)

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class GoodSubspacePredicate:
    """Boolean marker over the system register's basis indices."""

    mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool).reshape(-1))

    @classmethod
    def from_function(cls, fn, dim: int) -> "GoodSubspacePredicate":
        return cls(np.array([bool(fn(j)) for j in range(dim)]))

    def __call__(self, j: int) -> int:
        return int(self.mask[j])

    @property
    def dim(self) -> int:
        return self.mask.size


@dataclass(frozen=True)
class GroverOperator:
    A: UnitaryOp
    chi: GoodSubspacePredicate
    initial: int
    Q: UnitaryOp
    a: float
    theta: float
    degenerate: bool

    @property
    def system_qubits(self) -> int:
        return self.A.num_qubits

    @property
    def prepared(self) -> np.ndarray:
        return self.A.data[:, self.initial]

    def restricted_eigenphases(self) -> np.ndarray:
        """Eigenphases of ``Q`` restricted to span{|n0>, |n1>} (sorted)."""
        if self.degenerate:
            raise SimulationError("restricted subspace is one-dimensional for a in {0, 1}")
        psi = self.prepared
        good = np.where(self.chi.mask, psi, 0)
        bad = psi - good
        basis = np.stack([bad / np.linalg.norm(bad), good / np.linalg.norm(good)], axis=1)
        small = basis.conj().T @ self.Q.data @ basis
        return np.sort(np.angle(np.linalg.eigvals(small)))


@dataclass(frozen=True)
class AmplitudeEstimate:
    a_hat: float
    y: int
    n_phase: int
    distribution: np.ndarray | None = None
    M: int = 1
    shots_used: int = 0
    delta: float | None = None
    samples: tuple[float, ...] = ()
    scale: float = 1.0
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return 2**self.n_phase

    @property
    def estimate(self) -> float:
        """``a_hat`` mapped back through any padding rescale (for mean estimation)."""
        return self.a_hat * self.scale


def estimate_from_outcome(y: int, n_phase: int) -> float:
    return math.sin(math.pi * y / 2**n_phase) ** 2


def median_failure_bound(M: int) -> float:
    """Failure probability bound ``exp(-M/8)`` of the median of ``M`` QAE runs."""
    return math.exp(-M / 8)


def _as_dense(A) -> UnitaryOp:
    if isinstance(A, UnitaryOp):
        if A.kind == "dense":
            return A
        return dense(A.matrix(), name=A.name)
    return dense(np.asarray(A, dtype=complex))


def build_grover(A, chi: GoodSubspacePredicate, initial: int = 0) -> GroverOperator:
    """``Q = -A S_init A^-1 S_chi``.

    ``S_init`` reflects about the preparation input basis state ``initial``
    (``|0>`` in the textbook form) and ``S_chi`` flips the sign of good states.
    """
    A = _as_dense(A)
    dim = A.data.shape[0]
    if chi.dim != dim:
        raise SimulationError(f"predicate covers {chi.dim} states, A acts on {dim}")
    if not 0 <= initial < dim:
        raise SimulationError(f"initial index {initial} out of range")
    s_init = np.ones(dim)
    s_init[initial] = -1.0
    s_chi = np.where(chi.mask, -1.0, 1.0)
    Amat = A.data
    Q = -(Amat * s_init) @ Amat.conj().T * s_chi[None, :]
    psi = Amat[:, initial]
    a = float(np.sum(np.abs(psi[chi.mask]) ** 2))
    a = min(max(a, 0.0), 1.0)
    theta = math.asin(math.sqrt(a))
    degenerate = a < DEGENERATE_TOL or a > 1 - DEGENERATE_TOL
    return GroverOperator(A, chi, initial, dense(Q, name="Q"), a, theta, degenerate)


def qae_distribution(g: GroverOperator, n_phase: int) -> np.ndarray:
    """Exact outcome distribution of the phase register."""
    if n_phase < 1:
        raise SimulationError("n_phase must be >= 1")
    n_sys = g.system_qubits
    layout = RegisterLayout((("R", n_phase), ("S", n_sys)))
    state = Statevector.zeros(layout)
    sys_init = np.zeros(2**n_sys, dtype=complex)
    sys_init[g.initial] = 1.0
    amps = np.zeros(layout.dim, dtype=complex)
    amps[: 2**n_sys] = g.A.data @ sys_init
    state = state.with_amplitudes(amps)
    state = apply_qft(state, "R")
    r_qubits = layout.qubits("R")
    s_qubits = layout.qubits("S")
    power = g.Q.data
    for t in range(n_phase):
        control = r_qubits[n_phase - 1 - t]
        op = dense(power).controlled_by([control])
        state = apply_unitary(state, op, s_qubits)
        power = power @ power
    state = apply_qft(state, "R", inverse=True)
    return marginal_probabilities(state, "R")


def modal_outcome(distribution: np.ndarray) -> int:
    # ties (y vs N - y) give the same estimate; take the smallest y
    return int(np.flatnonzero(distribution >= distribution.max() - 1e-12)[0])


def qae(g: GroverOperator, n_phase: int, mode: str = "exact", seed: int | None = None) -> AmplitudeEstimate:
    """Amplitude estimation of ``g.a`` with ``n_phase`` phase qubits.

    ``mode="exact"`` returns the full distribution and its modal outcome;
    ``mode="sampled"`` draws one measurement of the phase register with ``seed``.
    """
    dist = qae_distribution(g, n_phase)
    if mode == "exact":
        y = modal_outcome(dist)
        shots = 0
    elif mode == "sampled":
        if seed is None:
            raise SimulationError("sampled mode needs a seed")
        y = _sample(dist, seed)
        shots = 1
    else:
        raise SimulationError(f"unknown QAE mode {mode!r}")
    return AmplitudeEstimate(
        estimate_from_outcome(y, n_phase), y, n_phase, dist, M=1, shots_used=shots,
        degenerate=g.degenerate,
    )


def _sample(dist: np.ndarray, seed: int) -> int:
    n_phase = int(dist.size).bit_length() - 1
    layout = RegisterLayout((("R", n_phase),))
    state = Statevector(layout, np.sqrt(dist).astype(complex), unnormalized=True)
    counts = measure_counts(state, "R", 1, seed)
    return next(iter(counts))


def qae_median(g: GroverOperator, n_phase: int, M: int, seed: int) -> AmplitudeEstimate:
    """Median of ``M`` sampled QAE runs; run ``r`` uses seed ``seed + r``."""
    if M < 1 or M % 2 == 0:
        raise SimulationError("M must be a positive odd integer")
    dist = qae_distribution(g, n_phase)
    ys = [_sample(dist, seed + r) for r in range(M)]
    estimates = [estimate_from_outcome(y, n_phase) for y in ys]
    order = np.argsort(estimates, kind="stable")
    mid = int(order[M // 2])
    return AmplitudeEstimate(
        estimates[mid], ys[mid], n_phase, dist, M=M, shots_used=M,
        delta=median_failure_bound(M), samples=tuple(estimates), degenerate=g.degenerate,
    )


# ---------------------------------------------------------------------------
# Mean estimation


def _pad_samples(g_samples) -> tuple[np.ndarray, int]:
    g = np.asarray(g_samples, dtype=float).reshape(-1)
    if g.size < 1:
        raise SimulationError("need at least one sample")
    if np.any(g < 0) or np.any(g > 1) or not np.all(np.isfinite(g)):
        raise SimulationError("mean estimation needs samples in [0, 1]")
    n = max(1, math.ceil(math.log2(g.size))) if g.size > 1 else 1
    padded = np.zeros(2**n)
    padded[: g.size] = g
    return padded, n


def mean_oracle(g_samples) -> UnitaryOp:
    """Block-diagonal rotation on ``|j>|c>`` (chaperon ``c`` is the last qubit).

    ``|j>|1> -> sqrt(g_j)|j>|1> + sqrt(1-g_j)|j>|0>`` and
    ``|j>|0> -> sqrt(g_j)|j>|0> - sqrt(1-g_j)|j>|1>``
    (the relative minus sign keeps each block orthogonal).
    Samples are zero padded to a power of two.
    """
    g, _ = _pad_samples(g_samples)
    size = g.size
    root_g = np.sqrt(g)
    root_b = np.sqrt(1.0 - g)
    mat = np.zeros((2 * size, 2 * size))
    j = np.arange(size)
    mat[2 * j, 2 * j] = root_g
    mat[2 * j + 1, 2 * j] = -root_b
    mat[2 * j, 2 * j + 1] = root_b
    mat[2 * j + 1, 2 * j + 1] = root_g
    return dense(mat, name="Lambda2")


def mean_estimation_grover(g_samples) -> GroverOperator:
    """``A = Lambda2 (F_n ⊗ I)`` started from ``|0...0>|1>_c``; good means chaperon = 1."""
    g, n = _pad_samples(g_samples)
    lam = mean_oracle(g)
    prep = lam.data @ np.kron(qft_matrix(n), np.eye(2))
    chi = GoodSubspacePredicate(np.arange(2 * g.size) % 2 == 1)
    return build_grover(dense(prep, name="A"), chi, initial=1)


def estimate_mean(g_samples, n_phase: int, M: int = 1, seed: int | None = None,
                  mode: str = "exact") -> AmplitudeEstimate:
    """Estimate ``mean(g_samples)`` with amplitude estimation.

    ``mode="exact"`` uses the modal outcome of the exact distribution;
    ``mode="sampled"`` takes the median of ``M`` seeded runs. Zero padding to
    a power of two is undone through :attr:`AmplitudeEstimate.scale`.
    """
    g = np.asarray(g_samples, dtype=float).reshape(-1)
    grover = mean_estimation_grover(g)
    padded_size = grover.A.data.shape[0] // 2
    if mode == "exact":
        est = qae(grover, n_phase, "exact")
    elif mode == "sampled":
        if seed is None:
            raise SimulationError("sampled mode needs a seed")
        est = qae_median(grover, n_phase, M, seed)
    else:
        raise SimulationError(f"unknown QAE mode {mode!r}")
    scale = padded_size / g.size
    return AmplitudeEstimate(
        est.a_hat, est.y, est.n_phase, est.distribution, M=est.M, shots_used=est.shots_used,
        delta=est.delta, samples=est.samples, scale=scale, degenerate=grover.degenerate,
        extra={"true_mean": float(g.mean())},
    )
