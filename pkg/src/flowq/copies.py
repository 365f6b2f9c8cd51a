"""Nonlinearity from interacting copies.

Three constructions: a quadratic amplitude map driven by a pointer qubit and
post-selection, mean-field evolution of many copies under a pairwise
Hamiltonian, and a forward-Euler history-state linear system over copies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .encodings import qubits_for
from .oracles import dense_solve
from .statevector import (
    DensityMatrix,
    ImpossibleOutcome,
    RegisterLayout,
    Statevector,
    evolve_hamiltonian,
    partial_trace,
    postselect,
    trace_distance,
)

NORM_TOL = 1e-10


class CopiesError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Quadratic amplitude map


@dataclass(frozen=True)
class QuadraticMap:
    """``f_alpha(z) = sum_kl a[alpha, k, l] z_k z_l`` with ``z_0 = 1``.

    ``a`` has shape ``(n_vars + 1,) * 3``; row ``alpha = 0`` must be the
    constant map ``f_0 = 1``.
    """

    n_vars: int
    a: np.ndarray
    measure_preserving: bool = False

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        object.__setattr__(self, "a", a)
        size = self.n_vars + 1
        if a.shape != (size, size, size):
            raise CopiesError(f"coefficient tensor must have shape {(size,) * 3}, got {a.shape}")
        if np.max(np.abs(a - a.transpose(0, 2, 1))) > 1e-14:
            raise CopiesError("coefficients must be symmetric in (k, l)")
        row0 = np.zeros((size, size))
        row0[0, 0] = 1.0
        if np.max(np.abs(a[0] - row0)) > 1e-14:
            raise CopiesError("row alpha = 0 must encode f_0 = 1")

    @classmethod
    def from_components(cls, components, measure_preserving: bool = False) -> "QuadraticMap":
        """Build from the ``alpha >= 1`` rows (shape ``(n, n+1, n+1)``); symmetrized."""
        comp = np.asarray(components, dtype=complex)
        n = comp.shape[0]
        a = np.zeros((n + 1, n + 1, n + 1), dtype=complex)
        a[0, 0, 0] = 1.0
        a[1:] = (comp + comp.transpose(0, 2, 1)) / 2
        return cls(n, a, measure_preserving)

    @classmethod
    def identity(cls, n_vars: int) -> "QuadraticMap":
        comp = np.zeros((n_vars, n_vars + 1, n_vars + 1))
        for alpha in range(1, n_vars + 1):
            comp[alpha - 1, alpha, 0] = 0.5
            comp[alpha - 1, 0, alpha] = 0.5
        return cls.from_components(comp, measure_preserving=True)

    @classmethod
    def complex_square(cls) -> "QuadraticMap":
        """``(z1, z2) -> (z1^2 - z2^2, 2 z1 z2)``; norm preserving for real unit ``z``."""
        comp = np.zeros((2, 3, 3))
        comp[0, 1, 1] = 1.0
        comp[0, 2, 2] = -1.0
        comp[1, 1, 2] = 1.0
        comp[1, 2, 1] = 1.0
        return cls.from_components(comp, measure_preserving=True)

    def __call__(self, z) -> np.ndarray:
        """Classical ``F(z)`` (components ``1..n``)."""
        zz = np.concatenate([[1.0], np.asarray(z, dtype=complex)])
        return np.einsum("akl,k,l->a", self.a, zz, zz)[1:]

    def operator(self) -> np.ndarray:
        """``A = sum a[alpha,k,l] |alpha 0><k l|`` on two padded copies."""
        size = self.n_vars + 1
        dim = 2 ** qubits_for(size)
        A = np.zeros((dim * dim, dim * dim), dtype=complex)
        for alpha, k, l in itertools.product(range(size), repeat=3):
            if self.a[alpha, k, l] != 0:
                A[alpha * dim, k * dim + l] += self.a[alpha, k, l]
        return A


def encode_phi(z) -> Statevector:
    """``|phi> = (|0> + sum_j z_j |j>) / sqrt(2)`` for unit-norm ``z``."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(z) - 1.0) > NORM_TOL:
        raise CopiesError(f"z must have unit norm, got {np.linalg.norm(z):.12f}")
    width = qubits_for(z.size + 1)
    amps = np.zeros(2**width, dtype=complex)
    amps[0] = 1.0
    amps[1 : z.size + 1] = z
    return Statevector(RegisterLayout((("phi", width),)), amps / math.sqrt(2))


def decode_phi(state: Statevector, n_vars: int) -> np.ndarray:
    amps = state.amplitudes
    return amps[1 : n_vars + 1] / amps[0]


def pointer_hamiltonian(qmap: QuadraticMap) -> np.ndarray:
    """``H = -i A ⊗ |1><0|_P + i A^H ⊗ |0><1|_P`` (pointer is the last qubit)."""
    A = qmap.operator()
    up = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|
    H = -1j * np.kron(A, up) + 1j * np.kron(A.conj().T, up.T)
    if np.max(np.abs(H - H.conj().T)) > 1e-12:
        raise CopiesError("pointer Hamiltonian is not Hermitian")
    return H


@dataclass(frozen=True)
class QuadraticMapResult:
    z_out: np.ndarray
    success_probability: float
    fidelity: float
    state: Statevector


def apply_quadratic_map(qmap: QuadraticMap, z, epsilon: float) -> QuadraticMapResult:
    """Evolve ``|phi>|phi>|0>_P`` by ``exp(i eps H)`` and post-select the pointer on ``|1>``.

    ``z_out`` is read from the first copy's amplitudes conditioned on the
    second copy being ``|0>``, divided by the ``|0>`` amplitude (``f_0 = 1``).
    ``fidelity`` compares the post-selected state with ``|phi'>|0>`` built
    from the classical ``F(z)``.
    """
    if not 0 < epsilon <= 0.2:
        raise CopiesError("epsilon must lie in (0, 0.2]")
    phi = encode_phi(z)
    pointer = Statevector(RegisterLayout((("P", 1),)), np.array([1.0, 0.0]))
    state = Statevector(RegisterLayout((("c1", phi.layout.width("phi")), ("c2", phi.layout.width("phi")))),
                        np.kron(phi.amplitudes, phi.amplitudes)).tensor(pointer)
    state = evolve_hamiltonian(state, pointer_hamiltonian(qmap), epsilon)
    try:
        selected, prob = postselect(state, 0, 1)
    except ImpossibleOutcome as exc:
        raise CopiesError("pointer branch has zero probability") from exc
    dim = 2 ** phi.layout.width("phi")
    block = selected.amplitudes.reshape(dim, dim, 2)[:, :, 1]
    first = block[:, 0]
    if abs(first[0]) < 1e-300:
        raise CopiesError("f_0 amplitude vanished; cannot decode")
    z_out = first[1 : qmap.n_vars + 1] / first[0]

    target = np.zeros((dim, dim), dtype=complex)
    target[0, 0] = 1.0
    target[1 : qmap.n_vars + 1, 0] = qmap(z)
    target /= np.linalg.norm(target)
    fidelity = float(abs(np.vdot(target.reshape(-1), block.reshape(-1))))
    return QuadraticMapResult(z_out, prob, fidelity, selected)


def copy_budget(epsilon: float, steps: int) -> int:
    """Fresh copy pairs needed for ``steps`` chained map applications: ``(16/eps^2)^steps``."""
    per_step = 16 / epsilon**2
    budget = per_step**steps
    rounded = round(budget)
    return int(rounded) if abs(budget - rounded) < 1e-9 * max(1.0, budget) else int(math.ceil(budget))


@dataclass(frozen=True)
class EulerTrajectory:
    z: np.ndarray
    classical: np.ndarray
    success_probabilities: tuple
    copy_budget: int


def euler_iterate(qmap: QuadraticMap, z0, dt: float, steps: int, epsilon: float = 0.05) -> EulerTrajectory:
    """Forward Euler ``z <- z + dt F(z)`` with ``F`` read from the quantum map.

    The Euler sum is formed classically from the decoded ``z_out``. Encoded
    variables must have unit norm, so each iterate is renormalized; the
    classical replica applies the same renormalization with the exact ``F``.
    The copy budget is reported, not allocated.
    """
    if steps < 1:
        raise CopiesError("steps must be >= 1")
    z = np.asarray(z0, dtype=complex) / np.linalg.norm(z0)
    zc = z.copy()
    traj, ref, probs = [z.copy()], [zc.copy()], []
    for _ in range(steps):
        res = apply_quadratic_map(qmap, z, epsilon)
        probs.append(res.success_probability)
        z = z + dt * res.z_out
        z = z / np.linalg.norm(z)
        zc = zc + dt * qmap(zc)
        zc = zc / np.linalg.norm(zc)
        traj.append(z.copy())
        ref.append(zc.copy())
    return EulerTrajectory(np.array(traj), np.array(ref), tuple(probs), copy_budget(epsilon, steps))


# ---------------------------------------------------------------------------
# Mean-field copies


def _swap(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    for i, j in itertools.product(range(d), repeat=2):
        s[j * d + i, i * d + j] = 1.0
    return s


def pair_operator(op: np.ndarray, d: int, n: int, a: int, b: int) -> np.ndarray:
    """``op`` (on ``C^d ⊗ C^d``) acting on copies ``a`` and ``b`` of ``n``."""
    if a == b:
        raise CopiesError("pair needs two distinct copies")
    t = np.asarray(op, dtype=complex).reshape(d, d, d, d)
    mat = np.zeros((d,) * (2 * n), dtype=complex)
    # mat[out..., in...]; identity on every copy other than a, b
    eye_axes = [c for c in range(n) if c not in (a, b)]
    idx = np.indices((d,) * (2 * n)).reshape(2 * n, -1)
    out, inn = idx[:n], idx[n:]
    keep = np.all(out[eye_axes] == inn[eye_axes], axis=0) if eye_axes else np.ones(idx.shape[1], bool)
    vals = t[out[a], out[b], inn[a], inn[b]]
    flat = mat.reshape(-1)
    flat[keep] = vals[keep]
    return flat.reshape(d**n, d**n)


def _binom_inv(n: int, m: int) -> float:
    return 1.0 / math.comb(n, m)


@dataclass(frozen=True)
class MeanFieldSystem:
    """Pairwise interaction ``F`` (``d^2 x d^2``, slots = (target, source)) over ``n`` copies.

    ``F`` is symmetrized under copy exchange on construction, since the
    Hamiltonian sums unordered pairs. ``f(x) = (I ⊗ <x|) F (I ⊗ |x>)``.
    ``normalization="mean-field"`` scales the pair sum by ``1/C(n-1, m)`` so
    each copy feels exactly ``f`` to first order; ``"binomial"`` uses
    ``1/C(n, m)``.
    """

    d: int
    F: np.ndarray
    n: int
    m: int = 1
    anti_hermitian: bool = True
    normalization: str = "mean-field"

    def __post_init__(self):
        if self.m != 1:
            raise CopiesError("only pairwise interactions (m = 1) are supported")
        if self.n < 2:
            raise CopiesError("mean-field evolution needs at least two copies")
        if self.normalization not in ("mean-field", "binomial"):
            raise CopiesError(f"unknown normalization {self.normalization!r}")
        F = np.asarray(self.F, dtype=complex)
        if F.shape != (self.d**2, self.d**2):
            raise CopiesError(f"F must be {self.d**2}x{self.d**2}")
        S = _swap(self.d)
        F = (F + S @ F @ S) / 2
        if self.anti_hermitian and np.max(np.abs(F + F.conj().T)) > 1e-10:
            raise CopiesError("F is not anti-Hermitian")
        object.__setattr__(self, "F", F)

    @property
    def prefactor(self) -> float:
        if self.normalization == "mean-field":
            return _binom_inv(self.n - 1, self.m)
        return _binom_inv(self.n, self.m)

    def f(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        t = self.F.reshape(self.d, self.d, self.d, self.d)
        return np.einsum("acbe,c,e->ab", t, x.conj(), x)

    def pair_sum(self) -> np.ndarray:
        total = np.zeros((self.d**self.n,) * 2, dtype=complex)
        for a, b in itertools.combinations(range(self.n), 2):
            total += pair_operator(self.F, self.d, self.n, a, b)
        return total

    def hamiltonian(self) -> np.ndarray:
        H = -1j * self.prefactor * self.pair_sum()
        if self.anti_hermitian and np.max(np.abs(H - H.conj().T)) > 1e-10:
            raise CopiesError("induced Hamiltonian is not Hermitian")
        return H


@dataclass(frozen=True)
class MeanFieldResult:
    reduced: tuple  # DensityMatrix per step (including step 0)
    classical: np.ndarray
    trace_distances: np.ndarray  # global: reduced state vs Euler trajectory
    step_errors: np.ndarray  # local: one step from the product state of the Euler iterate
    E_norm: float


def _product(x: np.ndarray, n: int) -> np.ndarray:
    amps = x
    for _ in range(n - 1):
        amps = np.kron(amps, x)
    return amps


def meanfield_evolve(sys: MeanFieldSystem, x0, dt: float, steps: int) -> MeanFieldResult:
    """Evolve ``x0^{⊗n}`` by ``exp(-i H dt)`` per step; reduce to copy 0.

    The classical reference is the nonlinear Euler recurrence
    ``x <- (I - dt f(x)) x`` (renormalized, as the quantum state is).
    ``trace_distances[k]`` compares the reduced state after ``k`` steps with
    the ``k``-th Euler iterate. ``step_errors[k]`` is the one-step error:
    ``x_k^{⊗n}`` evolved for ``dt`` and reduced, against ``x_{k+1}``.
    ``E_norm`` is the time-averaged operator norm of ``f`` along the iterates.
    """
    if not sys.anti_hermitian:
        raise CopiesError("meanfield_evolve needs an anti-Hermitian interaction")
    x = np.asarray(x0, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(x) - 1.0) > NORM_TOL:
        raise CopiesError("x0 must have unit norm")
    d, n = sys.d, sys.n
    if d & (d - 1):
        raise CopiesError("single-copy dimension must be a power of two")
    width = d.bit_length() - 1
    layout = RegisterLayout(tuple((f"copy{c}", width) for c in range(n)))
    state = Statevector(layout, _product(x, n))
    H = sys.hamiltonian()

    reduced = [partial_trace(state, "copy0")]
    ref = [x.copy()]
    norms, local = [], []
    xc = x.copy()
    for _ in range(steps):
        state = evolve_hamiltonian(state, H, -dt)
        reduced.append(partial_trace(state, "copy0"))
        fresh = evolve_hamiltonian(Statevector(layout, _product(xc, n)), H, -dt)
        fx = sys.f(xc)
        norms.append(np.linalg.norm(fx, 2))
        xc = xc - dt * fx @ xc
        xc = xc / np.linalg.norm(xc)
        ref.append(xc.copy())
        local.append(trace_distance(partial_trace(fresh, "copy0"), DensityMatrix.pure(xc)))
    dists = np.array([trace_distance(r, DensityMatrix.pure(v)) for r, v in zip(reduced, ref)])
    e_norm = float(np.mean(norms)) if norms else float(np.linalg.norm(sys.f(x), 2))
    return MeanFieldResult(tuple(reduced), np.array(ref), dists, np.array(local), e_norm)


# ---------------------------------------------------------------------------
# History-state linear system


@dataclass(frozen=True)
class HistoryLinearSystem:
    M_matrix: np.ndarray
    B_vector: np.ndarray
    T: int
    dt: float
    n: int
    d: int
    step_operator: np.ndarray

    @property
    def block(self) -> int:
        return self.d**self.n

    def nonzero_blocks(self) -> int:
        b = self.block
        count = 0
        for i in range(self.T + 1):
            for j in range(self.T + 1):
                if np.any(self.M_matrix[i * b : (i + 1) * b, j * b : (j + 1) * b] != 0):
                    count += 1
        return count


def _copy_sum_linear(f: np.ndarray, d: int, n: int) -> np.ndarray:
    total = np.zeros((d**n, d**n), dtype=complex)
    for c in range(n):
        left = np.eye(d**c)
        right = np.eye(d ** (n - c - 1))
        total += np.kron(np.kron(left, f), right)
    return total


def build_history_system(f_spec, b_seq, T: int, dt: float, n: int, normalization: str = "mean-field") -> HistoryLinearSystem:
    """Block-bidiagonal ``M X = B`` over ``n`` copies and ``T + 1`` time slots.

    ``f_spec`` is either a ``d x d`` matrix (linear ``f``, each copy driven
    independently) or a ``d^2 x d^2`` pair interaction (``m = 1``, same
    conventions as :class:`MeanFieldSystem`, anti-Hermiticity not required).
    ``b_seq`` has ``T + 1`` rows; ``b_seq[0]`` is the initial state.
    """
    f_spec = np.asarray(f_spec, dtype=complex)
    b_seq = np.asarray(b_seq, dtype=complex)
    if b_seq.ndim != 2 or b_seq.shape[0] != T + 1:
        raise CopiesError("b_seq needs T + 1 rows")
    d = b_seq.shape[1]
    if f_spec.shape == (d, d):
        gen = _copy_sum_linear(f_spec, d, n)
    elif f_spec.shape == (d * d, d * d):
        if n < 2:
            raise CopiesError("pair interactions need at least two copies")
        mf = MeanFieldSystem(d, f_spec, n, anti_hermitian=False, normalization=normalization)
        gen = mf.prefactor * mf.pair_sum()
    else:
        raise CopiesError(f"f_spec shape {f_spec.shape} matches neither {d}x{d} nor {d * d}x{d * d}")
    size = d**n
    step = np.eye(size) - dt * gen
    M = np.eye(size * (T + 1), dtype=complex)
    for k in range(T):
        M[(k + 1) * size : (k + 2) * size, k * size : (k + 1) * size] = -step
    B = np.zeros(size * (T + 1), dtype=complex)
    for k in range(T + 1):
        bk = b_seq[k]
        tens = bk
        for _ in range(n - 1):
            tens = np.kron(tens, bk)
        B[k * size : (k + 1) * size] = tens if k == 0 else dt * tens
    return HistoryLinearSystem(M, B, T, dt, n, d, step)


@dataclass(frozen=True)
class HistorySolution:
    X: np.ndarray
    blocks: np.ndarray
    extracted: np.ndarray


def solve_history(sys: HistoryLinearSystem, reference=None) -> HistorySolution:
    """Dense solve of ``M X = B`` and per-step single-copy extraction.

    With ``n = 1`` the block is the copy itself. For ``n > 1`` the copy-0
    reduced matrix's top eigenvector gives the direction, ``||X_k||^(1/n)``
    the magnitude; the unobservable global phase is aligned to ``reference``
    when one is given.
    """
    X = dense_solve(sys.M_matrix, sys.B_vector)
    size = sys.block
    blocks = X.reshape(sys.T + 1, size)
    if sys.n == 1:
        return HistorySolution(X, blocks, blocks.copy())
    out = []
    for k, blk in enumerate(blocks):
        norm = np.linalg.norm(blk)
        if norm == 0:
            out.append(np.zeros(sys.d, dtype=complex))
            continue
        mat = blk.reshape(sys.d, -1)
        rho = mat @ mat.conj().T
        w, v = np.linalg.eigh(rho)
        vec = v[:, -1] * norm ** (1.0 / sys.n)
        if reference is not None:
            overlap = np.vdot(vec, reference[k])
            if abs(overlap) > 0:
                vec = vec * overlap / abs(overlap)
        out.append(vec)
    return HistorySolution(X, blocks, np.array(out))


def euler_reference(f_spec, b_seq, T: int, dt: float) -> np.ndarray:
    """Classical ``x_k = (I - dt f(x_{k-1})) x_{k-1} + dt b_k`` from ``x_0 = b_0``."""
    f_spec = np.asarray(f_spec, dtype=complex)
    b_seq = np.asarray(b_seq, dtype=complex)
    d = b_seq.shape[1]
    if f_spec.shape == (d, d):
        def f_of(_x):
            return f_spec
    else:
        S = _swap(d)
        t = ((f_spec + S @ f_spec @ S) / 2).reshape(d, d, d, d)

        def f_of(x):
            return np.einsum("acbe,c,e->ab", t, x.conj(), x)
    from .oracles import euler_nonlinear

    return euler_nonlinear(f_of, b_seq[0], dt, T, b_seq)
