"""Dense statevector simulation.

Conventions used throughout the package:

* qubit 0 is the least-significant bit of a basis index;
* registers are listed most-significant-first, so a layout
  ``[("R", 3), ("S", 2)]`` gives kets printed as ``|r>_R |s>_S`` with
  basis index ``r * 4 + s``.

Every operation returns a new :class:`Statevector`; inputs are never mutated.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10
ZERO_BRANCH_TOL = 1e-12
DEFAULT_MAX_QUBITS = 22
EIGH_MAX_DIM = 2**12


class SimulationError(ValueError):
    """Raised when a simulator precondition is violated."""


class ImpossibleOutcome(SimulationError):
    """Post-selection on a branch with (numerically) zero probability."""


def max_qubits() -> int:
    """Qubit cap, overridable with the ``FLOWQ_MAX_QUBITS`` environment variable."""
    raw = os.environ.get("FLOWQ_MAX_QUBITS")
    return int(raw) if raw else DEFAULT_MAX_QUBITS


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(name), int(width)) for name, width in self.registers)
        object.__setattr__(self, "registers", regs)
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise SimulationError(f"register names must be unique, got {names}")
        if any(width < 0 for _, width in regs):
            raise SimulationError("register widths must be non-negative")
        if self.total_qubits > max_qubits():
            raise SimulationError(
                f"layout needs {self.total_qubits} qubits, cap is {max_qubits()}"
            )

    @classmethod
    def of(cls, *registers: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(registers))

    @property
    def total_qubits(self) -> int:
        return sum(width for _, width in self.registers)

    @property
    def dim(self) -> int:
        return 2**self.total_qubits

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.registers]

    def width(self, name: str) -> int:
        for reg, width in self.registers:
            if reg == name:
                return width
        raise SimulationError(f"unknown register {name!r}")

    def qubits(self, name: str) -> tuple[int, ...]:
        """Qubit indices of a register, most-significant first."""
        offset = self.total_qubits
        for reg, width in self.registers:
            offset -= width
            if reg == name:
                return tuple(range(offset + width - 1, offset - 1, -1))
        raise SimulationError(f"unknown register {name!r}")

    def __str__(self) -> str:
        return " ".join(f"{name}[{width}]" for name, width in self.registers)


@dataclass(frozen=True)
class Statevector:
    layout: RegisterLayout
    amplitudes: np.ndarray
    norm_ledger: float = 1.0
    unnormalized: bool = False

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if amps.size != self.layout.dim:
            raise SimulationError(
                f"{amps.size} amplitudes do not match layout {self.layout} "
                f"(dim {self.layout.dim})"
            )
        if not self.norm_ledger > 0:
            raise SimulationError("norm_ledger must be positive")
        if not self.unnormalized and abs(np.linalg.norm(amps) - 1.0) > UNITARY_TOL:
            raise SimulationError(
                f"statevector norm {np.linalg.norm(amps):.3e} deviates from 1"
            )

    @classmethod
    def zeros(cls, layout: RegisterLayout) -> "Statevector":
        amps = np.zeros(layout.dim, dtype=complex)
        amps[0] = 1.0
        return cls(layout, amps)

    @classmethod
    def basis(cls, layout: RegisterLayout, index: int) -> "Statevector":
        if not 0 <= index < layout.dim:
            raise SimulationError(f"basis index {index} out of range")
        amps = np.zeros(layout.dim, dtype=complex)
        amps[index] = 1.0
        return cls(layout, amps)

    @classmethod
    def from_registers(cls, layout: RegisterLayout, **values: int) -> "Statevector":
        """Basis state with the given integer value in each named register."""
        return cls.basis(layout, compose_index(layout, **values))

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_amplitudes(self, amplitudes: np.ndarray, **kwargs) -> "Statevector":
        return replace(self, amplitudes=amplitudes, **kwargs)

    def tensor(self, other: "Statevector") -> "Statevector":
        """``self ⊗ other``; ``self`` occupies the more significant qubits."""
        layout = RegisterLayout(self.layout.registers + other.layout.registers)
        return Statevector(
            layout,
            np.kron(self.amplitudes, other.amplitudes),
            norm_ledger=self.norm_ledger * other.norm_ledger,
            unnormalized=self.unnormalized or other.unnormalized,
        )


def compose_index(layout: RegisterLayout, **values: int) -> int:
    index = 0
    for name, width in layout.registers:
        value = int(values.pop(name, 0))
        if not 0 <= value < 2**width:
            raise SimulationError(f"value {value} does not fit register {name}[{width}]")
        index = (index << width) | value
    if values:
        raise SimulationError(f"unknown registers {sorted(values)}")
    return index


def split_index(layout: RegisterLayout, index: int) -> dict[str, int]:
    out = {}
    for name, width in reversed(layout.registers):
        out[name] = index & (2**width - 1)
        index >>= width
    return dict(reversed(list(out.items())))


# ---------------------------------------------------------------------------
# Operators


@dataclass(frozen=True)
class UnitaryOp:
    """A unitary acting on selected qubits.

    ``kind`` is one of ``dense``, ``diagonal``, ``permutation``, ``controlled``.
    ``data`` is the matrix, the diagonal phases, the permutation array
    (``perm[i]`` is the image of local basis index ``i``) or the wrapped
    :class:`UnitaryOp` respectively. ``targets`` lists qubit indices
    most-significant first; ``None`` means "all qubits of the state, in order".
    """

    kind: str
    data: object
    targets: tuple[int, ...] | None = None
    controls: tuple[int, ...] = ()
    control_values: tuple[int, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("dense", "diagonal", "permutation", "controlled"):
            raise SimulationError(f"unknown operator kind {self.kind!r}")
        if self.targets is not None:
            object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if self.kind == "dense":
            mat = np.asarray(self.data, dtype=complex)
            object.__setattr__(self, "data", mat)
            n = mat.shape[0]
            if mat.ndim != 2 or mat.shape[1] != n or n & (n - 1):
                raise SimulationError(f"dense operator must be 2^k square, got {mat.shape}")
            if not np.allclose(mat @ mat.conj().T, np.eye(n), atol=UNITARY_TOL, rtol=0):
                raise SimulationError("dense operator is not unitary within 1e-10")
        elif self.kind == "diagonal":
            diag = np.asarray(self.data, dtype=complex).reshape(-1)
            object.__setattr__(self, "data", diag)
            if np.max(np.abs(np.abs(diag) - 1.0), initial=0.0) > UNITARY_TOL:
                raise SimulationError("diagonal operator entries must have unit modulus")
        elif self.kind == "permutation":
            perm = np.asarray(self.data, dtype=np.int64).reshape(-1)
            object.__setattr__(self, "data", perm)
            if not np.array_equal(np.sort(perm), np.arange(perm.size)):
                raise SimulationError("permutation operator is not a bijection")
        else:
            if not isinstance(self.data, UnitaryOp):
                raise SimulationError("controlled operator must wrap a UnitaryOp")
            if len(self.control_values) != len(self.controls):
                object.__setattr__(self, "control_values", (1,) * len(self.controls))

    @property
    def num_qubits(self) -> int:
        if self.kind == "controlled":
            return self.data.num_qubits + len(self.controls)
        size = self.data.shape[0] if self.kind == "dense" else self.data.size
        return int(size).bit_length() - 1

    def on(self, targets: Sequence[int]) -> "UnitaryOp":
        return replace(self, targets=tuple(targets))

    def controlled_by(self, controls: Sequence[int], values: Sequence[int] | None = None) -> "UnitaryOp":
        values = tuple(values) if values is not None else (1,) * len(controls)
        return UnitaryOp("controlled", self, controls=tuple(controls), control_values=values)

    def matrix(self) -> np.ndarray:
        """Dense matrix on the operator's own qubits (controls first, then targets)."""
        if self.kind == "dense":
            return self.data
        if self.kind == "diagonal":
            return np.diag(self.data)
        if self.kind == "permutation":
            n = self.data.size
            mat = np.zeros((n, n), dtype=complex)
            mat[self.data, np.arange(n)] = 1.0
            return mat
        inner = self.data.matrix()
        nc = len(self.controls)
        block = int("".join(str(v) for v in self.control_values), 2) if nc else 0
        mat = np.eye(2**nc * inner.shape[0], dtype=complex)
        sl = slice(block * inner.shape[0], (block + 1) * inner.shape[0])
        mat[sl, sl] = inner
        return mat

    def dagger(self) -> "UnitaryOp":
        if self.kind == "dense":
            return replace(self, data=self.data.conj().T)
        if self.kind == "diagonal":
            return replace(self, data=self.data.conj())
        if self.kind == "permutation":
            inv = np.empty_like(self.data)
            inv[self.data] = np.arange(self.data.size)
            return replace(self, data=inv)
        return replace(self, data=self.data.dagger())


def dense(matrix, targets=None, name="") -> UnitaryOp:
    return UnitaryOp("dense", matrix, targets, name=name)


def diagonal(phases, targets=None, name="") -> UnitaryOp:
    return UnitaryOp("diagonal", phases, targets, name=name)


def permutation(perm, targets=None, name="") -> UnitaryOp:
    return UnitaryOp("permutation", perm, targets, name=name)


H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _check_targets(n: int, qubits: Iterable[int]) -> None:
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise SimulationError(f"repeated qubit in {qubits}")
    for q in qubits:
        if not 0 <= q < n:
            raise SimulationError(f"qubit {q} out of range for {n}-qubit state")


def _axis(n: int, qubit: int) -> int:
    # tensor axis 0 holds the most significant qubit
    return n - 1 - qubit


def _apply_local(amps: np.ndarray, n: int, op: UnitaryOp, targets: tuple[int, ...]) -> np.ndarray:
    """Apply a non-controlled op to the flat amplitude array (returns a new array)."""
    k = len(targets)
    psi = amps.reshape((2,) * n) if n else amps.reshape(())
    axes = [_axis(n, q) for q in targets]
    moved = np.moveaxis(psi, axes, range(k)).reshape(2**k, -1)
    if op.kind == "dense":
        out = op.data @ moved
    elif op.kind == "diagonal":
        out = op.data[:, None] * moved
    else:
        out = np.empty_like(moved)
        out[op.data] = moved
    out = out.reshape((2,) * n)
    return np.moveaxis(out, range(k), axes).reshape(-1)


def _apply(amps: np.ndarray, n: int, op: UnitaryOp, targets: tuple[int, ...]) -> np.ndarray:
    if op.kind != "controlled":
        return _apply_local(amps, n, op, targets)
    inner = op.data
    controls = op.controls
    inner_targets = targets
    _check_targets(n, tuple(controls) + tuple(inner_targets))
    psi = amps.reshape((2,) * n).copy()
    index = [slice(None)] * n
    for q, v in zip(controls, op.control_values):
        index[_axis(n, q)] = int(v)
    index = tuple(index)
    # the block where all controls match is a tensor over the remaining qubits
    block = psi[index]
    rest = [q for q in range(n) if q not in controls]
    m = len(rest)
    # renumber targets inside the block: remaining qubits keep relative order
    remap = {q: i for i, q in enumerate(sorted(rest))}
    local_targets = tuple(remap[q] for q in inner_targets)
    inner_plain = replace(inner, targets=None)
    new_block = _apply(block.reshape(-1), m, inner_plain, local_targets)
    psi[index] = new_block.reshape(block.shape)
    return psi.reshape(-1)


def apply_unitary(state: Statevector, op: UnitaryOp, targets: Sequence[int] | str | None = None) -> Statevector:
    """Apply ``op`` to ``state``.

    ``targets`` overrides ``op.targets``; a register name selects that register's qubits.
    """
    n = state.num_qubits
    if isinstance(targets, str):
        targets = state.layout.qubits(targets)
    if targets is None:
        targets = op.targets
    if op.kind == "controlled":
        if targets is None:
            targets = op.data.targets
        if targets is None:
            raise SimulationError("controlled operator needs explicit targets")
    elif targets is None:
        targets = tuple(range(n - 1, -1, -1))
    targets = tuple(targets)
    own = op.data.num_qubits if op.kind == "controlled" else op.num_qubits
    if len(targets) != own:
        raise SimulationError(f"operator acts on {own} qubits, got targets {targets}")
    _check_targets(n, targets + tuple(op.controls))
    new = _apply(state.amplitudes, n, op, targets)
    return state.with_amplitudes(new)


def apply_matrix(state: Statevector, matrix: np.ndarray, targets: Sequence[int] | str | None = None) -> Statevector:
    return apply_unitary(state, dense(matrix), targets)


# ---------------------------------------------------------------------------
# Library operators


def qft_matrix(n: int) -> np.ndarray:
    if n < 1:
        raise SimulationError("QFT needs at least one qubit")
    if n > max_qubits():
        raise SimulationError(f"QFT on {n} qubits exceeds cap {max_qubits()}")
    size = 2**n
    j = np.arange(size)
    return np.exp(2j * np.pi * np.outer(j, j) / size) / np.sqrt(size)


def qft(n: int) -> UnitaryOp:
    """``U[j, k] = exp(2 pi i j k / 2^n) / sqrt(2^n)``."""
    return dense(qft_matrix(n), name=f"QFT{n}")


def iqft(n: int) -> UnitaryOp:
    return dense(qft_matrix(n).conj().T, name=f"IQFT{n}")


def apply_qft(state: Statevector, register: str, inverse: bool = False) -> Statevector:
    """QFT on a register via FFT along that register's axis (same matrix as :func:`qft`)."""
    width = state.layout.width(register)
    if width == 0:
        return state
    qubits = state.layout.qubits(register)
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n)
    axes = [_axis(n, q) for q in qubits]
    moved = np.moveaxis(psi, axes, range(width))
    shape = moved.shape
    flat = moved.reshape(2**width, -1)
    if inverse:
        out = np.fft.fft(flat, axis=0, norm="ortho")
    else:
        out = np.fft.ifft(flat, axis=0, norm="ortho")
    out = np.moveaxis(out.reshape(shape), range(width), axes)
    return state.with_amplitudes(out.reshape(-1))


# ---------------------------------------------------------------------------
# Measurement-like operations


def postselect(state: Statevector, qubit: int, outcome: int) -> tuple[Statevector, float]:
    """Keep the branch where ``qubit`` reads ``outcome``; renormalize it.

    The returned state keeps its layout (the selected qubit is left in
    ``|outcome>``) and its ``norm_ledger`` is multiplied by ``sqrt(p)``.
    """
    n = state.num_qubits
    _check_targets(n, [qubit])
    psi = state.amplitudes.reshape((2,) * n)
    ax = _axis(n, qubit)
    mask = np.zeros(2, dtype=bool)
    mask[int(outcome)] = True
    shape = [1] * n
    shape[ax] = 2
    branch = np.where(mask.reshape(shape), psi, 0.0).reshape(-1)
    total = float(np.vdot(state.amplitudes, state.amplitudes).real)
    weight = float(np.vdot(branch, branch).real)
    prob = weight / total
    if prob < ZERO_BRANCH_TOL:
        raise ImpossibleOutcome(f"qubit {qubit} = {outcome} has probability {prob:.3e}")
    out = branch / np.sqrt(weight)
    return (
        replace(state, amplitudes=out, norm_ledger=state.norm_ledger * np.sqrt(prob), unnormalized=False),
        prob,
    )


def postselect_register(state: Statevector, register: str, value: int) -> tuple[Statevector, float]:
    """Post-select every qubit of ``register`` onto the bits of ``value``."""
    prob = 1.0
    width = state.layout.width(register)
    for pos, q in enumerate(state.layout.qubits(register)):
        bit = (value >> (width - 1 - pos)) & 1
        state, p = postselect(state, q, bit)
        prob *= p
    return state, prob


def drop_registers(state: Statevector, names: Sequence[str]) -> Statevector:
    """Remove registers known to be in ``|0...0>`` (e.g. after post-selection)."""
    layout = state.layout
    keep = [(n, w) for n, w in layout.registers if n not in names]
    psi = state.amplitudes.reshape([2**w for _, w in layout.registers])
    index = tuple(0 if n in names else slice(None) for n, _ in layout.registers)
    sub = psi[index].reshape(-1)
    leak = state.norm() ** 2 - np.vdot(sub, sub).real
    if leak > 1e-10:
        raise SimulationError(f"registers {list(names)} are not in |0>: weight {leak:.3e} outside")
    return Statevector(RegisterLayout(tuple(keep)), sub, norm_ledger=state.norm_ledger,
                       unnormalized=state.unnormalized)


def marginal_probabilities(state: Statevector, register: str) -> np.ndarray:
    layout = state.layout
    widths = [w for _, w in layout.registers]
    probs = state.probabilities().reshape([2**w for w in widths])
    pos = layout.names.index(register)
    other = tuple(i for i in range(len(widths)) if i != pos)
    marg = probs.sum(axis=other) if other else probs
    return marg / marg.sum()


def measure_counts(state: Statevector, register: str, shots: int, seed: int) -> dict[int, int]:
    """Sample ``shots`` measurements of one register. Deterministic per seed."""
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    probs = marginal_probabilities(state, register)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    return {int(i): int(c) for i, c in enumerate(counts) if c}


# ---------------------------------------------------------------------------
# Density matrices


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", rho)
        if not self.check:
            return
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise SimulationError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise SimulationError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-10:
            raise SimulationError(f"density matrix trace {np.trace(rho).real:.12f} != 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise SimulationError("density matrix has negative eigenvalues")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def pure(cls, vec: np.ndarray) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.entries) > tol))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


def trace_distance(a: DensityMatrix | np.ndarray, b: DensityMatrix | np.ndarray) -> float:
    ra = a.entries if isinstance(a, DensityMatrix) else a
    rb = b.entries if isinstance(b, DensityMatrix) else b
    return float(0.5 * np.abs(np.linalg.eigvalsh(ra - rb)).sum())


def partial_trace(state: Statevector, keep: Sequence[str] | str) -> DensityMatrix:
    """Reduced density matrix on the registers in ``keep`` (layout order)."""
    if isinstance(keep, str):
        keep = [keep]
    keep = list(keep)
    if not keep:
        raise SimulationError("partial_trace needs at least one register to keep")
    layout = state.layout
    for name in keep:
        layout.width(name)
    dims = [2**w for _, w in layout.registers]
    psi = state.amplitudes.reshape(dims)
    kept = [i for i, name in enumerate(layout.names) if name in keep]
    traced = [i for i in range(len(dims)) if i not in kept]
    moved = np.transpose(psi, kept + traced)
    dk = int(np.prod([dims[i] for i in kept]))
    mat = moved.reshape(dk, -1)
    rho = mat @ mat.conj().T
    rho = rho / np.trace(rho).real
    return DensityMatrix(rho)


# ---------------------------------------------------------------------------
# Hamiltonian evolution


def _check_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise SimulationError("Hamiltonian must be square")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise SimulationError("Hamiltonian is not Hermitian within 1e-10")
    return h


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(i H t)`` by eigendecomposition."""
    h = _check_hermitian(h)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.exp(1j * w * t)) @ v.conj().T


def _series_evolve(h: np.ndarray, vec: np.ndarray, t: float, tol: float = 1e-15) -> np.ndarray:
    # split so each sub-step has ||H dt|| <= 1, then sum the Taylor series
    # until the remainder bound ||H dt||^{k+1}/(k+1)! drops below tol
    bound = float(np.abs(h).sum(axis=1).max())
    steps = max(1, int(np.ceil(abs(t) * bound)))
    dt = t / steps
    x = abs(dt) * bound
    out = vec.astype(complex)
    for _ in range(steps):
        term = out.copy()
        acc = out.copy()
        k = 0
        remainder = 1.0
        while True:
            k += 1
            term = (1j * dt / k) * (h @ term)
            acc = acc + term
            remainder = remainder * x / (k + 1)
            if remainder < tol:
                break
        out = acc
    return out


def evolve_hamiltonian(state: Statevector, h: np.ndarray, t: float) -> Statevector:
    """``state <- exp(i H t) state`` (the positive-exponent convention)."""
    h = _check_hermitian(h)
    if h.shape[0] != state.layout.dim:
        raise SimulationError(f"Hamiltonian dim {h.shape[0]} != state dim {state.layout.dim}")
    if h.shape[0] <= EIGH_MAX_DIM:
        new = expm_hermitian(h, t) @ state.amplitudes
    else:
        new = _series_evolve(h, state.amplitudes, t)
    return state.with_amplitudes(new)
