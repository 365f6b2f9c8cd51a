"""D1Q2 lattice Boltzmann for advection-diffusion, classically and as a quantum circuit.

Layout of the quantum register, most significant first: ancilla ``anc``
(collision LCU), velocity qubit ``v`` (0 moves right, 1 moves left) and the
site register. The flattened distribution is ``[f1_0..f1_{M-1}, f2_0..f2_{M-1}]``.

Relaxation is fixed to ``omega = 1`` on the quantum path, so collision maps
the vector ``[phi, phi]`` straight to the equilibrium ``[B1 phi, B2 phi]``.
"""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .statevector import (
    H,
    SWAP,
    ImpossibleOutcome,
    RegisterLayout,
    Statevector,
    apply_unitary,
    dense,
    diagonal,
    permutation,
    postselect,
)

ADMISSIBLE_TOL = 1e-12


class QLBMError(ValueError):
    pass


@dataclass(frozen=True)
class D1Q2Params:
    """Lattice of ``M`` periodic sites, velocities ``c = (+1, -1)``, weights ``w = (1/2, 1/2)``."""

    M: int
    u: float = 0.0
    w: tuple = (0.5, 0.5)
    c_s2: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.M < 2 or self.M & (self.M - 1):
            raise QLBMError(f"M = {self.M} must be a power of two >= 2")
        if not self.c_s2 > 0:
            raise QLBMError("c_s2 must be positive")
        if abs(self.u) > self.c_s2 + ADMISSIBLE_TOL:
            raise QLBMError(f"|u| = {abs(self.u)} exceeds c_s2 = {self.c_s2}")
        if not 0 < self.omega <= 2:
            raise QLBMError("omega must lie in (0, 2]")

    @property
    def site_qubits(self) -> int:
        return self.M.bit_length() - 1

    @property
    def qubit_count(self) -> int:
        return 2 + self.site_qubits

    @property
    def diffusivity(self) -> float:
        return self.c_s2 * (1 / self.omega - 0.5)

    def B(self) -> tuple[float, float]:
        return (self.w[0] * (1 + self.u / self.c_s2), self.w[1] * (1 - self.u / self.c_s2))


@dataclass(frozen=True)
class LatticeField:
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).reshape(-1)
        if not np.all(np.isfinite(phi)):
            raise QLBMError("field entries must be finite")
        object.__setattr__(self, "phi", phi)

    @property
    def mass(self) -> float:
        return float(self.phi.sum())


@dataclass(frozen=True)
class DistributionVector:
    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).reshape(-1)
        if f.size % 2:
            raise QLBMError("distribution length must be 2M")
        object.__setattr__(self, "f", f)

    @property
    def M(self) -> int:
        return self.f.size // 2

    @property
    def f1(self) -> np.ndarray:
        return self.f[: self.M]

    @property
    def f2(self) -> np.ndarray:
        return self.f[self.M :]

    def moment(self) -> LatticeField:
        return LatticeField(self.f1 + self.f2)


# ---------------------------------------------------------------------------
# Classical reference


def equilibrium(field: LatticeField, p: D1Q2Params) -> DistributionVector:
    b1, b2 = p.B()
    return DistributionVector(np.concatenate([b1 * field.phi, b2 * field.phi]))


def classical_stream(d: DistributionVector) -> DistributionVector:
    return DistributionVector(np.concatenate([np.roll(d.f1, 1), np.roll(d.f2, -1)]))


def classical_collide(d: DistributionVector, p: D1Q2Params) -> DistributionVector:
    """BGK: ``f <- f + omega (f_eq - f)``."""
    feq = equilibrium(d.moment(), p)
    return DistributionVector(d.f + p.omega * (feq.f - d.f))


def classical_distribution_step(d: DistributionVector, p: D1Q2Params) -> DistributionVector:
    return classical_stream(classical_collide(d, p))


def classical_lbm_step(field: LatticeField, p: D1Q2Params) -> LatticeField:
    """Relax to equilibrium (``omega = 1``), stream periodically, take the zeroth moment."""
    if field.phi.size != p.M:
        raise QLBMError(f"field has {field.phi.size} sites, params say {p.M}")
    return classical_stream(equilibrium(field, p)).moment()


# ---------------------------------------------------------------------------
# Quantum pipeline


def layout_for(M: int) -> RegisterLayout:
    return RegisterLayout((("anc", 1), ("v", 1), ("site", M.bit_length() - 1)))


def encode_distribution(d: DistributionVector) -> tuple[Statevector, float]:
    """``|0>_anc f/||f||`` with the norm kept in the state's ledger."""
    norm = float(np.linalg.norm(d.f))
    if norm == 0:
        raise QLBMError("cannot encode a zero distribution")
    layout = layout_for(d.M)
    amps = np.zeros(layout.dim, dtype=complex)
    amps[: d.f.size] = d.f / norm
    return Statevector(layout, amps, norm_ledger=norm), norm


def decode_distribution(state: Statevector) -> DistributionVector:
    """Ancilla-0 block rescaled by the ledger."""
    half = state.layout.dim // 2
    amps = state.amplitudes[:half] * state.norm_ledger
    return DistributionVector(amps.real)


def prepare_collision_input(field: LatticeField) -> DistributionVector:
    """``[phi, phi]``: collision with ``A = diag(B1, B2)`` then yields the equilibrium."""
    return DistributionVector(np.concatenate([field.phi, field.phi]))


@dataclass(frozen=True)
class Collision:
    A: np.ndarray  # diagonal entries, length 2M
    C1: object
    C2: object


def build_collision(p: D1Q2Params) -> Collision:
    """``A = diag(B1 I, B2 I)`` and the LCU pair ``C = A +/- i sqrt(I - A^2)``."""
    b1, b2 = p.B()
    a = np.concatenate([np.full(p.M, b1), np.full(p.M, b2)])
    if np.any(np.abs(a) > 1 + ADMISSIBLE_TOL):
        raise QLBMError("collision entries must lie in [-1, 1]")
    a = np.clip(a, -1.0, 1.0)
    root = np.sqrt(1.0 - a**2)
    return Collision(a, diagonal(a + 1j * root, name="C1"), diagonal(a - 1j * root, name="C2"))


def collide(state: Statevector, col: Collision) -> tuple[Statevector, float]:
    """``(H ⊗ I)(|0><0| ⊗ C1 + |1><1| ⊗ C2)(H ⊗ I)``, then post-select ``anc = 0``."""
    layout = state.layout
    anc = layout.qubits("anc")[0]
    q = layout.qubits("v") + layout.qubits("site")
    state = apply_unitary(state, dense(H), [anc])
    state = apply_unitary(state, col.C1.controlled_by([anc], [0]), q)
    state = apply_unitary(state, col.C2.controlled_by([anc], [1]), q)
    state = apply_unitary(state, dense(H), [anc])
    try:
        return postselect(state, anc, 0)
    except ImpossibleOutcome as exc:
        raise QLBMError("collision success probability vanished") from exc


def _shift_permutation(M: int) -> np.ndarray:
    # on (v, site): v = 0 -> site + 1, v = 1 -> site - 1 (mod M)
    idx = np.arange(2 * M)
    v, j = idx // M, idx % M
    return v * M + np.where(v == 0, (j + 1) % M, (j - 1) % M)


def stream(state: Statevector) -> Statevector:
    """Velocity-controlled cyclic shift of the site register (a basis permutation)."""
    layout = state.layout
    M = 2 ** layout.width("site")
    op = permutation(_shift_permutation(M), name="stream")
    return apply_unitary(state, op, layout.qubits("v") + layout.qubits("site"))


def stream_gate_counts(M: int) -> dict:
    """Multi-controlled-NOT cascade for the two controlled shifts, keyed by control count.

    An increment on ``n`` qubits is ``n`` MCX gates with ``0..n-1`` register
    controls; the velocity control adds one to each, and the decrement is the
    same cascade in reverse.
    """
    n = M.bit_length() - 1
    counts: dict[int, int] = {}
    for k in range(n):
        counts[k + 1] = counts.get(k + 1, 0) + 2
    return {"mcx_by_controls": counts, "total_mcx": 2 * n}


def macroscopic_readout(state: Statevector) -> tuple[LatticeField, float]:
    """SWAP(anc, v), Hadamard on anc, post-select anc = 0 and v = 0 jointly.

    The surviving amplitudes are ``(f1 + f2) / sqrt(2)`` up to the tracked
    normalization, so the field is ``amplitudes * ledger * sqrt(2)``.
    """
    layout = state.layout
    anc, vel = layout.qubits("anc")[0], layout.qubits("v")[0]
    state = apply_unitary(state, dense(SWAP), [anc, vel])
    state = apply_unitary(state, dense(H), [anc])
    try:
        state, p_anc = postselect(state, anc, 0)
        state, p_vel = postselect(state, vel, 0)
    except ImpossibleOutcome as exc:
        raise QLBMError("readout branch has vanishing probability") from exc
    M = 2 ** layout.width("site")
    phi = state.amplitudes[:M] * state.norm_ledger * np.sqrt(2.0)
    return LatticeField(phi.real), p_anc * p_vel


@dataclass
class QLBMStepReport:
    step: int
    collision_success_prob: float
    readout_success_prob: float
    norm_ledger_in: float
    norm_ledger_out: float
    qubit_count: int
    max_delta: float
    mass_in: float
    mass_out: float
    reinitialized: bool = True
    norm_ledger_idealized: bool = True
    gate_counts: dict = field(default_factory=dict)


def quantum_lbm_step(field_in: LatticeField, p: D1Q2Params, col: Collision | None = None):
    """Prepare, encode, collide, stream and read out one step. Returns ``(field, report-dict)``."""
    if p.omega != 1.0:
        raise QLBMError("the quantum path fixes omega = 1")
    col = col or build_collision(p)
    state, norm = encode_distribution(prepare_collision_input(field_in))
    state, p_col = collide(state, col)
    state = stream(state)
    out, p_read = macroscopic_readout(state)
    info = {
        "collision_success_prob": p_col,
        "readout_success_prob": p_read,
        "norm_ledger_in": norm,
        "norm_ledger_out": state.norm_ledger,
    }
    return out, info


@dataclass
class QLBMRun:
    quantum: np.ndarray
    classical: np.ndarray
    reports: list

    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.quantum - self.classical)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("step,site,phi_quantum,phi_classical,delta\n")
        for t in range(self.quantum.shape[0]):
            for j in range(self.quantum.shape[1]):
                q, c = self.quantum[t, j], self.classical[t, j]
                buf.write(f"{t},{j},{q:.17g},{c:.17g},{q - c:.17g}\n")
        return buf.getvalue()

    def report_records(self) -> list[dict]:
        return [asdict(r) for r in self.reports]


def qlbm_run(field0, p: D1Q2Params, steps: int) -> QLBMRun:
    """Iterate the quantum step (re-initializing from the decoded field each time) alongside the classical one."""
    if steps < 1:
        raise QLBMError("steps must be >= 1")
    field_q = field0 if isinstance(field0, LatticeField) else LatticeField(field0)
    field_c = field_q
    col = build_collision(p)
    gates = stream_gate_counts(p.M)
    quantum, classical, reports = [field_q.phi], [field_c.phi], []
    for step in range(1, steps + 1):
        new_q, info = quantum_lbm_step(field_q, p, col)
        field_c = classical_lbm_step(field_c, p)
        reports.append(QLBMStepReport(
            step=step,
            qubit_count=p.qubit_count,
            max_delta=float(np.max(np.abs(new_q.phi - field_c.phi))),
            mass_in=field_q.mass,
            mass_out=new_q.mass,
            gate_counts=gates,
            **info,
        ))
        field_q = new_q
        quantum.append(field_q.phi)
        classical.append(field_c.phi)
    return QLBMRun(np.array(quantum), np.array(classical), reports)


def gaussian_hill(M: int, width: float | None = None, centre: float | None = None) -> LatticeField:
    width = M / 8 if width is None else width
    centre = M / 2 if centre is None else centre
    x = np.arange(M)
    return LatticeField(np.exp(-((x - centre) ** 2) / (2 * width**2)))
