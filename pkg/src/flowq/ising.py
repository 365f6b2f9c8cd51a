"""Ising problems and their classical solvers (exhaustive enumeration, simulated annealing).

Energy convention: ``E(s) = s^T J s + h^T s + constant`` for ``s`` in ``{-1, +1}^n``,
with ``J`` symmetric and zero on the diagonal (``s_i^2 = 1`` is folded into
the constant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXHAUSTIVE_CAP = 24
_CHUNK = 1 << 14


class IsingError(ValueError):
    pass


@dataclass(frozen=True)
class IsingProblem:
    J: np.ndarray
    h: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if J.shape != (h.size, h.size):
            raise IsingError(f"J shape {J.shape} does not match {h.size} fields")
        if np.max(np.abs(J - J.T), initial=0.0) > 1e-12 * max(1.0, np.abs(J).max(initial=0.0)):
            raise IsingError("J must be symmetric")
        if np.any(np.diag(J) != 0):
            raise IsingError("J must have a zero diagonal; use IsingProblem.from_quadratic")
        object.__setattr__(self, "J", (J + J.T) / 2)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_quadratic(cls, Q, h, constant: float = 0.0) -> "IsingProblem":
        """Symmetrize ``Q`` and fold its diagonal into the constant."""
        Q = np.asarray(Q, dtype=float)
        Q = (Q + Q.T) / 2
        diag = np.diag(Q).copy()
        Q = Q - np.diag(diag)
        return cls(Q, h, constant + float(diag.sum()))

    @classmethod
    def from_qubo(cls, Q, q, constant: float = 0.0) -> "IsingProblem":
        """``x^T Q x + q^T x + c`` over ``x`` in ``{0,1}^n`` with ``x = (s + 1)/2``."""
        Q = np.asarray(Q, dtype=float)
        Q = (Q + Q.T) / 2
        q = np.asarray(q, dtype=float).reshape(-1)
        J = Q / 4
        h = Q.sum(axis=1) / 2 + q / 2
        c = constant + Q.sum() / 4 + q.sum() / 2
        return cls.from_quadratic(J, h, c)

    def to_qubo(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Inverse transform, ``s = 2x - 1``; returns ``(Q, q, c)`` with zero-diagonal ``Q``."""
        Q = 4 * self.J
        q = 2 * self.h - 4 * self.J.sum(axis=1)
        c = self.constant + self.J.sum() - self.h.sum()
        return Q, q, c

    @property
    def n(self) -> int:
        return self.h.size

    def energy(self, spins, include_constant: bool = True):
        s = np.asarray(spins, dtype=float)
        e = np.einsum("...i,ij,...j->...", s, self.J, s) + s @ self.h
        return e + self.constant if include_constant else e

    def to_edge_list(self) -> str:
        """Plain-text export: ``i j J_ij`` lines (i < j, nonzero), then ``i h_i`` lines."""
        lines = [f"# ising n={self.n} constant={self.constant!r}"]
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.J[i, j] != 0:
                    lines.append(f"{i} {j} {self.J[i, j]!r}")
        for i in range(self.n):
            if self.h[i] != 0:
                lines.append(f"{i} {self.h[i]!r}")
        return "\n".join(lines) + "\n"


def spins_from_index(index, n: int) -> np.ndarray:
    """Spin string for an enumeration index; spin 0 is the most significant bit, bit 1 is ``+1``."""
    index = np.asarray(index, dtype=np.int64)
    bits = (index[..., None] >> np.arange(n - 1, -1, -1)) & 1
    return 2 * bits - 1


def all_spins(n: int) -> np.ndarray:
    if n > EXHAUSTIVE_CAP:
        raise IsingError(f"{n} spins exceeds the exhaustive cap of {EXHAUSTIVE_CAP}")
    return spins_from_index(np.arange(2**n), n)


@dataclass(frozen=True)
class IsingSolution:
    spins: np.ndarray
    energy: float
    method: str
    reads: int = 1


def solve_exhaustive(p: IsingProblem) -> IsingSolution:
    """Global optimum by enumeration; ties go to the smallest enumeration index."""
    n = p.n
    if n > EXHAUSTIVE_CAP:
        raise IsingError(f"{n} spins exceeds the exhaustive cap of {EXHAUSTIVE_CAP}")
    best_e, best_i = np.inf, 0
    for start in range(0, 2**n, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, 2**n))
        s = spins_from_index(idx, n)
        e = p.energy(s, include_constant=False)
        k = int(np.argmin(e))
        if e[k] < best_e:
            best_e, best_i = float(e[k]), int(idx[k])
    spins = spins_from_index(best_i, n)
    return IsingSolution(spins, float(p.energy(spins)), "exhaustive")


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int = 300
    reads: int = 16
    t_hot: float | None = None
    t_cold: float | None = None


def _default_temperatures(p: IsingProblem) -> tuple[float, float]:
    # largest possible single-flip energy change sets the hot end
    scale = float(np.max(4 * np.abs(p.J).sum(axis=1) + 2 * np.abs(p.h), initial=0.0))
    scale = scale if scale > 0 else 1.0
    return scale, scale * 1e-3


def simulated_annealing(p: IsingProblem, schedule: AnnealSchedule | None = None, seed: int = 0) -> IsingSolution:
    """Single-spin Metropolis with a geometric temperature ramp; best of ``reads`` samples.

    All reads run in lock-step (vectorized); the result is deterministic per seed.
    """
    schedule = schedule or AnnealSchedule()
    if schedule.sweeps < 1 or schedule.reads < 1:
        raise IsingError("sweeps and reads must be positive")
    t_hot, t_cold = _default_temperatures(p)
    t_hot = schedule.t_hot if schedule.t_hot is not None else t_hot
    t_cold = schedule.t_cold if schedule.t_cold is not None else t_cold
    rng = np.random.default_rng(seed)
    n, reads = p.n, schedule.reads
    s = rng.choice(np.array([-1.0, 1.0]), size=(reads, n))
    local = s @ p.J  # local[r, i] = sum_j J_ij s_j
    temps = np.geomspace(t_hot, t_cold, schedule.sweeps)
    for temp in temps:
        thresholds = rng.random((n, reads))
        for i in range(n):
            delta = -4.0 * s[:, i] * local[:, i] - 2.0 * p.h[i] * s[:, i]
            accept = (delta <= 0) | (thresholds[i] < np.exp(-np.clip(delta, 0, None) / temp))
            if np.any(accept):
                flip = np.where(accept, -2.0 * s[:, i], 0.0)
                s[:, i] += flip
                local += flip[:, None] * p.J[i][None, :]
    energies = p.energy(s, include_constant=False)
    best = int(np.argmin(energies))
    spins = s[best].astype(int)
    return IsingSolution(spins, float(p.energy(spins)), "simulated-annealing", reads)


def solve_ising(p: IsingProblem, method: str = "exhaustive", schedule: AnnealSchedule | None = None,
                seed: int = 0) -> IsingSolution:
    if method == "exhaustive":
        return solve_exhaustive(p)
    if method in ("sa", "simulated-annealing"):
        return simulated_annealing(p, schedule, seed)
    raise IsingError(f"unknown Ising solver {method!r}")
