"""Runge-Kutta steps as least-squares problems, solvable over binary variables.

One step of ``du/dt = sum_i L^(i) u^{⊗(i-1)}`` becomes the sum of squared
residuals of the update equation and the stage equations, minimized jointly
over ``u_next`` and the stage matrix ``K``. For affine dynamics the residual is
affine in the unknowns, so the objective is quadratic and can be written as a
QUBO over a windowed binary encoding of every unknown.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .ising import AnnealSchedule, IsingProblem, solve_ising


class QRKError(ValueError):
    pass


@dataclass(frozen=True)
class ButcherTableau:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        s = b.size
        if A.shape != (s, s) or c.size != s:
            raise QRKError("tableau shapes are inconsistent")
        if abs(b.sum() - 1.0) > 1e-12:
            raise QRKError(f"weights sum to {b.sum()}, not 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return self.b.size

    @property
    def explicit(self) -> bool:
        return bool(np.all(np.triu(self.A) == 0))


def tableau(name: str) -> ButcherTableau:
    r3 = np.sqrt(3.0)
    table = {
        "euler": ([[0.0]], [1.0], [0.0]),
        "heun": ([[0, 0], [1, 0]], [0.5, 0.5], [0, 1]),
        "rk4": ([[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]],
                [1 / 6, 1 / 3, 1 / 3, 1 / 6], [0, 0.5, 0.5, 1]),
        "backward-euler": ([[1.0]], [1.0], [1.0]),
        "implicit-midpoint": ([[0.5]], [1.0], [0.5]),
        "gauss-legendre-2": ([[0.25, 0.25 - r3 / 6], [0.25 + r3 / 6, 0.25]], [0.5, 0.5],
                             [0.5 - r3 / 6, 0.5 + r3 / 6]),
    }
    try:
        A, b, c = table[name]
    except KeyError:
        raise QRKError(f"unknown tableau {name!r}; known: {sorted(table)}") from None
    return ButcherTableau(A, b, c, name)


def _contract(tensor: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = tensor
    while out.ndim > 1:
        out = out @ u
    return out


@dataclass(frozen=True)
class RKStageProblem:
    """``L[i-1]`` is ``L^(i)`` of shape ``(N,) * i``; it contracts ``i - 1`` copies of ``u``."""

    L: tuple
    dt: float
    u: np.ndarray
    tab: ButcherTableau

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        N = u.size
        L = tuple(np.asarray(t, dtype=float) for t in self.L)
        if not L:
            raise QRKError("need at least one L tensor")
        for i, t in enumerate(L, start=1):
            if t.shape != (N,) * i:
                raise QRKError(f"L^({i}) has shape {t.shape}, expected {(N,) * i}")
        if self.dt < 0:
            raise QRKError("dt must be non-negative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "L", L)

    @property
    def N(self) -> int:
        return self.u.size

    @property
    def M_order(self) -> int:
        return len(self.L)

    @property
    def affine(self) -> bool:
        return self.M_order <= 2

    def f(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return sum(_contract(t, v) for t in self.L)

    @classmethod
    def linear(cls, matrix, u, dt: float, tab: ButcherTableau, constant=None) -> "RKStageProblem":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        const = np.zeros(matrix.shape[0]) if constant is None else np.asarray(constant, dtype=float)
        return cls((const, matrix), dt, u, tab)


@dataclass(frozen=True)
class RKResidual:
    """Objective over the packed unknowns ``z = [u_next, K.ravel()]``."""

    problem: RKStageProblem

    @property
    def size(self) -> int:
        return self.problem.N * (1 + self.problem.tab.stages)

    def unpack(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        N, s = self.problem.N, self.problem.tab.stages
        if z.size != self.size:
            raise QRKError(f"expected {self.size} unknowns, got {z.size}")
        return z[:N], z[N:].reshape(s, N)

    def pack(self, u_next, K) -> np.ndarray:
        return np.concatenate([np.asarray(u_next, float).reshape(-1), np.asarray(K, float).reshape(-1)])

    def residuals(self, z) -> np.ndarray:
        p = self.problem
        u_next, K = self.unpack(z)
        tab = p.tab
        update = u_next - p.u - p.dt * tab.b @ K
        stages = [K[o] - p.f(p.u + p.dt * tab.A[o] @ K) for o in range(tab.stages)]
        return np.concatenate([update] + stages)

    def __call__(self, z) -> float:
        r = self.residuals(z)
        return float(r @ r)

    def affine_form(self) -> tuple[np.ndarray, np.ndarray]:
        """``(G, g)`` with ``residuals(z) = G z - g``; affine dynamics only."""
        if not self.problem.affine:
            raise QRKError("the quadratic (QUBO) form needs affine dynamics")
        zero = np.zeros(self.size)
        g = -self.residuals(zero)
        G = np.stack([self.residuals(e) + g for e in np.eye(self.size)], axis=1)
        return G, g

    def initial_guess(self) -> np.ndarray:
        p = self.problem
        k0 = p.f(p.u)
        return self.pack(p.u + p.dt * k0, np.tile(k0, (p.tab.stages, 1)))


def build_rk_residual(p: RKStageProblem) -> RKResidual:
    return RKResidual(p)


def minimize_rk_residual(res: RKResidual) -> tuple[np.ndarray, np.ndarray, float]:
    """Continuous minimizer: linear least squares for affine dynamics, else Levenberg-Marquardt."""
    if res.problem.affine:
        G, g = res.affine_form()
        z = np.linalg.lstsq(G, g, rcond=None)[0]
    else:
        z = least_squares(res.residuals, res.initial_guess(), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15).x
    u_next, K = res.unpack(z)
    return u_next, K, res(z)


# ---------------------------------------------------------------------------
# Windowed binary encoding


@dataclass(frozen=True)
class WindowedEncoding:
    """``value_i = 2^-k_i * B_i + d_i`` with ``B_i`` the unsigned integer of ``bits`` bits (MSB first)."""

    k: np.ndarray
    d: np.ndarray
    bits: int

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.k, dtype=int))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if k.shape != d.shape:
            raise QRKError("k and d need matching shapes")
        if self.bits < 1:
            raise QRKError("need at least one bit per variable")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "d", d)

    @classmethod
    def centred(cls, values, k, bits: int) -> "WindowedEncoding":
        """Window whose middle code ``2^(bits-1)`` decodes exactly to ``values``."""
        values = np.atleast_1d(np.asarray(values, dtype=float))
        k = np.broadcast_to(np.asarray(k, dtype=int), values.shape)
        return cls(k, values - 2.0 ** (-k) * 2 ** (bits - 1), bits)

    @property
    def n_vars(self) -> int:
        return self.d.size

    @property
    def total_bits(self) -> int:
        return self.n_vars * self.bits

    def projection(self) -> np.ndarray:
        """``P`` with ``values = d + P x`` for bit vector ``x`` (variable-major, MSB first)."""
        P = np.zeros((self.n_vars, self.total_bits))
        weights = 2.0 ** np.arange(self.bits - 1, -1, -1)
        for i in range(self.n_vars):
            P[i, i * self.bits : (i + 1) * self.bits] = 2.0 ** (-self.k[i]) * weights
        return P

    def decode(self, x) -> np.ndarray:
        return self.d + self.projection() @ np.asarray(x, dtype=float)

    def window(self) -> tuple[np.ndarray, np.ndarray]:
        return self.d, self.d + 2.0 ** (-self.k) * (2**self.bits - 1)

    def saturated(self, x) -> np.ndarray:
        """True where a variable's bits are all 0 or all 1 (decoded value on the window edge)."""
        x = np.asarray(x, dtype=int).reshape(self.n_vars, self.bits)
        return np.all(x == 0, axis=1) | np.all(x == 1, axis=1)


def windowed_qubo(res: RKResidual, enc: WindowedEncoding) -> IsingProblem:
    """``||G (d + P x) - g||^2`` as an Ising problem over ``s = 2x - 1``."""
    G, g = res.affine_form()
    P = enc.projection()
    r0 = G @ enc.d - g
    GP = G @ P
    return IsingProblem.from_qubo(GP.T @ GP, 2 * GP.T @ r0, float(r0 @ r0))


@dataclass
class WindowedReport:
    epochs: list = field(default_factory=list)
    saturated_any: bool = False


def rk_windowed_solve(p: RKStageProblem, bits: int = 6, epochs: int = 10, method: str = "exhaustive",
                      k0: int | None = None, schedule: AnnealSchedule | None = None,
                      seed: int = 0) -> tuple[np.ndarray, WindowedReport]:
    """Hybrid loop over windowed binary encodings of ``(u_next, K)``.

    The first window is centred on the explicit-Euler guess with
    ``2^-k0 * 2^bits`` span (``k0`` defaults to ``bits - 2``, a span of 4). Each
    epoch solves the QUBO, then re-centres on the decoded values; ``k`` grows
    by one (halving the span) for variables whose value is interior, while
    saturated variables keep their span and are flagged in the report.
    """
    if not p.affine:
        raise QRKError("windowed QUBO path needs affine dynamics (L^(1), L^(2) only)")
    res = build_rk_residual(p)
    k0 = bits - 2 if k0 is None else k0
    enc = WindowedEncoding.centred(res.initial_guess(), k0, bits)
    report = WindowedReport()
    values = res.initial_guess()
    for epoch in range(epochs):
        ising = windowed_qubo(res, enc)
        sol = solve_ising(ising, method, schedule, seed + epoch)
        x = (np.asarray(sol.spins) + 1) // 2
        values = enc.decode(x)
        sat = enc.saturated(x)
        report.epochs.append({
            "epoch": epoch,
            "k": enc.k.tolist(),
            "d": enc.d.tolist(),
            "values": values.tolist(),
            "saturated": sat.tolist(),
            "objective": res(values),
        })
        report.saturated_any |= bool(sat.any())
        enc = WindowedEncoding.centred(values, np.where(sat, enc.k, enc.k + 1), bits)
    u_next, _ = res.unpack(values)
    return u_next, report
