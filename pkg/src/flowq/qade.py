"""Linear differential equations as Ising problems.

Unknown fields are expanded in a basis, the squared equation residuals over
sample points give a quadratic loss in the weights, and each weight is
spelled out in spins around a centre ``c`` with scale ``s``. Zooming re-centres
the window on the decoded weights and shrinks it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .ising import AnnealSchedule, IsingProblem, solve_ising


class QadeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Basis


@dataclass(frozen=True)
class BasisSet:
    """Polynomial basis ``Phi_0..Phi_degree`` with exact derivatives.

    ``family`` is ``chebyshev`` (on ``domain``) or ``monomial`` (plain powers of x).
    """

    family: str = "chebyshev"
    degree: int = 4
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.family not in ("chebyshev", "monomial"):
            raise QadeError(f"unknown basis family {self.family!r}")
        if self.degree < 0:
            raise QadeError("degree must be non-negative")

    @property
    def size(self) -> int:
        return self.degree + 1

    def _poly(self, m: int):
        if self.family == "monomial":
            return Polynomial.basis(m)
        return Chebyshev.basis(m, domain=list(self.domain))

    def evaluate(self, m: int, x, order: int = 0) -> np.ndarray:
        p = self._poly(m)
        if order:
            p = p.deriv(order)
        return p(np.asarray(x, dtype=float))

    def matrix(self, x, order: int = 0) -> np.ndarray:
        """``out[j, m] = d^order Phi_m (x_j)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([self.evaluate(m, x, order) for m in range(self.size)], axis=1)


# ---------------------------------------------------------------------------
# Residual functionals and the continuous loss


def _as_function(value) -> Callable:
    if callable(value):
        return value
    return lambda x: np.full_like(np.asarray(x, dtype=float), float(value))


@dataclass(frozen=True)
class Equation:
    """``E(x)[f] = sum_{(n,k)} C_nk(x) d^k f_n(x) + B(x)`` enforced at ``samples``.

    ``coefficients`` maps ``(field, derivative order)`` to a constant or callable.
    """

    coefficients: dict
    inhomogeneity: object = 0.0
    samples: np.ndarray = field(default_factory=lambda: np.zeros(0))
    domain: tuple | None = None

    def __post_init__(self):
        samples = np.atleast_1d(np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "samples", samples)
        if samples.size == 0:
            raise QadeError("equation needs at least one sample point")
        if self.domain is not None:
            lo, hi = self.domain
            if np.any(samples < lo) or np.any(samples > hi):
                raise QadeError("sample point outside the declared domain")

    @property
    def max_order(self) -> int:
        return max((k for _, k in self.coefficients), default=0)


@dataclass(frozen=True)
class FunctionalResidual:
    equations: tuple
    n_fields: int = 1

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        for eq in self.equations:
            for n, _ in eq.coefficients:
                if not 0 <= n < self.n_fields:
                    raise QadeError(f"equation references field {n}, only {self.n_fields} declared")


@dataclass(frozen=True)
class ContinuousQuadraticLoss:
    """``L(w) = w^T J w + h^T w + constant`` over flattened weights ``w[n * M + m]``."""

    J: np.ndarray
    h: np.ndarray
    constant: float
    n_fields: int
    n_basis: int

    def __call__(self, w) -> float:
        w = np.asarray(w, dtype=float).reshape(-1)
        return float(w @ self.J @ w + self.h @ w + self.constant)

    def minimizer(self) -> np.ndarray:
        """Least-squares minimizer (minimum-norm when ``J`` is singular)."""
        return np.linalg.lstsq(2 * self.J, -self.h, rcond=None)[0]


def _design_rows(problem: FunctionalResidual, basis: BasisSet):
    # rows of H (one per equation sample) and the matching B values
    M = basis.size
    rows, rhs = [], []
    for eq in problem.equations:
        x = eq.samples
        H = np.zeros((x.size, problem.n_fields * M))
        for (n, k), coeff in eq.coefficients.items():
            H[:, n * M : (n + 1) * M] += _as_function(coeff)(x)[:, None] * basis.matrix(x, k)
        rows.append(H)
        rhs.append(_as_function(eq.inhomogeneity)(x))
    return rows, rhs


def assemble_loss(problem: FunctionalResidual, basis: BasisSet) -> ContinuousQuadraticLoss:
    """``J = sum H H^T``, ``h = 2 sum H B``, ``constant = sum B^2`` over all samples."""
    size = problem.n_fields * basis.size
    J = np.zeros((size, size))
    h = np.zeros(size)
    const = 0.0
    rows, rhs = _design_rows(problem, basis)
    for H, B in zip(rows, rhs):
        J += H.T @ H
        h += 2 * H.T @ B
        const += float(B @ B)
    return ContinuousQuadraticLoss(J, h, const, problem.n_fields, basis.size)


# ---------------------------------------------------------------------------
# Spin encoding


@dataclass(frozen=True)
class SpinEncoding:
    """``w_i = c_i + s_i * sum_{a=1..n} spin_{i,a} / 2^a``; spins ordered weight-major."""

    center: np.ndarray
    scale: np.ndarray
    n_spins: int = 3

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        s = np.broadcast_to(np.asarray(self.scale, dtype=float), c.shape).copy()
        if np.any(s <= 0):
            raise QadeError("spin-encoding scales must be positive")
        if self.n_spins < 1:
            raise QadeError("need at least one spin per weight")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "scale", s)

    @property
    def n_weights(self) -> int:
        return self.center.size

    @property
    def total_spins(self) -> int:
        return self.n_weights * self.n_spins

    def projection(self) -> np.ndarray:
        """``P`` with ``w = c + P spins``."""
        P = np.zeros((self.n_weights, self.total_spins))
        powers = 2.0 ** -np.arange(1, self.n_spins + 1)
        for i in range(self.n_weights):
            P[i, i * self.n_spins : (i + 1) * self.n_spins] = self.scale[i] * powers
        return P

    def decode(self, spins) -> np.ndarray:
        spins = np.asarray(spins, dtype=float)
        if spins.shape[-1] != self.total_spins:
            raise QadeError(f"expected {self.total_spins} spins, got {spins.shape[-1]}")
        return self.center + spins @ self.projection().T

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        half = self.scale * (1 - 2.0**-self.n_spins)
        return self.center - half, self.center + half


def spin_encode(loss: ContinuousQuadraticLoss, enc: SpinEncoding) -> IsingProblem:
    """Substitute the spin encoding into the loss.

    Couplings ``P^T J P`` (diagonal folded into the constant), fields
    ``P^T (h + 2 J c)``, constant ``L(c)``, so ``energy(spins) == loss(decode(spins))``.
    """
    if enc.n_weights != loss.h.size:
        raise QadeError(f"encoding covers {enc.n_weights} weights, loss has {loss.h.size}")
    P = enc.projection()
    c = enc.center
    couplings = P.T @ loss.J @ P
    fields = P.T @ (loss.h + 2 * loss.J @ c)
    return IsingProblem.from_quadratic(couplings, fields, loss(c))


@dataclass(frozen=True)
class Reconstruction:
    weights: np.ndarray
    basis: BasisSet
    residual: float | None

    def field(self, x, n: int = 0, order: int = 0) -> np.ndarray:
        M = self.basis.size
        return self.basis.matrix(x, order) @ self.weights[n * M : (n + 1) * M]


def decode_and_reconstruct(spins, enc: SpinEncoding, basis: BasisSet,
                           loss: ContinuousQuadraticLoss | None = None) -> Reconstruction:
    w = enc.decode(spins)
    return Reconstruction(w, basis, None if loss is None else loss(w))


# ---------------------------------------------------------------------------
# Zoom-in refinement


@dataclass(frozen=True)
class ZoomResult:
    weights: np.ndarray
    residuals: tuple  # loss of each epoch's decoded weights
    best_residuals: tuple  # best-so-far, starting from the initial centre
    encodings: tuple


def zoom_iterate(problem: FunctionalResidual, basis: BasisSet, enc0: SpinEncoding, epochs: int,
                 shrink: float = 0.5, method: str = "exhaustive",
                 schedule: AnnealSchedule | None = None, seed: int = 0) -> ZoomResult:
    """Solve, re-centre on the decoded weights, shrink the scale; repeat.

    The initial centre counts as the first candidate, and the best weights
    seen so far are returned, so the best-so-far residual never increases.
    """
    if epochs < 1:
        raise QadeError("epochs must be >= 1")
    if not 0 < shrink < 1:
        raise QadeError("shrink must lie in (0, 1)")
    loss = assemble_loss(problem, basis)
    enc = enc0
    best_w = enc0.center.copy()
    best_r = loss(best_w)
    residuals, best, encs = [], [best_r], [enc0]
    for epoch in range(epochs):
        ising = spin_encode(loss, enc)
        sol = solve_ising(ising, method, schedule, seed + epoch)
        w = enc.decode(sol.spins)
        r = loss(w)
        residuals.append(r)
        if r < best_r:
            best_w, best_r = w, r
        best.append(best_r)
        enc = replace(enc, center=w, scale=enc.scale * shrink)
        encs.append(enc)
    return ZoomResult(best_w, tuple(residuals), tuple(best), tuple(encs))


def quadratic_test_problem(interior_points: int = 5) -> FunctionalResidual:
    """``f'' = 2`` on (0, 1) with ``f(0) = 0``, ``f(1) = 1``; exact solution ``x^2``."""
    interior = np.linspace(0.0, 1.0, interior_points + 2)[1:-1]
    return FunctionalResidual((
        Equation({(0, 2): 1.0}, -2.0, interior, (0.0, 1.0)),
        Equation({(0, 0): 1.0}, 0.0, [0.0]),
        Equation({(0, 0): 1.0}, -1.0, [1.0]),
    ))
