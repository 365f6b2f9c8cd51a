"""Independent classical references.

Nothing here calls into the quantum modules' numerical kernels: the Taylor
replica below uses matrix powers, the integrator uses power-series recursion;
RK4 here is written out by hand rather than through a Butcher tableau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def _driver(sys_or_fn) -> Callable[[np.ndarray], np.ndarray]:
    if callable(sys_or_fn):
        return sys_or_fn
    return sys_or_fn.evaluate


def rk4_integrate(sys, y0, dt: float, steps: int) -> np.ndarray:
    """Classical RK4 trajectory, shape ``(steps + 1, dim)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    f = _driver(sys)
    y = np.array(y0, dtype=float).reshape(-1)
    out = [y.copy()]
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    return np.array(out)


def dense_solve(M, b, singular_tol: float = 1e-12) -> np.ndarray:
    """Solve ``M x = b``; raise :class:`SingularMatrixError` if ``M`` is numerically singular."""
    M = np.asarray(M)
    b = np.asarray(b)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("dense_solve needs a square matrix")
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[-1] <= singular_tol * max(sv[0], 1.0):
        raise SingularMatrixError(f"matrix is singular (smallest singular value {sv[-1] if sv.size else 0:.3e})")
    x = np.linalg.solve(M, b)
    scale = max(np.linalg.norm(b), 1e-300)
    resid = np.linalg.norm(M @ x - b) / scale
    if resid > 1e-10:
        raise SingularMatrixError(f"solve residual {resid:.3e} exceeds 1e-10")
    return x


def euler_nonlinear(f_of_x: Callable[[np.ndarray], np.ndarray], x0, dt: float, steps: int,
                    b_seq=None) -> np.ndarray:
    """``x_k = (I - dt f(x_{k-1})) x_{k-1} + dt b_k`` with ``f`` returning a matrix."""
    x = np.array(x0, dtype=complex).reshape(-1)
    out = [x.copy()]
    for k in range(1, steps + 1):
        x = x - dt * (f_of_x(x) @ x)
        if b_seq is not None:
            x = x + dt * np.asarray(b_seq[k], dtype=complex)
        out.append(x.copy())
    return np.array(out)


def taylor_quadrature_linear(L, c, y0, T: float, n_primary: int, n_secondary: int, order: int) -> np.ndarray:
    """Replica of the integrator's classical quadrature for ``y' = L y + c``.

    Each secondary segment is the order-``order`` Taylor polynomial of the exact
    flow, whose ``k``-th coefficient is ``L^(k-1) (L y + c) / k!``. The update
    over a primary interval is its length times the mean of the driver at the
    left secondary nodes.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    c = np.zeros(L.shape[0]) if c is None else np.asarray(c, dtype=float)
    y = np.asarray(y0, dtype=float).reshape(-1)
    width = T / n_primary
    h = width / n_secondary
    traj = [y.copy()]
    for _ in range(n_primary):
        alpha = y.copy()
        samples = []
        for _ in range(n_secondary):
            samples.append(L @ alpha + c)
            deriv = L @ alpha + c
            nxt = alpha.copy()
            for k in range(1, order + 1):
                nxt = nxt + deriv * h**k / math.factorial(k)
                deriv = L @ deriv
            alpha = nxt
        y = y + width * np.mean(samples, axis=0)
        traj.append(y.copy())
    return np.array(traj)


def rk4_step_scalar_linear(lam: float, u: float, dt: float) -> float:
    """One classical RK4 step of ``u' = lam u``."""
    z = lam * dt
    return u * (1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24)


# ---------------------------------------------------------------------------
# Closed forms


@dataclass(frozen=True)
class ReferenceSolution:
    name: str
    kind: str
    evaluate: Callable
    residual: Callable
    metadata: dict = field(default_factory=dict)


def _exp_decay():
    def value(t):
        return np.exp(-np.asarray(t, dtype=float))

    def residual(t):
        # y' + y with y' = -exp(-t)
        t = np.asarray(t, dtype=float)
        return -np.exp(-t) + value(t)

    return ReferenceSolution("exp-decay", "closed-form", value, residual, {"ode": "y' = -y, y(0) = 1"})


def _implicit_midpoint():
    def value(dt, u=1.0):
        dt = np.asarray(dt, dtype=float)
        return u * (1 - dt / 2) / (1 + dt / 2)

    def residual(dt, u=1.0):
        # the step solves r = u + dt * f((u + r)/2) with f(v) = -v
        r = value(dt, u)
        return r - u + np.asarray(dt) * (u + r) / 2

    return ReferenceSolution("implicit-midpoint", "closed-form", value, residual,
                             {"ode": "u' = -u, one implicit-midpoint step"})


def _qade_quadratic():
    def value(x):
        return np.asarray(x, dtype=float) ** 2

    def residual(x):
        # f'' - 2 with f'' = 2 identically
        return np.full_like(np.asarray(x, dtype=float), 2.0) - 2.0

    return ReferenceSolution("qade-quadratic", "closed-form", value, residual,
                             {"ode": "f'' = 2, f(0) = 0, f(1) = 1", "weights": (0.0, 0.0, 1.0)})


def _heat_mode(diffusivity: float = 1.0, length: float = 1.0, mode: int = 1):
    k = 2 * math.pi * mode / length

    def value(x, t):
        return np.exp(-diffusivity * k**2 * np.asarray(t)) * np.sin(k * np.asarray(x))

    def residual(x, t):
        u = value(x, t)
        u_t = -diffusivity * k**2 * u
        u_xx = -(k**2) * u
        return u_t - diffusivity * u_xx

    return ReferenceSolution("heat-mode", "closed-form", value, residual,
                             {"pde": "u_t = D u_xx, periodic", "D": diffusivity, "L": length, "mode": mode})


def discrete_heat_mode_decay(diffusivity: float, dx: float, length: float, mode: int = 1) -> float:
    """Decay rate of a Fourier mode under the central three-point Laplacian."""
    k = 2 * math.pi * mode / length
    return diffusivity * 4 / dx**2 * math.sin(k * dx / 2) ** 2


_REGISTRY = {
    "exp-decay": _exp_decay,
    "implicit-midpoint": _implicit_midpoint,
    "qade-quadratic": _qade_quadratic,
    "heat-mode": _heat_mode,
}


def closed_form(name: str, **params) -> ReferenceSolution:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown closed form {name!r}; registered: {sorted(_REGISTRY)}") from None
    return factory(**params)


def registered_closed_forms() -> list[str]:
    return sorted(_REGISTRY)
