"""Quantum-integration ODE/PDE solver.

The time horizon is split into primary intervals, each into secondary
segments. A chained Taylor polynomial approximates the solution across the
segments, the driver is sampled at the segment nodes, and the per-interval
update is the interval length times the sample mean, which is the only step
handed to quantum mean estimation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .amplitude_estimation import estimate_mean

MAX_DEGREE = 3
MAX_TAYLOR_ORDER = 4


class IntegratorError(ValueError):
    pass


def _contract(tensor: np.ndarray, vectors) -> np.ndarray:
    out = tensor
    for v in reversed(vectors):
        out = out @ v
    return out


@dataclass(frozen=True)
class ODESystem:
    """``dy/dt = f(y)`` with ``f`` a polynomial of total degree <= 3.

    ``coefficients[p]`` is the degree-``p`` tensor of shape ``(dim,) * (p + 1)``;
    missing degrees are zero. ``holder`` is free-form smoothness metadata.
    """

    dimension: int
    coefficients: tuple
    provenance: str = "direct"
    grid: dict | None = None
    holder: dict | None = None

    def __post_init__(self):
        coeffs = tuple(np.asarray(c, dtype=float) for c in self.coefficients)
        if len(coeffs) - 1 > MAX_DEGREE:
            raise IntegratorError(f"driver degree {len(coeffs) - 1} exceeds {MAX_DEGREE}")
        for p, c in enumerate(coeffs):
            if c.shape != (self.dimension,) * (p + 1):
                raise IntegratorError(f"degree-{p} tensor has shape {c.shape}")
            if not np.all(np.isfinite(c)):
                raise IntegratorError("driver coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def linear(cls, matrix, constant=None, **kwargs) -> "ODESystem":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        dim = matrix.shape[0]
        c0 = np.zeros(dim) if constant is None else np.broadcast_to(np.asarray(constant, float), (dim,))
        return cls(dim, (c0, matrix), **kwargs)

    @classmethod
    def constant(cls, value) -> "ODESystem":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(value.size, (value,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_linear(self) -> bool:
        return self.degree <= 1

    def evaluate(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros(self.dimension)
        for p, c in enumerate(self.coefficients):
            out = out + _contract(c, [y] * p)
        return out

    def series_coefficient(self, series: list[np.ndarray], k: int) -> np.ndarray:
        """Coefficient of ``t^k`` in ``f(sum_i series[i] t^i)``."""
        out = np.zeros(self.dimension)
        for p, c in enumerate(self.coefficients):
            if p == 0:
                if k == 0:
                    out = out + c
                continue
            for combo in itertools.product(range(k + 1), repeat=p):
                if sum(combo) == k:
                    out = out + _contract(c, [series[i] for i in combo])
        return out


# ---------------------------------------------------------------------------
# Spatial discretization


@dataclass(frozen=True)
class UniformGrid:
    points: int
    length: float = 1.0

    def __post_init__(self):
        if self.points < 3:
            raise IntegratorError("grid needs at least 3 points")

    @property
    def dx(self) -> float:
        return self.length / self.points

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.points) * self.dx


@dataclass(frozen=True)
class FluxSpec:
    """``u_t = D u_xx - c u_x - beta u u_x`` on a periodic grid."""

    diffusivity: float = 0.0
    velocity: float = 0.0
    burgers: float = 0.0


def discretize_pde(flux: FluxSpec, grid: UniformGrid, scheme: str = "central") -> ODESystem:
    """Method of lines: periodic finite differences turned into polynomial coefficients.

    Diffusion always uses the three-point central stencil. ``scheme`` picks the
    first-derivative stencil: ``central`` or ``upwind`` (by the sign of the
    advection velocity; the Burgers term is upwinded as if ``u > 0``).
    """
    if scheme not in ("central", "upwind"):
        raise IntegratorError(f"unsupported scheme {scheme!r}")
    n, dx = grid.points, grid.dx
    idx = np.arange(n)
    left, right = (idx - 1) % n, (idx + 1) % n

    lap = np.zeros((n, n))
    lap[idx, idx] += -2.0
    lap[idx, left] += 1.0
    lap[idx, right] += 1.0
    lap /= dx**2

    def first_derivative(sign: float) -> np.ndarray:
        d = np.zeros((n, n))
        if scheme == "central":
            d[idx, right] += 0.5 / dx
            d[idx, left] -= 0.5 / dx
        elif sign >= 0:
            d[idx, idx] += 1.0 / dx
            d[idx, left] -= 1.0 / dx
        else:
            d[idx, right] += 1.0 / dx
            d[idx, idx] -= 1.0 / dx
        return d

    linear = flux.diffusivity * lap - flux.velocity * first_derivative(flux.velocity)
    coeffs = [np.zeros(n), linear]
    if flux.burgers:
        d = first_derivative(1.0)
        quad = np.zeros((n, n, n))
        quad[idx, idx, :] = -flux.burgers * d
        coeffs.append(quad)
    grid_meta = {"points": n, "length": grid.length, "scheme": scheme, **asdict(flux)}
    return ODESystem(n, tuple(coeffs), provenance="discretized-pde", grid=grid_meta)


# ---------------------------------------------------------------------------
# Meshes, Taylor pieces, rescaling


@dataclass(frozen=True)
class TimeMesh:
    T: float
    n_primary: int
    N_secondary: int

    def __post_init__(self):
        if not self.T > 0 or self.n_primary < 1 or self.N_secondary < 1:
            raise IntegratorError("mesh needs T > 0 and positive subdivision counts")

    @property
    def primary_width(self) -> float:
        return self.T / self.n_primary

    @property
    def secondary_width(self) -> float:
        return self.primary_width / self.N_secondary

    def primary_times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_primary + 1)

    def nodes(self, i: int) -> np.ndarray:
        """Left nodes ``t_{i,k}`` of the secondary segments of interval ``i``."""
        return i * self.primary_width + np.arange(self.N_secondary) * self.secondary_width

    def all_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_primary * self.N_secondary + 1)


def taylor_coefficients(sys: ODESystem, y, r: int) -> list[np.ndarray]:
    """Taylor coefficients ``a_0..a_r`` of the solution through ``y`` (power-series recursion)."""
    if r < 1:
        raise IntegratorError("Taylor order must be >= 1")
    if r > MAX_TAYLOR_ORDER:
        raise IntegratorError(f"Taylor order {r} exceeds {MAX_TAYLOR_ORDER}")
    series = [np.asarray(y, dtype=float).copy()]
    for k in range(r):
        series.append(sys.series_coefficient(series, k) / (k + 1))
    return series


@dataclass(frozen=True)
class PiecewiseTaylor:
    starts: np.ndarray  # left endpoint times
    width: float
    coefficients: tuple  # per segment: list of arrays a_0..a_r

    def __call__(self, t: float) -> np.ndarray:
        k = int(np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, len(self.starts) - 1))
        return _eval_poly(self.coefficients[k], t - self.starts[k])

    def endpoint(self) -> np.ndarray:
        return _eval_poly(self.coefficients[-1], self.width)

    def join_gaps(self) -> np.ndarray:
        gaps = [
            np.max(np.abs(_eval_poly(self.coefficients[k], self.width) - self.coefficients[k + 1][0]))
            for k in range(len(self.coefficients) - 1)
        ]
        return np.array(gaps)


def _eval_poly(coeffs, s: float) -> np.ndarray:
    out = np.zeros_like(coeffs[0])
    for a in reversed(coeffs):
        out = out * s + a
    return out


def build_piecewise(sys: ODESystem, y_start, t_start: float, width: float, segments: int, r: int) -> PiecewiseTaylor:
    starts = t_start + np.arange(segments) * width
    coeffs = []
    y = np.asarray(y_start, dtype=float)
    for _ in range(segments):
        a = taylor_coefficients(sys, y, r)
        coeffs.append(a)
        y = _eval_poly(a, width)
    return PiecewiseTaylor(starts, width, tuple(coeffs))


@dataclass(frozen=True)
class RescaleParams:
    lo: float
    hi: float
    degenerate: bool = False

    def __post_init__(self):
        if self.hi < self.lo:
            raise IntegratorError("rescale needs hi >= lo")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def inverse(self, g):
        if self.degenerate:
            return np.full_like(np.asarray(g, dtype=float), self.lo) if np.ndim(g) else self.lo
        return self.lo + self.span * np.asarray(g, dtype=float) if np.ndim(g) else self.lo + self.span * g


def rescale_to_unit(samples) -> tuple[np.ndarray, RescaleParams]:
    """Affine map onto [0, 1] using the samples' own min/max; constant input maps to 0.5."""
    s = np.asarray(samples, dtype=float).reshape(-1)
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        return np.full_like(s, 0.5), RescaleParams(lo, hi, degenerate=True)
    g = np.clip((s - lo) / (hi - lo), 0.0, 1.0)
    return g, RescaleParams(lo, hi)


# ---------------------------------------------------------------------------
# Propagation


@dataclass(frozen=True)
class QAEConfig:
    n_phase: int = 7
    mode: str = "exact"
    M: int = 1
    seed: int = 0


def exact_mean(g: np.ndarray, **_) -> float:
    """Classical stand-in for quantum mean estimation."""
    return float(np.mean(g))


def _seed_for(base: int, step: int, component: int) -> int:
    return int(np.random.SeedSequence([base, step, component]).generate_state(1)[0])


def quantum_mean(g: np.ndarray, config: QAEConfig, step: int = 0, component: int = 0) -> tuple[float, dict]:
    seed = _seed_for(config.seed, step, component) if config.mode == "sampled" else None
    est = estimate_mean(g, config.n_phase, M=config.M, seed=seed, mode=config.mode)
    return est.estimate, {"y": est.y, "a_hat": est.a_hat, "seed": seed}


@dataclass
class StepRecord:
    interval: int
    y_prev: list
    y_next: list
    estimated_means: list
    sample_means: list
    rescale: list
    qae: list
    uncertainty: list
    join_gap: float


def propagate_step(sys: ODESystem, y_prev, i: int, mesh: TimeMesh, r: int = 2,
                   qae_config: QAEConfig | None = None,
                   mean_estimator: Callable | None = None) -> tuple[np.ndarray, StepRecord]:
    """Advance from ``y_{i-1}`` to ``y_i`` over primary interval ``i``.

    ``mean_estimator(g)`` replaces quantum mean estimation when given (e.g.
    :func:`exact_mean`). Each state component gets its own estimate.
    """
    y_prev = np.asarray(y_prev, dtype=float)
    if not np.all(np.isfinite(y_prev)):
        raise IntegratorError("state must be finite")
    qae_config = qae_config or QAEConfig()
    width = mesh.primary_width
    piece = build_piecewise(sys, y_prev, i * width, mesh.secondary_width, mesh.N_secondary, r)
    samples = np.array([sys.evaluate(seg[0]) for seg in piece.coefficients])
    means, params_out, qae_out, unc = [], [], [], []
    for comp in range(sys.dimension):
        g, params = rescale_to_unit(samples[:, comp])
        if mean_estimator is not None:
            est, info = float(mean_estimator(g)), {}
        else:
            est, info = quantum_mean(g, qae_config, i, comp)
        means.append(float(params.inverse(est)))
        params_out.append({"lo": params.lo, "hi": params.hi, "span": params.span, "degenerate": params.degenerate})
        qae_out.append(info)
        bound = 0.0 if (mean_estimator is not None or params.degenerate) else \
            2 * math.pi / 2**qae_config.n_phase * params.span * width
        unc.append(bound)
    y_next = y_prev + width * np.array(means)
    record = StepRecord(
        interval=i,
        y_prev=y_prev.tolist(),
        y_next=y_next.tolist(),
        estimated_means=means,
        sample_means=samples.mean(axis=0).tolist(),
        rescale=params_out,
        qae=qae_out,
        uncertainty=unc,
        join_gap=float(piece.join_gaps().max(initial=0.0)),
    )
    return y_next, record


@dataclass
class SolveReport:
    steps: list = field(default_factory=list)
    oracle_trajectory: list | None = None
    oracle_delta: list | None = None

    def to_dict(self) -> dict:
        return {
            "steps": [asdict(s) for s in self.steps],
            "oracle_trajectory": self.oracle_trajectory,
            "oracle_delta": self.oracle_delta,
        }


def solve(sys: ODESystem, y0, mesh: TimeMesh, r: int = 2, qae_config: QAEConfig | None = None,
          mean_estimator: Callable | None = None, oracle: bool = True) -> tuple[np.ndarray, SolveReport]:
    """Sequential propagation over all primary intervals.

    For linear drivers the report carries deltas against the independent
    classical Taylor-quadrature replica in :mod:`flowq.oracles`.
    """
    from .oracles import taylor_quadrature_linear

    y = np.asarray(y0, dtype=float).reshape(-1)
    if y.size != sys.dimension:
        raise IntegratorError(f"y0 has {y.size} entries, system has {sys.dimension}")
    traj = [y.copy()]
    report = SolveReport()
    for i in range(mesh.n_primary):
        y, rec = propagate_step(sys, y, i, mesh, r, qae_config, mean_estimator)
        traj.append(y.copy())
        report.steps.append(rec)
    traj = np.array(traj)
    if oracle and sys.is_linear():
        L = sys.coefficients[1] if sys.degree == 1 else np.zeros((sys.dimension, sys.dimension))
        ref = taylor_quadrature_linear(L, sys.coefficients[0], y0, mesh.T, mesh.n_primary, mesh.N_secondary, r)
        report.oracle_trajectory = ref.tolist()
        report.oracle_delta = (traj - ref).tolist()
    return traj, report
