import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowq.integrator import (
    FluxSpec,
    IntegratorError,
    ODESystem,
    QAEConfig,
    TimeMesh,
    UniformGrid,
    build_piecewise,
    discretize_pde,
    exact_mean,
    propagate_step,
    rescale_to_unit,
    solve,
    taylor_coefficients,
)
from flowq.oracles import discrete_heat_mode_decay, rk4_integrate


def test_upwind_advection_matrix():
    grid = UniformGrid(4, 1.0)
    sys = discretize_pde(FluxSpec(velocity=1.0), grid, "upwind")
    L = sys.coefficients[1]
    expected = -(np.eye(4) - np.roll(np.eye(4), -1, axis=1)) / grid.dx
    assert np.allclose(L, expected)


def test_zero_field_gives_zero_driver():
    grid = UniformGrid(6)
    for scheme in ("central", "upwind"):
        sys = discretize_pde(FluxSpec(diffusivity=0.1, velocity=0.5, burgers=1.0), grid, scheme)
        assert np.all(sys.evaluate(np.zeros(6)) == 0)


def test_burgers_term_matches_direct_formula(rng):
    grid = UniformGrid(5)
    sys = discretize_pde(FluxSpec(burgers=2.0), grid)
    u = rng.normal(size=5)
    du = (np.roll(u, -1) - np.roll(u, 1)) / (2 * grid.dx)
    assert np.allclose(sys.evaluate(u), -2.0 * u * du)


def test_degree_cap():
    with pytest.raises(IntegratorError):
        ODESystem(1, (np.zeros(1), np.zeros((1, 1)), np.zeros((1, 1, 1)), np.zeros((1,) * 4), np.zeros((1,) * 5)))


def test_zero_driver_taylor_coefficients():
    coeffs = taylor_coefficients(ODESystem.constant([0.0, 0.0]), [1.0, 2.0], 3)
    assert np.allclose(coeffs[0], [1, 2])
    assert all(np.all(c == 0) for c in coeffs[1:])


def test_taylor_coefficients_of_exponential():
    coeffs = taylor_coefficients(ODESystem.linear([[-1.0]]), [1.0], 4)
    assert np.allclose([c[0] for c in coeffs], [1, -1, 1 / 2, -1 / 6, 1 / 24])


def test_taylor_coefficients_of_riccati():
    # y' = y^2, y(0) = 1 has y = 1/(1-t) = sum t^k
    sys = ODESystem(1, (np.zeros(1), np.zeros((1, 1)), np.ones((1, 1, 1))))
    coeffs = taylor_coefficients(sys, [1.0], 4)
    assert np.allclose([c[0] for c in coeffs], [1, 1, 1, 1, 1])


def test_taylor_order_cap():
    with pytest.raises(IntegratorError):
        taylor_coefficients(ODESystem.linear([[1.0]]), [1.0], 5)


def test_piecewise_is_continuous():
    piece = build_piecewise(ODESystem.linear([[-2.0]]), [1.0], 0.0, 0.5, 4, 2)
    assert np.max(piece.join_gaps(), initial=0) < 1e-15


def test_rescale_spans_unit_interval():
    g, params = rescale_to_unit(np.array([-1.0, 0.0, 1.0]))
    assert np.allclose(g, [0, 0.5, 1])
    assert not params.degenerate


def test_degenerate_rescale():
    g, params = rescale_to_unit(np.full(4, 3.0))
    assert params.degenerate and np.all(g == 0.5)
    assert params.inverse(0.5) == 3.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=16))
def test_rescale_round_trip(values):
    s = np.array(values)
    g, params = rescale_to_unit(s)
    assert np.all((g >= 0) & (g <= 1))
    assert np.max(np.abs(params.inverse(g) - s)) <= 1e-12 * max(1.0, np.max(np.abs(s)))


def test_zero_driver_keeps_state_exactly():
    mesh = TimeMesh(1.0, 3, 4)
    y, _ = propagate_step(ODESystem.constant([0.0]), np.array([2.5]), 0, mesh)
    assert y[0] == 2.5


def test_unit_driver_advances_by_width_exactly():
    mesh = TimeMesh(1.0, 4, 4)
    traj, _ = solve(ODESystem.constant([1.0]), [0.0], mesh)
    assert np.array_equal(traj[:, 0], np.arange(5) * 0.25)


def test_decay_frozen_values():
    mesh = TimeMesh(1.0, 4, 4)
    sys = ODESystem.linear([[-1.0]])
    traj, _ = solve(sys, [1.0], mesh, 2, QAEConfig(n_phase=7))
    assert traj[-1, 0] == pytest.approx(0.35401705197304373, abs=1e-14)
    traj, _ = solve(sys, [1.0], mesh, 2, QAEConfig(n_phase=8))
    assert traj[-1, 0] == pytest.approx(0.35498028134852044, abs=1e-14)


def test_exact_mean_matches_taylor_oracle_for_system(rng):
    L = rng.normal(size=(3, 3)) * 0.5
    sys = ODESystem.linear(L, rng.normal(size=3))
    traj, report = solve(sys, rng.normal(size=3), TimeMesh(1.0, 5, 3), 3, mean_estimator=exact_mean)
    assert np.max(np.abs(report.oracle_delta)) < 1e-12


def test_heat_equation_decays_like_discrete_mode():
    grid = UniformGrid(8)
    sys = discretize_pde(FluxSpec(diffusivity=0.05), grid)
    y0 = np.sin(2 * np.pi * grid.x)
    lam = discrete_heat_mode_decay(0.05, grid.dx, 1.0)
    traj, report = solve(sys, y0, TimeMesh(0.5, 8, 4), 2, QAEConfig(n_phase=7))
    assert np.max(np.abs(traj[-1] - y0 * math.exp(-0.5 * lam))) < 1e-2
    exact, report = solve(sys, y0, TimeMesh(0.5, 8, 4), 2, mean_estimator=exact_mean)
    assert np.max(np.abs(report.oracle_delta)) < 1e-12


def test_burgers_close_to_rk4():
    grid = UniformGrid(8)
    sys = discretize_pde(FluxSpec(diffusivity=0.02, burgers=0.5), grid)
    y0 = 0.5 * np.sin(2 * np.pi * grid.x)
    traj, report = solve(sys, y0, TimeMesh(0.2, 8, 4), 3, mean_estimator=exact_mean)
    ref = rk4_integrate(sys, y0, 0.2 / 256, 256)
    assert report.oracle_delta is None
    assert np.max(np.abs(traj[-1] - ref[-1])) < 5e-3


def test_sampled_mode_is_seeded():
    mesh = TimeMesh(1.0, 2, 4)
    sys = ODESystem.linear([[-1.0]])
    cfg = QAEConfig(n_phase=5, mode="sampled", M=3, seed=9)
    a, _ = solve(sys, [1.0], mesh, 2, cfg)
    b, _ = solve(sys, [1.0], mesh, 2, cfg)
    assert np.array_equal(a, b)


def test_report_serializes():
    _, report = solve(ODESystem.linear([[-1.0]]), [1.0], TimeMesh(1.0, 2, 2))
    d = report.to_dict()
    assert len(d["steps"]) == 2 and "uncertainty" in d["steps"][0]


def test_nonfinite_state_rejected():
    with pytest.raises(IntegratorError):
        propagate_step(ODESystem.linear([[-1.0]]), np.array([np.nan]), 0, TimeMesh(1.0, 1, 1))
