import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowq.ising import all_spins
from flowq.qade import (
    BasisSet,
    Equation,
    FunctionalResidual,
    QadeError,
    SpinEncoding,
    assemble_loss,
    decode_and_reconstruct,
    quadratic_test_problem,
    spin_encode,
    zoom_iterate,
)


def test_chebyshev_derivatives_exact():
    b = BasisSet("chebyshev", 3, (0.0, 1.0))
    x = np.linspace(0, 1, 5)
    # T_2 on [0, 1] is 2(2x-1)^2 - 1, second derivative 16
    assert np.allclose(b.evaluate(2, x, 2), 16.0)


def test_monomial_matrix():
    b = BasisSet("monomial", 2)
    assert np.allclose(b.matrix([2.0], 1), [[0, 1, 4]])


def test_no_equations_gives_zero_loss_terms():
    loss = assemble_loss(FunctionalResidual(()), BasisSet("monomial", 2))
    assert np.all(loss.J == 0) and np.all(loss.h == 0) and loss.constant == 0


def test_first_order_minimizer():
    # f' = 0 with f(0) = 3 in basis {1, x}
    problem = FunctionalResidual((
        Equation({(0, 1): 1.0}, 0.0, np.linspace(0, 1, 4)),
        Equation({(0, 0): 1.0}, -3.0, [0.0]),
    ))
    loss = assemble_loss(problem, BasisSet("monomial", 1))
    w = loss.minimizer()
    assert np.allclose(w, [3, 0])
    assert loss(w) == pytest.approx(0, abs=1e-20)


def test_quadratic_problem_exact_solution_has_zero_loss():
    loss = assemble_loss(quadratic_test_problem(), BasisSet("monomial", 2))
    assert loss([0, 0, 1]) == pytest.approx(0, abs=1e-24)


def test_field_index_checked():
    with pytest.raises(QadeError):
        FunctionalResidual((Equation({(1, 0): 1.0}, 0.0, [0.5]),), n_fields=1)


def test_all_minus_spins_decode():
    enc = SpinEncoding([0.0], 1.0, 2)
    assert enc.decode([-1, -1])[0] == pytest.approx(-0.75)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), n_spins=st.integers(1, 4))
def test_spin_energy_equals_loss(seed, n_spins):
    rng = np.random.default_rng(seed)
    basis = BasisSet("monomial", 2)
    loss = assemble_loss(quadratic_test_problem(), basis)
    enc = SpinEncoding(rng.normal(size=3), rng.uniform(0.1, 2, size=3), n_spins)
    ising = spin_encode(loss, enc)
    s = all_spins(enc.total_spins)
    direct = np.array([loss(enc.decode(row)) for row in s])
    assert np.max(np.abs(ising.energy(s) - direct)) < 1e-10 * max(1.0, np.max(np.abs(direct)))


def test_reconstruction_residual_matches_energy():
    basis = BasisSet("monomial", 2)
    loss = assemble_loss(quadratic_test_problem(), basis)
    enc = SpinEncoding([0.1, -0.2, 0.8], 1.0, 2)
    spins = np.array([1, -1, -1, 1, 1, 1])
    rec = decode_and_reconstruct(spins, enc, basis, loss)
    assert rec.residual == pytest.approx(spin_encode(loss, enc).energy(spins))
    assert np.allclose(rec.field([0.5]), basis.matrix([0.5]) @ rec.weights)


def test_exact_centre_stays_exact():
    res = zoom_iterate(quadratic_test_problem(), BasisSet("monomial", 2), SpinEncoding([0, 0, 1.0], 1.0, 3), 4)
    assert all(r == pytest.approx(0, abs=1e-24) for r in res.best_residuals)
    assert np.allclose(res.weights, [0, 0, 1])


def test_zoom_best_residual_monotone():
    res = zoom_iterate(quadratic_test_problem(), BasisSet("chebyshev", 2),
                       SpinEncoding([0.3, -0.1, 0.2], 2.0, 3), 5)
    assert all(b <= a for a, b in zip(res.best_residuals, res.best_residuals[1:]))


def test_zoom_frozen_weights():
    res = zoom_iterate(quadratic_test_problem(), BasisSet("monomial", 2), SpinEncoding([0, 0, 0], 2.0, 3), 6)
    assert np.allclose(res.weights, [-0.0078125, -0.0078125, 1.0078125], atol=1e-15)


def test_zoom_argument_checks():
    enc = SpinEncoding([0, 0, 0], 1.0, 2)
    with pytest.raises(QadeError):
        zoom_iterate(quadratic_test_problem(), BasisSet("monomial", 2), enc, 0)
    with pytest.raises(QadeError):
        zoom_iterate(quadratic_test_problem(), BasisSet("monomial", 2), enc, 2, shrink=1.0)
