import math

import numpy as np
import pytest

from lll_lab.catalog import omega
from lll_lab.fock import basis_vector, hamiltonian, random_state
from lll_lab.nonlinear import (NonlinearWorkspace, g_mu, grad_gmu, hess_gmu, nonlinear, nonlinear_derivative,
                               trilinear)
from lll_lab.oracles import brute_force_nonlinear


@pytest.mark.parametrize("N", [1, 2, 5, 12])
def test_matches_quadruple_loop(N):
    rng = np.random.default_rng(N)
    for _ in range(5):
        c = random_state(N, rng, kind="flat")
        ref = brute_force_nonlinear(c)
        assert np.linalg.norm(nonlinear(c) - ref) <= 1e-13 * np.linalg.norm(ref)


def test_basis_functions_are_eigenvectors():
    for n in range(6):
        e = basis_vector(n, 16)
        assert np.allclose(nonlinear(e), omega(n) * e, atol=1e-15)
    assert omega(0) == pytest.approx(1 / (2 * math.pi))


def test_trilinear_symmetry_and_hamiltonian_pairing():
    rng = np.random.default_rng(1)
    a, b, d = (random_state(10, rng, kind="flat") for _ in range(3))
    assert np.allclose(trilinear(a, b, d), trilinear(a, d, b))
    c = random_state(10, rng)
    # H = (1/4) <N(c), c>
    assert 0.25 * np.vdot(c, nonlinear(c)).real == pytest.approx(hamiltonian(c), rel=1e-13)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    c = random_state(12, rng)
    v = random_state(12, rng)
    mu = 0.37
    h = 1e-6
    fd = (g_mu(c + h * v, mu) - g_mu(c - h * v, mu)) / (2 * h)
    assert np.vdot(grad_gmu(c, mu), v).real == pytest.approx(fd, rel=1e-8)


def test_gradient_examples():
    e0, e1 = basis_vector(0, 8), basis_vector(1, 8)
    assert np.allclose(grad_gmu(e0, 1.0), 4 * e0)
    assert np.allclose(grad_gmu(e1, 0.0), 2 * e1)


def test_hessian_vector_product_matches_gradient_differences():
    rng = np.random.default_rng(3)
    c, v = random_state(10, rng), random_state(10, rng)
    h = 1e-6
    fd = (grad_gmu(c + h * v, 0.2) - grad_gmu(c - h * v, 0.2)) / (2 * h)
    assert np.allclose(hess_gmu(c, v, 0.2), fd, atol=1e-8)
    fdn = (nonlinear(c + h * v) - nonlinear(c - h * v)) / (2 * h)
    assert np.allclose(nonlinear_derivative(c, v), fdn, atol=1e-9)


def test_workspace_capacity_is_checked():
    ws = NonlinearWorkspace(8)
    with pytest.raises(ValueError):
        nonlinear(np.ones(6, dtype=complex), ws)
    with pytest.raises(ValueError):
        NonlinearWorkspace(0)
