import math

import numpy as np
import pytest

from lll_lab.catalog import (ETA0, catalog_distance, certify, fit_decay, fit_multipliers, gamma_of_b,
                             make_chi_alpha, make_phi_n_alpha, make_psi_b, make_tempered_deg2, make_v_k,
                             manifold_fit, omega, psi_b_lambda, solve_b_for_gamma)
from lll_lab.fock import conserved, random_state


def _check_closed_form(w, tol=1e-10):
    cq = conserved(w.coeffs)
    cf = w.closed_form
    assert cq.M == pytest.approx(cf["M"], abs=tol)
    assert cq.P == pytest.approx(cf["P"], abs=tol)
    assert abs(cq.Q - cf["Q"]) < tol
    assert cq.H == pytest.approx(cf["H"], abs=tol)


@pytest.mark.parametrize("n,alpha", [(0, 0), (1, 0), (2, 0), (3, 0.5 - 0.2j), (5, 1.0j)])
def test_phi_n_alpha(n, alpha):
    w = make_phi_n_alpha(n, alpha, 96)
    assert w.residual < 1e-12
    _check_closed_form(w)


@pytest.mark.parametrize("b", [0.0, 0.5, 1.0, 2.0])
def test_psi_b(b):
    w = make_psi_b(b, 96)
    assert w.residual < 1e-12
    _check_closed_form(w)
    assert w.lam == pytest.approx(psi_b_lambda(b))


def test_psi_b_at_zero_is_phi1():
    assert np.allclose(make_psi_b(0.0, 16).coeffs, make_phi_n_alpha(1, 0, 16).coeffs)
    assert psi_b_lambda(0) - 1 / (8 * math.pi) == pytest.approx(omega(1))


@pytest.mark.parametrize("alpha", [1.0, 1.5 + 0.5j])
def test_chi_alpha(alpha):
    w = make_chi_alpha(alpha, 128)
    assert w.residual < 1e-12
    _check_closed_form(w)


def test_v_k():
    w = make_v_k(1.0, 1, 192)
    assert w.residual < 1e-11
    _check_closed_form(w, tol=1e-9)


def test_tempered_waves_windowed():
    for variant, param in (("gauss2", 0.0), ("gauss2", 0.7), ("z_gauss2", 0.0), ("z_gauss2", 0.4)):
        w = make_tempered_deg2(variant, param, 256)
        assert not w.normalizable
        assert w.residual < 1e-10, (variant, param)
    # the i s z factor moves the frequency
    assert make_tempered_deg2("gauss2", 0.7, 64).lam == pytest.approx(math.exp(0.245) / math.sqrt(2))
    with pytest.raises(ValueError):
        make_tempered_deg2("cubic", 0.0, 64)


def test_constructor_errors():
    with pytest.raises(ValueError):
        make_phi_n_alpha(-1, 0, 16)
    with pytest.raises(ValueError):
        make_psi_b(-1.0, 16)
    with pytest.raises(ValueError):
        make_chi_alpha(0, 16)
    with pytest.raises(ValueError):
        make_v_k(1.0, 0, 16)
    with pytest.raises(ValueError):
        make_phi_n_alpha(2, 3.0, 16)  # too small a truncation
    with pytest.raises(ValueError):
        certify(np.zeros(4), 1.0, 0.0)


def test_fit_multipliers_recovers_psi_b():
    w = make_psi_b(0.8, 64)
    lam, mu, res = fit_multipliers(w.coeffs)
    assert lam == pytest.approx(w.lam, rel=1e-12)
    assert mu == pytest.approx(w.mu, rel=1e-10)
    assert res < 1e-12


def test_generic_state_is_not_stationary():
    c = random_state(32, np.random.default_rng(0))
    assert fit_multipliers(c)[2] > 1e-3


def test_decay_fit_on_known_profile():
    n = np.arange(200)
    gamma, r = 0.4, 1.7
    c = np.exp(-gamma * n * np.log(np.maximum(n, 1)) + n * np.log(r))
    fit = fit_decay(c)
    assert fit.gamma_hat == pytest.approx(gamma, rel=1e-8)
    assert fit.r_hat == pytest.approx(r, rel=1e-6)
    assert fit.eta_hat == pytest.approx(1 / (0.5 + gamma))
    assert ETA0 == pytest.approx(1 / (0.5 + math.log(2) / (2 * math.log(3))))
    with pytest.raises(ValueError):
        fit_decay(np.ones(10))


def test_manifold_fit_and_catalog_distance():
    w = make_psi_b(1.0, 64)
    mf = manifold_fit(w.coeffs)
    assert mf.ok and mf.residual < 1e-10
    assert catalog_distance(w.coeffs).distance < 1e-6
    d2 = catalog_distance(make_phi_n_alpha(2, 0.3, 64).coeffs, n_max=3)
    assert d2.nearest == "phi_2" and d2.distance < 1e-6
    far = catalog_distance(make_chi_alpha(1.5, 64).coeffs, n_max=4)
    assert far.distance > 0.1


def test_gamma_b_inverse():
    for b in (0.0, 0.3, 1.0, 2.5):
        assert solve_b_for_gamma(gamma_of_b(b)) == pytest.approx(b, abs=1e-10)
    with pytest.raises(ValueError):
        solve_b_for_gamma(1.0)
    with pytest.raises(ValueError):
        solve_b_for_gamma(0.3)
