import math

import numpy as np
import pytest

from lll_lab.fock import basis_vector, magnetic_momentum, mass
from lll_lab.nonlinear import g_mu
from lll_lab.variational import (KAPPA0, KAPPA1, MinimizationProblem, bisect_threshold, gauge_fix, h_for_mu,
                                 min_eig_at, minimize_gmu, minimize_p_fixed, multistart, phase_orbit_distance,
                                 phi0_spectrum, phi1_spectrum, psi_b_orbit_distance, restricted_hessian_spectrum,
                                 sweep_mu, physical_to_mu)


@pytest.mark.parametrize("mu", [0.1, 0.5, 1.0])
def test_phi0_spectrum_closed_form(mu):
    N = 24
    num = restricted_hessian_spectrum(basis_vector(0, N), mu)
    assert np.allclose(num, phi0_spectrum(mu, N - 1), atol=1e-12)


@pytest.mark.parametrize("mu", [0.1, 0.3, 0.6])
def test_phi1_spectrum_closed_form(mu):
    N = 24
    num = restricted_hessian_spectrum(basis_vector(1, N), mu)
    assert np.allclose(num, phi1_spectrum(mu, N - 1), atol=1e-12)


def test_phase_direction_is_a_zero_mode():
    eigs = restricted_hessian_spectrum(basis_vector(0, 16), 0.7, quotient_phase=False)
    assert np.sum(np.abs(eigs) < 1e-12) == 1
    assert eigs.size == restricted_hessian_spectrum(basis_vector(0, 16), 0.7).size + 1


def test_thresholds():
    assert bisect_threshold(lambda m: min_eig_at(0, m), 0.3, 0.7) == pytest.approx(0.5, abs=1e-9)
    assert bisect_threshold(lambda m: min_eig_at(1, m), 0.05, 0.3) == pytest.approx(KAPPA0, abs=1e-9)
    assert bisect_threshold(lambda m: min_eig_at(1, m), 0.3, 0.7) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ValueError):
        bisect_threshold(lambda m: 1.0, 0, 1)


def test_sweep_rows():
    rows = sweep_mu([0.2, 0.6])
    assert rows[0]["min_eig_phi0"] < 0 < rows[1]["min_eig_phi0"]
    assert rows[1]["G_phi1"] == pytest.approx(1.1)


def test_gaussian_is_global_minimizer_at_mu_one():
    for r in multistart(1.0, 48, seeds=range(4)):
        assert r.converged
        assert r.objective == pytest.approx(1.0, abs=1e-9)
        assert phase_orbit_distance(r.minimizer, 0) < 1e-6


def test_minimizer_below_threshold_beats_catalog():
    r = minimize_gmu(0.1, 96, seed=0, parity=("multiples_of", 3))
    assert r.converged and r.certify_residual < 1e-8
    assert r.objective < min(1.0, 0.5 + 0.1)
    assert abs(mass(r.minimizer) - 1) < 1e-12


def test_phi2_second_variation_curvature():
    # along e_0 - e_4 the P terms cancel and G_mu bends down at rate -(4 sqrt 6 - 7)/16 for every mu
    N = 16
    v = basis_vector(0, N) - basis_vector(4, N)
    for mu in (0.5, 2.0):
        c = basis_vector(2, N) + 1e-4 * v
        c = c / math.sqrt(mass(c))
        ratio = (g_mu(c, mu) - 3 / 8 - 2 * mu) / 1e-8
        assert ratio == pytest.approx(-(4 * math.sqrt(6) - 7) / 16, abs=1e-5)


@pytest.mark.slow
def test_p_minimizer_is_psi_b_above_half():
    gamma = 0.6
    r = minimize_p_fixed(gamma / (8 * np.pi), N=48, seeds=(0,))
    ref = r.extra["psi_b"]
    assert r.objective == pytest.approx(ref["P_expected"], abs=1e-8)
    assert ref["orbit_distance"] < 1e-6


def test_p_minimizer_below_half_is_centred_and_rotating():
    gamma = 0.3
    r = minimize_p_fixed(gamma / (8 * np.pi), N=48, seeds=(0,))
    assert r.converged
    assert abs(magnetic_momentum(r.minimizer)) < 1e-8
    assert abs(r.multipliers[1]) > 1e-3
    assert "psi_b" not in r.extra


def test_psi_b_distance_is_rotation_invariant():
    from lll_lab.catalog import make_psi_b

    ref = make_psi_b(1.0, 32).coeffs
    rot = np.exp(1j * 0.4 + 1j * 1.1 * np.arange(32)) * ref
    assert psi_b_orbit_distance(rot, ref) < 1e-10


def test_problem_validation():
    with pytest.raises(ValueError):
        MinimizationProblem("gmu", 8, mu=-1.0, seed=0)
    with pytest.raises(ValueError):
        MinimizationProblem("gmu", 8, mu=1.0)
    with pytest.raises(ValueError):
        MinimizationProblem("p_fixed_hm", 8, H0=1.0, seed=0)
    with pytest.raises(ValueError):
        MinimizationProblem("other", 8, seed=0)


def test_gauge_fix_makes_largest_coefficient_real():
    c = np.exp(0.3j) * np.array([0.1, 0.9, 0.2j])
    g = gauge_fix(c)
    assert abs(g[np.argmax(np.abs(g))].imag) < 1e-15
    assert np.allclose(np.abs(g), np.abs(c))


def test_physical_conversion():
    conv = physical_to_mu(0.1, 2.0, 3.0)
    assert conv.mu == pytest.approx(4 * math.pi * 0.01 / 6)
    assert h_for_mu(conv.mu, 2.0, 3.0) == pytest.approx(0.1)
    assert conv.below_kappa0 and not conv.above_kappa1
    assert conv.gaussian_energy == pytest.approx(conv.scale + 0.1)
    big = physical_to_mu(h_for_mu(1.0, 2.0, 3.0), 2.0, 3.0)
    assert big.above_kappa1 and KAPPA1 < 1
    with pytest.raises(ValueError):
        physical_to_mu(1.5, 1, 1)
    with pytest.raises(ValueError):
        physical_to_mu(0.5, 0, 1)
