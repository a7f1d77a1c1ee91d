import math
from fractions import Fraction

import numpy as np
import pytest

from lll_lab.fock import basis_vector
from lll_lab.nonlinear import nonlinear_derivative
from lll_lab.stability import (ContinuationError, alpha_coef, alpha_pi_exact, beta_coef, beta_sq_pi2_exact,
                               branch_b0, branch_slope, continue_branch, delta_coef, delta_pi2_exact,
                               exponential_rate, fit_coefficient_envelope, linearize_phi_n,
                               nonlinear_instability_experiment, omega_coef, omega_pi_exact, printed_alpha,
                               remainder_check, unstable_direction)


def test_exact_rationals_match_floats():
    for n in range(11):
        assert float(omega_pi_exact(n)) / math.pi == pytest.approx(omega_coef(n), rel=1e-14)
        for k in range(2 * n + 1):
            assert float(alpha_pi_exact(n, k)) / math.pi == pytest.approx(alpha_coef(n, k), rel=1e-14)
            assert math.sqrt(float(beta_sq_pi2_exact(n, k))) / math.pi == pytest.approx(beta_coef(n, k), rel=1e-14)
            d = float(delta_pi2_exact(n, k)) / math.pi**2
            assert delta_coef(n, k) == pytest.approx(d, rel=1e-12, abs=1e-15)


def test_delta_is_symmetric_in_the_pair():
    for n in range(2, 8):
        for k in range(2 * n + 1):
            assert delta_pi2_exact(n, k) == delta_pi2_exact(n, 2 * n - k)


def test_phi2_discriminant():
    assert delta_pi2_exact(2, 0) == Fraction(47, 4096)
    assert delta_pi2_exact(2, 0, printed=True) == Fraction(95, 16384)
    assert printed_alpha(3, 1) == pytest.approx(0.5 * alpha_coef(3, 1))


def test_low_modes_are_stable():
    r0 = linearize_phi_n(0, k_max=4)
    assert r0.unstable_modes == [] and r0.row(0).kind == "linear"
    assert [r.kind for r in r0.modes[1:]] == ["neutral"] * 4
    assert linearize_phi_n(1).unstable_modes == []


def test_higher_modes_are_unstable():
    for n in range(2, 12):
        assert delta_pi2_exact(n, n - 2) > 0
        assert linearize_phi_n(n).max_growth_rate > 0
    rep = linearize_phi_n(2)
    assert rep.row(0).growth_rate == pytest.approx(math.sqrt(47 / 4096) / math.pi / 2, rel=1e-14)


def test_coefficients_are_the_linearized_nonlinearity():
    N = 16
    for n in range(4):
        e_n = basis_vector(n, N)
        for k in range(2 * n + 1):
            if k == n:
                continue
            col = nonlinear_derivative(e_n, basis_vector(k, N))
            assert col[k].real == pytest.approx(alpha_coef(n, k), rel=1e-12)
            assert col[2 * n - k].real == pytest.approx(beta_coef(n, k), rel=1e-12)


def test_unstable_direction():
    d, rate = unstable_direction(3, 16)
    assert np.linalg.norm(d) == pytest.approx(1.0)
    assert rate == pytest.approx(linearize_phi_n(3).max_growth_rate, rel=1e-12)
    with pytest.raises(ValueError):
        unstable_direction(1, 16)
    with pytest.raises(ValueError):
        unstable_direction(4, 6)


@pytest.mark.slow
def test_nonlinear_growth_matches_linear_rate():
    exp = nonlinear_instability_experiment(2, 1e-4, 300.0, N=24, dt=0.1)
    assert exp.rate_rel_error < 0.2
    assert exp.drift["M_rel"] < 1e-8


def test_stable_waves_stay_close():
    for n in (0, 1):
        exp = nonlinear_instability_experiment(n, 1e-4, 50.0, N=24, dt=0.1)
        assert exp.bound_constant < 1.0
    exp = nonlinear_instability_experiment("psi_b", 1e-4, 20.0, N=32, dt=0.05)
    assert exp.bound_constant < 1.0
    with pytest.raises(ValueError):
        nonlinear_instability_experiment(0, 0.1, 1.0)


def test_exponential_rate_fit():
    t = np.linspace(0, 10, 50)
    assert exponential_rate(t, 1e-6 * np.exp(0.3 * t)) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        exponential_rate(t, np.ones(50))


@pytest.mark.parametrize("k0", [2, 3])
def test_branch_from_phi0(k0):
    assert branch_b0(k0) == pytest.approx(1.0)
    pts = continue_branch(k0, 0.08, 0.01, N=16 * k0 + 16)
    assert len(pts) == 8
    for p in pts:
        assert p.residual < 1e-11
        nz = np.flatnonzero(np.abs(p.state) > 0)
        assert np.all(nz % k0 == 0)
    chk = remainder_check(pts, k0)
    for s, ratio in chk["ratios"]:
        assert ratio == pytest.approx(4.0, rel=0.1)
    assert np.isfinite(branch_slope(pts))
    eps = [fit_coefficient_envelope(p.state)[1] for p in pts]
    assert eps[-1] > eps[0]


def test_branch_errors():
    with pytest.raises(ValueError):
        continue_branch(1, 0.1, 0.01)
    with pytest.raises(ValueError):
        continue_branch(4, 0.1, 0.01, N=32)
    with pytest.raises(ValueError):
        continue_branch(2, 0.1, 0.0)
    with pytest.raises(ValueError):
        fit_coefficient_envelope(np.array([1.0, 0.0, 0.0]))
    assert issubclass(ContinuationError, RuntimeError)
