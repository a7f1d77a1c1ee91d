import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lll_lab.fock import (
    CoeffState, PlaneQuadrature, SymmetryAction, TruncationError, TruncationWarning, apply_symmetry,
    as_coeffs, basis_values, carlen_ratio, coherent_coeffs, conserved, displacement_matrix, evaluate,
    fourier, hamiltonian, interaction_bound_constant, log_sqrt_binomial, magnetic_momentum, mass,
    pair_kernel, quadrature_box_radius, random_state, trust_radius, weighted_norm_sq,
)
from lll_lab.oracles import exact_log_sqrt_binomial, quadrature_hamiltonian, quadrature_mass, quadrature_moment


def test_log_binomial_matches_exact_rationals():
    for S in range(0, 60, 7):
        for m in range(S + 1):
            assert log_sqrt_binomial(S, m) == pytest.approx(exact_log_sqrt_binomial(S, m), rel=1e-13, abs=1e-13)


def test_log_binomial_is_finite_for_huge_S():
    S = 10**6
    m = np.array([0, 1, S // 2, S])
    vals = np.exp(log_sqrt_binomial(np.full(4, S), m))
    assert np.all(np.isfinite(vals))
    # the central term is the largest and stays below 1
    assert vals[2] == max(vals) and vals[2] < 1


def test_log_binomial_rejects_bad_input():
    with pytest.raises(ValueError):
        log_sqrt_binomial(3, 4)
    with pytest.raises(TypeError):
        log_sqrt_binomial(3.0, 1)


def test_pair_kernel_padding():
    K, idx = pair_kernel(5)
    assert K.shape == (9, 5)
    assert K[0, 0] == 1.0
    assert K[8, 3] == 0 and idx[8, 3] == 5
    assert K[2, 1] == pytest.approx(math.sqrt(2 / 4))


def test_coeff_state_roundtrip_and_immutability(tmp_path):
    c = random_state(12, np.random.default_rng(0))
    s = CoeffState(c)
    with pytest.raises(ValueError):
        s.coeffs[0] = 1.0
    path = tmp_path / "s.json"
    s.save(path, note="x")
    back = CoeffState.load(path)
    assert np.array_equal(back.coeffs, s.coeffs)
    data = json.loads(path.read_text())
    assert data["n"] == 12 and data["note"] == "x"
    with pytest.raises(ValueError):
        CoeffState([np.nan])
    with pytest.raises(ValueError):
        CoeffState.from_dict({"n": 3, "coeffs": [[1, 0]]})


def test_trust_radius_definition():
    for N in (16, 64, 128):
        R = trust_radius(N)
        f = lambda r: N * math.log(r) - r * r / 2 - 0.5 * math.log(math.pi) - 0.5 * math.lgamma(N + 1)
        assert f(R) < math.log(1e-12) < f(R * (1 + 1e-9))
    assert trust_radius(64) < trust_radius(128)


def test_basis_values_match_direct_formula():
    z = np.array([0, 0.3 - 1.2j, 2.5 + 0.1j])
    ref = np.array([[zz**n * np.exp(-abs(zz) ** 2 / 2) / math.sqrt(math.pi * math.factorial(n)) for n in range(10)]
                    for zz in z])
    assert np.allclose(basis_values(10, z), ref, rtol=1e-13, atol=1e-300)


def test_evaluate_warns_beyond_trust_radius():
    c = coherent_coeffs(0.5, 32)
    R = trust_radius(32)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        evaluate(c, 0.5 * R)
    with pytest.warns(TruncationWarning):
        v = evaluate(c, R + 1)
    assert np.isfinite(v)


def test_parseval_and_quadrature_cross_checks():
    rng = np.random.default_rng(3)
    for N in (8, 32, 64):
        c = random_state(N, rng)
        assert quadrature_mass(c) == pytest.approx(mass(c), abs=1e-8)
        assert quadrature_hamiltonian(c) == pytest.approx(hamiltonian(c), abs=1e-8)
        assert abs(quadrature_moment(c) - magnetic_momentum(c)) < 1e-8


def test_angular_momentum_is_the_weighted_sum():
    c = random_state(20, np.random.default_rng(1))
    assert conserved(c).P == pytest.approx(np.sum(np.arange(20) * np.abs(c) ** 2))


def test_phase_and_rotation_preserve_conserved_quantities():
    c = random_state(24, np.random.default_rng(2))
    base = conserved(c)
    for act in (SymmetryAction("phase", 0.7), SymmetryAction("rotation", 1.3)):
        cs = conserved(apply_symmetry(c, act))
        assert cs.M == pytest.approx(base.M, abs=1e-14)
        assert cs.P == pytest.approx(base.P, abs=1e-13)
        assert cs.H == pytest.approx(base.H, abs=1e-15)
    with pytest.raises(ValueError):
        SymmetryAction("rotation", 1j)


def test_translation_moves_the_centre_of_mass():
    c = random_state(64, np.random.default_rng(4))
    a = 0.4 - 0.3j
    t = apply_symmetry(c, SymmetryAction("translation", a))
    assert mass(t) == pytest.approx(mass(c), abs=1e-10)
    assert hamiltonian(t) == pytest.approx(hamiltonian(c), abs=1e-10)
    assert abs(magnetic_momentum(t) - (magnetic_momentum(c) - a * mass(c))) < 1e-9
    # pointwise: u(z + a) exp((conj(z) a - z conj(a)) / 2)
    z = np.array([0.2 + 0.1j, -0.5j, 1.0])
    lhs = basis_values(64, z) @ t
    rhs = basis_values(64, z + a) @ c * np.exp((np.conj(z) * a - z * np.conj(a)) / 2)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_displacement_composition_law():
    N = 80
    a, b = 0.3 + 0.2j, -0.1 + 0.4j
    D = displacement_matrix(a, N) @ displacement_matrix(b, N)
    ref = np.exp(1j * np.imag(a * np.conj(b))) * displacement_matrix(a + b, N)
    assert np.abs(D[:40, :40] - ref[:40, :40]).max() < 1e-12
    assert np.allclose(displacement_matrix(a, N)[:, 0], coherent_coeffs(a, N))


def test_translation_out_of_range_raises():
    c = coherent_coeffs(2.0, 16)
    with pytest.raises(TruncationError):
        apply_symmetry(c, SymmetryAction("translation", 4.0))


def test_fourier_is_rotation_by_quarter_turn():
    c = random_state(10, np.random.default_rng(5))
    assert np.allclose(fourier(c), (1j) ** np.arange(10) * c)
    assert np.allclose(fourier(fourier(fourier(fourier(c)))), c)


def test_carlen_equality_on_coherent_states():
    for a in (0, 1, 1.5 - 0.5j):
        assert carlen_ratio(coherent_coeffs(a, 64)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2**32 - 1),
       st.sampled_from(["flat", "localized"]))
def test_carlen_inequality_property(N, seed, kind):
    c = random_state(N, np.random.default_rng(seed), kind=kind)
    assert carlen_ratio(c) <= 1 + 1e-12


def test_weighted_norm_zero_weight_is_mass():
    c = random_state(10, np.random.default_rng(6))
    assert weighted_norm_sq(c, 0) == pytest.approx(mass(c))
    assert weighted_norm_sq(c, 3) >= 8 * mass(c)
    with pytest.raises(ValueError):
        weighted_norm_sq(c, -1)


def test_interaction_bound_constant():
    assert interaction_bound_constant(256) <= 2.0


def test_random_state_is_seeded_and_normalized():
    a = random_state(16, np.random.default_rng(9))
    b = random_state(16, np.random.default_rng(9))
    assert np.array_equal(a, b)
    assert mass(a) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        random_state(4, np.random.default_rng(0), kind="weird")


def test_quadrature_rule_integrates_gaussian():
    q = PlaneQuadrature.square(quadrature_box_radius(16), 120)
    assert q.integrate(np.exp(-np.abs(q.z) ** 2)) == pytest.approx(math.pi, rel=1e-12)


def test_as_coeffs_rejects_matrices():
    with pytest.raises(ValueError):
        as_coeffs(np.zeros((2, 2)))
