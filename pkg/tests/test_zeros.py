import math

import numpy as np
import pytest

from lll_lab.catalog import make_chi_alpha, make_phi_n_alpha, make_psi_b, make_v_k
from lll_lab.zeros import (aberth, cluster_roots, find_zeros, growth_fit, jensen_count_check, lattice_surrogate,
                           midpoint_counts, root_residuals, zero_count_in_trust_radius)


def _match(found, expected, tol):
    found = np.array(sorted(found, key=lambda z: (round(z.real, 6), round(z.imag, 6))))
    expected = np.array(sorted(expected, key=lambda z: (round(z.real, 6), round(z.imag, 6))))
    assert found.size == expected.size
    for z in expected:
        assert np.min(np.abs(found - z)) < tol


def test_aberth_agrees_with_companion_matrix():
    rng = np.random.default_rng(0)
    for deg in (3, 10, 30):
        a = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        res = aberth(a)
        assert res.converged.all()
        _match(res.roots, np.roots(a[::-1]), 1e-8)


def test_aberth_edge_cases():
    assert aberth([2.0]).roots.size == 0
    with pytest.raises(ValueError):
        aberth([1.0, 0.0])


def test_cluster_roots_merges_multiple_roots():
    roots = np.array([1.0, 1.0 + 1e-9, 1.0 - 1e-9j, 2.0])
    out = cluster_roots(roots)
    assert sorted(m for _, m in out) == [1, 3]


def test_chi_zeros_are_on_imaginary_lattice():
    c = make_chi_alpha(1.0, 128).coeffs
    rep = find_zeros(c, radius=4.0)
    _match([z for z, _ in rep.roots], [0, 1j * math.pi, -1j * math.pi], 1e-8)
    assert rep.count == 3
    assert np.all(root_residuals(c, rep.roots) < 1e-10)


def test_chi_zero_counting_grows_linearly():
    rep = find_zeros(make_chi_alpha(1.0, 512).coeffs)
    assert rep.eta_hat == pytest.approx(1.0, abs=1e-6)


def test_v1_has_a_double_zero_at_origin():
    rep = find_zeros(make_v_k(math.sqrt(math.pi), 1, 256).coeffs)
    # c_1 is roundoff rather than exactly zero, so the pair may come back as two roots
    assert sum(m for z, m in rep.roots if abs(z) < 1e-6) == 2
    assert rep.eta_hat == pytest.approx(1.0, abs=0.05)


def test_catalog_members_have_finitely_many_zeros():
    assert zero_count_in_trust_radius(make_psi_b(1.0, 96).coeffs) == 1
    assert zero_count_in_trust_radius(make_phi_n_alpha(3, 0.5, 96).coeffs) == 3
    # phi_3^a vanishes to order 3 at conj(a); the triple root splits by about eps^(1/3)
    rep = find_zeros(make_phi_n_alpha(3, 0.5, 96).coeffs, cluster_tol=1e-3)
    (z, m), = rep.roots
    assert m == 3 and abs(z - 0.5) < 1e-4


def test_zero_state_raises():
    with pytest.raises(ValueError):
        find_zeros(np.zeros(8))


def test_midpoint_counts_on_staircase():
    roots = [(complex(r), 1) for r in (1.0, 2.0, 2.0 + 1e-9, 3.0)]
    assert midpoint_counts(roots) == [(1.5, 1), (2.5, 3)]
    assert midpoint_counts([]) == []


def test_growth_fit():
    counts = [(r, int(round(r * r))) for r in np.linspace(2, 20, 30)]
    assert growth_fit(counts) == pytest.approx(2.0, abs=0.02)
    with pytest.raises(ValueError):
        growth_fit([(1.0, 1), (2.0, 0), (3.0, 2)])


def test_lattice_surrogate_recovers_its_lattice():
    c, pts = lattice_surrogate(rho=5.0)
    rep = find_zeros(c, radius=4.0)
    inside = pts[np.abs(pts) < 4.0]
    _match([z for z, _ in rep.roots], inside, 1e-6)


def test_lattice_surrogate_growth_is_quadratic():
    c, _ = lattice_surrogate(rho=8.0)
    assert find_zeros(c, radius=8.0).eta_hat == pytest.approx(2.0, abs=0.15)
    with pytest.raises(ValueError):
        lattice_surrogate(rho=5.0, N=4)


def test_jensen_bound_holds():
    for c in (make_psi_b(1.0, 128).coeffs, make_phi_n_alpha(2, 0.3, 128).coeffs, make_chi_alpha(1.0, 128).coeffs):
        chk = jensen_count_check(c, 3.0)
        assert chk.passed and chk.direct <= chk.count_bound + 1
    chk = jensen_count_check(make_phi_n_alpha(2, 0, 96).coeffs, 2.5)
    assert chk.origin_multiplicity == 2 and chk.passed


def test_jensen_rejects_large_radius():
    with pytest.raises(ValueError):
        jensen_count_check(make_psi_b(1.0, 32).coeffs, 100.0)
