"""Registry of the acceptance checks, shared by the test suite and ``lll-lab repro``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

TOL_EXACT = 1e-9


@dataclass
class Item:
    label: str
    passed: bool
    detail: str = ""


@dataclass
class CheckResult:
    cid: int
    name: str
    items: list[Item] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def add(self, label: str, passed, detail: str = "") -> bool:
        self.items.append(Item(label, bool(passed), detail))
        return bool(passed)

    def lines(self) -> list[str]:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.cid:>2} {self.name} ({self.seconds:.1f}s)"
        return [head] + [f"    {'ok  ' if i.passed else 'FAIL'} {i.label}: {i.detail}" for i in self.items]

    def as_dict(self) -> dict:
        return {
            "id": self.cid, "name": self.name, "passed": self.passed, "seconds": self.seconds,
            "items": [i.__dict__ for i in self.items],
        }


# ---------------------------------------------------------------------------

def stationary(r: CheckResult) -> None:
    from .catalog import (make_chi_alpha, make_phi_n_alpha, make_psi_b, make_v_k, omega,
                          psi_b_lambda, v_k_momentum)
    from .fock import conserved

    N = 96
    waves = [(make_phi_n_alpha(n, 0, N), omega(n), 0.0) for n in range(7)]
    waves += [(make_phi_n_alpha(n, a, N), omega(n), 0.0)
              for n in (0, 1, 3) for a in (0.6 + 0.8j, -0.5, 0.3j)]
    waves += [(make_psi_b(b, N), psi_b_lambda(b), -1 / (8 * np.pi)) for b in (0.0, 0.5, 1.0, 2.0)]
    waves += [(make_chi_alpha(a, N), 1 / (4 * np.pi), 0.0) for a in (1.0, 0.8 + 0.6j)]
    waves += [(make_v_k(math.sqrt(math.pi), 1, N), 1 / (8 * np.pi), 0.0)]
    worst_res = worst_cf = 0.0
    for w, lam, mu in waves:
        tag = f"{w.family}{w.params}"
        worst_res = max(worst_res, w.residual)
        r.add(f"{tag} residual", w.residual < TOL_EXACT and abs(w.lam - lam) < 1e-15 and w.mu == mu,
              f"{w.residual:.1e}")
        cs = conserved(w.coeffs)
        got = {"M": cs.M, "P": cs.P, "Q": cs.Q, "H": cs.H}
        cf = dict(w.closed_form)
        if w.family == "v_k":
            cf.setdefault("P", v_k_momentum(w.params["alpha"], w.params["k"]))
        err = max(abs(got[k] - v) for k, v in cf.items())
        worst_cf = max(worst_cf, err)
        r.add(f"{tag} closed forms {sorted(cf)}", err < TOL_EXACT, f"{err:.1e}")
    r.add("summary", True, f"{len(waves)} waves, worst residual {worst_res:.1e}, worst closed-form error {worst_cf:.1e}")


def carlen(r: CheckResult) -> None:
    from .fock import carlen_ratio, coherent_coeffs, random_state

    rng = np.random.default_rng(2024)
    ratios = [carlen_ratio(random_state(64, rng, kind="flat" if j % 2 else "localized")) for j in range(1000)]
    viol = sum(x > 1 + 1e-12 for x in ratios)
    r.add("1000 random states, 8 pi H <= M^2", viol == 0, f"violations {viol}, max ratio {max(ratios):.6f}")
    dev = max(abs(carlen_ratio(coherent_coeffs(a, 64)) - 1) for a in (0, 0.5, 1 + 1j, -2.0, 2.5j))
    r.add("coherent states attain equality", dev < 1e-10, f"max |ratio - 1| {dev:.1e}")


def conservation(r: CheckResult) -> None:
    from .dynamics import IntegratorConfig, run
    from .fock import random_state

    c0 = random_state(64, np.random.default_rng(7))
    d = run(c0, IntegratorConfig("rk4", dt=1e-3, t_end=10.0, snapshot_stride=1000)).drift()
    r.add("rk4 relative M, H drift", max(d["M_rel"], d["H_rel"]) < 1e-8, f"M {d['M_rel']:.1e}, H {d['H_rel']:.1e}")
    r.add("rk4 absolute P, Q drift", max(d["P_abs"], d["Q_abs"]) < 1e-8, f"P {d['P_abs']:.1e}, Q {d['Q_abs']:.1e}")
    T = 10.0
    d = run(c0, IntegratorConfig("implicit_midpoint", dt=1e-2, t_end=T, snapshot_stride=1000)).drift()
    r.add("implicit midpoint M drift per unit time", d["M_rel"] / T < 1e-10, f"{d['M_rel'] / T:.1e}")


def kernel(r: CheckResult) -> None:
    from .fock import random_state
    from .nonlinear import nonlinear
    from .oracles import brute_force_nonlinear

    rng = np.random.default_rng(11)
    worst = 0.0
    for j in range(100):
        N = 1 + j % 12
        c = random_state(N, rng, kind="flat")
        ref = brute_force_nonlinear(c)
        worst = max(worst, float(np.linalg.norm(nonlinear(c) - ref) / np.linalg.norm(ref)))
    r.add("O(N^2) kernel vs quadruple loop, N <= 12", worst < 1e-13, f"max rel error {worst:.1e}")


def thresholds(r: CheckResult) -> None:
    from .variational import KAPPA0, KAPPA1, physical_to_mu, verify_thresholds

    rep = verify_thresholds(N=32, starts=16, seed=0, mu_global=1.0, start_N=64)
    r.add("phi_0 Hessian sign change at 1/2", abs(rep.phi0 - 0.5) < 1e-6, f"{rep.phi0:.9f}")
    r.add("phi_1 lower threshold 5/32", abs(rep.phi1_lower - 5 / 32) < 1e-6, f"{rep.phi1_lower:.9f}")
    g = rep.global_check
    r.add("mu = 1: 16 starts reach G = 1", g["max_objective_error"] < 1e-7, f"max |G - 1| {g['max_objective_error']:.1e}")
    r.add("mu = 1: minimizers in the phi_0 phase orbit", g["max_phi0_orbit_distance"] < 1e-6,
          f"max distance {g['max_phi0_orbit_distance']:.1e}")
    conv = physical_to_mu(0.2, 1.0, 0.96)
    ok = abs(conv.mu - 4 * math.pi * 0.04 / 0.96) < 1e-15 and conv.below_kappa0 == (conv.mu < KAPPA0) \
        and conv.above_kappa1 == (conv.mu > KAPPA1)
    r.add("physical rescaling h = 0.2, Na = 1, Omega^2 = 0.96", ok, f"mu = {conv.mu:.6f}")


def infinite_zeros(r: CheckResult) -> None:
    from .catalog import catalog_distance
    from .variational import minimize_gmu
    from .zeros import zero_count_in_trust_radius

    runs = [minimize_gmu(0.1, 128, seed=s) for s in (3, 4)]
    best = min(runs, key=lambda x: x.objective)
    r.add("mu = 0.1 minimizer converged (N=128)", best.converged,
          f"G {best.objective:.12f}, |grad| {best.gradient_norm:.1e}, mu_hat {best.multipliers[1]:.6f}")
    cd = catalog_distance(best.minimizer)
    r.add("distance to finite-zero catalog > 1e-3", cd.distance > 1e-3, f"{cd.distance:.4f} (nearest {cd.nearest})")
    big = minimize_gmu(0.1, 192, init=best.minimizer)
    n128 = zero_count_in_trust_radius(best.minimizer)
    n192 = zero_count_in_trust_radius(big.minimizer)
    r.add("N=192 minimizer converged", big.converged and abs(big.objective - best.objective) < 1e-10,
          f"G {big.objective:.12f}")
    r.add("zero count inside trust radius grows 128 -> 192", n192 > n128, f"{n128} -> {n192}")


def pmin(r: CheckResult) -> None:
    from .catalog import solve_b_for_gamma
    from .fock import magnetic_momentum
    from .variational import minimize_p_fixed

    gamma = 0.6
    b = solve_b_for_gamma(gamma)
    res = minimize_p_fixed(gamma / (8 * np.pi), N=48, seeds=(0, 1))
    P_exp = 1 / (1 + b * b) ** 2
    r.add("P = 1/(1+b^2)^2", abs(res.objective - P_exp) < 1e-6, f"P {res.objective:.12f} vs {P_exp:.12f} (b = {b:.9f})")
    Q = abs(magnetic_momentum(res.minimizer))
    r.add("|Q| < 1e-8", Q < 1e-8, f"{Q:.1e}")
    d = res.extra["psi_b"]["orbit_distance"]
    r.add("minimizer is psi_b up to phase and rotation", d < 1e-6, f"distance {d:.1e}")


def instability(r: CheckResult) -> None:
    from .stability import delta_pi2_exact, linearize_phi_n, nonlinear_instability_experiment

    exact = delta_pi2_exact(2, 0)
    target = Fraction(95, 16384)
    r.add("pi^2 Delta_{2,0} = 95/16384 (exact)", exact == target,
          f"computed {exact} = {float(exact):.6g}; target {target} = {float(target):.6g}")
    rep = linearize_phi_n(2)
    pred = math.sqrt(rep.row(0).delta) / 2
    exp = nonlinear_instability_experiment(2, 1e-4, 60.0)
    rel = abs(exp.fitted_rate - pred) / pred
    r.add("phi_2 nonlinear growth rate vs sqrt(Delta_{2,0})/2", rel < 0.2,
          f"fitted {exp.fitted_rate:.7f}, predicted {pred:.7f}, rel {rel:.1e}")
    r.add("phi_0, phi_1 linearly stable", not linearize_phi_n(0).unstable_modes and not linearize_phi_n(1).unstable_modes)
    eps = 1e-3
    for n in (0, 1):
        e = nonlinear_instability_experiment(n, eps, 100.0)
        r.add(f"phi_{n} orbit distance over T = 100 stays below sqrt(eps)", e.bound_constant < 1.0,
              f"max distance {e.distance.max():.2e}, C = {e.bound_constant:.3f}")


def bifurcation(r: CheckResult) -> None:
    from .stability import continue_branch, remainder_check

    for k0, N in ((2, 64), (3, 96)):
        pts = continue_branch(k0, 0.05, 0.005, N=N)
        r.add(f"k0={k0}: branch reaches s = 0.05", len(pts) == 10 and abs(pts[-1].s - 0.05) < 1e-12,
              f"{len(pts)} points")
        r.add(f"k0={k0}: b(0+) = 1", abs(pts[0].b - 1) < 5e-3, f"b({pts[0].s:g}) = {pts[0].b:.8f}")
        worst = max(p.residual for p in pts)
        r.add(f"k0={k0}: residual < 1e-9", worst < 1e-9, f"{worst:.1e}")
        off = max(float(np.max(np.abs(p.state[np.arange(N) % k0 != 0]))) for p in pts)
        r.add(f"k0={k0}: support on {k0}Z", off == 0.0, f"max off-lattice {off}")
        rc = remainder_check(pts, k0)
        ratio = dict(rc["ratios"]).get(pts[-1].s)
        r.add(f"k0={k0}: O(s^2) remainder (Richardson e(s)/e(s/2) ~ 4)",
              ratio is not None and abs(ratio - 4) < 0.5, f"ratio {ratio:.4f}, C = {rc['C']:.4f}")


def zeros(r: CheckResult) -> None:
    from .catalog import ETA0, make_chi_alpha, make_phi_n_alpha, make_psi_b, make_v_k
    from .fock import trust_radius
    from .zeros import find_zeros, jensen_count_check, lattice_surrogate

    rep = find_zeros(make_chi_alpha(1.0, 256).coeffs, radius=6.0)
    found = sorted((z for z, _ in rep.roots), key=lambda z: z.imag)
    expect = [-1j * math.pi, 0j, 1j * math.pi]
    err = max(abs(a - b) for a, b in zip(found, expect)) if len(found) == 3 else float("inf")
    r.add("chi_1 zeros in |z| < 6 are {0, +-i pi}", len(found) == 3 and err < 1e-8, f"{len(found)} roots, max error {err:.1e}")
    eta = find_zeros(make_chi_alpha(1.0, 512).coeffs).eta_hat
    r.add("chi_1 growth exponent ~ 1", abs(eta - 1) < 0.15, f"{eta:.4f}")
    eta = find_zeros(make_v_k(math.sqrt(math.pi), 1, 512).coeffs).eta_hat
    r.add("v_1 growth exponent ~ 1", abs(eta - 1) < 0.15, f"{eta:.4f}")
    eta = find_zeros(lattice_surrogate(rho=8.0)[0]).eta_hat
    r.add("2-D lattice surrogate growth exponent ~ 2", abs(eta - 2) < 0.15, f"{eta:.4f}")
    r.add("stationary exponents below eta0 + 0.15", True, f"eta0 = {ETA0:.4f}")
    N = 512
    R = min(8.0, trust_radius(N) / 2)
    members = [make_phi_n_alpha(n, a, N) for n in (0, 1, 2, 4) for a in (0, 0.7 - 0.4j)]
    members += [make_psi_b(b, N) for b in (0.0, 0.5, 1.0, 2.0)]
    members += [make_chi_alpha(1.0, N), make_chi_alpha(0.8 + 0.6j, N), make_v_k(math.sqrt(math.pi), 1, N)]
    for w in members:
        j = jensen_count_check(w.coeffs, R)
        r.add(f"Jensen {w.family}{w.params} R={R:g}", j.passed, f"direct {j.direct} <= {j.count_bound:.2f} + 1")


def decay(r: CheckResult) -> None:
    from .catalog import GAMMA0, fit_decay, make_chi_alpha
    from .fock import coherent_coeffs

    for name, c in (("coherent a=1.5", coherent_coeffs(1.5, 160)), ("coherent a=0.8i", coherent_coeffs(0.8j, 160)),
                    ("chi_1", make_chi_alpha(1.0, 160).coeffs), ("chi_2", make_chi_alpha(2.0, 200).coeffs)):
        f = fit_decay(c)
        r.add(f"{name}: gamma_hat in [0.4, 0.6] and >= gamma0", 0.4 <= f.gamma_hat <= 0.6 and f.gamma_hat >= GAMMA0,
              f"{f.gamma_hat:.4f}")


def manifold(r: CheckResult) -> None:
    from .dynamics import IntegratorConfig, manifold_point, run

    c0 = manifold_point(1.0, 0.3, 0.2, 64)
    sim = run(c0, IntegratorConfig("rk4", dt=1e-3, t_end=5.0, snapshot_stride=250), track_manifold=True)
    m = float(np.max(sim.manifold))
    r.add("manifold residual over T = 5", m < 1e-6, f"max {m:.1e}")


def norm_growth(r: CheckResult) -> None:
    from .dynamics import IntegratorConfig, fit_envelope, run
    from .fock import random_state

    c0 = random_state(64, np.random.default_rng(5))
    sim = run(c0, IntegratorConfig("rk4", dt=1e-2, t_end=50.0, snapshot_stride=100), weights=(3,))
    env = fit_envelope(sim.times, np.sqrt(sim.weighted[3.0]), exponent=1.0)
    r.add("W3^(1/2) within 10x of fitted C (1+t)", env["within_10x"], f"C = {env['C']:.4f}, worst ratio {env['worst_ratio']:.3f}")


def dictionary(r: CheckResult) -> None:
    from .fock import bargmann_dictionary_check

    rep = bargmann_dictionary_check()
    for row in rep.rows:
        r.add(f"{row.name} row vs quadrature", row.max_deviation < 1e-10, f"{row.max_deviation:.1e}")


CRITERIA: dict[int, tuple[str, Callable[[CheckResult], None], str]] = {
    1: ("stationary", stationary, "~5 s"),
    2: ("carlen", carlen, "~1 s"),
    3: ("conservation", conservation, "~10 s"),
    4: ("kernel", kernel, "~1 s"),
    5: ("thresholds", thresholds, "~20 s"),
    6: ("infinite-zeros", infinite_zeros, "~20 s"),
    7: ("pmin", pmin, "~5 s"),
    8: ("instability", instability, "~2 s"),
    9: ("bifurcation", bifurcation, "~1 s"),
    10: ("zeros", zeros, "~5 s"),
    11: ("decay", decay, "<1 s"),
    12: ("manifold", manifold, "~10 s"),
    13: ("norm-growth", norm_growth, "~5 s"),
    14: ("dictionary", dictionary, "~2 s"),
}


def resolve(key) -> int:
    key = str(key).strip().lower()
    if key.isdigit() and int(key) in CRITERIA:
        return int(key)
    for cid, (name, _, _) in CRITERIA.items():
        if key == name:
            return cid
    raise KeyError(f"unknown criterion {key!r}; known: " + ", ".join(f"{k}/{v[0]}" for k, v in CRITERIA.items()))


def run_check(key) -> CheckResult:
    cid = resolve(key)
    name, fn, _ = CRITERIA[cid]
    res = CheckResult(cid, name)
    t0 = time.perf_counter()
    try:
        fn(res)
    except Exception as exc:  # a crash is a failed criterion, reported rather than raised
        res.add("exception", False, f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res
