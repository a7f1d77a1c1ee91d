"""Linear and nonlinear stability of the basis waves, and the bifurcating branch from phi_0.

Around phi_n the perturbation d_k = exp(i omega_n t) c_k obeys

    i d_k' = (alpha_{n,k} - omega_n) d_k + beta_{n,k} conj(d_{2n-k}),

so modes k and 2n-k pair up and grow at rate sqrt(Delta_{n,k}) / 2 when Delta > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .catalog import make_psi_b
from .dynamics import IntegratorConfig, run
from .fock import basis_vector, mass, random_state
from .nonlinear import nonlinear, nonlinear_derivative, workspace
from .variational import phase_orbit_distance, psi_b_orbit_distance


# ---------------------------------------------------------------------------
# linearization coefficients

def omega_coef(n: int) -> float:
    return math.exp(gammaln(2 * n + 1) - 2 * gammaln(n + 1) - (2 * n + 1) * math.log(2)) / math.pi


def alpha_coef(n: int, k: int) -> float:
    """Diagonal coupling 2 <phi_k, |phi_n|^2 phi_k> = (n+k)! / (pi n! k! 2^(n+k))."""
    return math.exp(gammaln(n + k + 1) - gammaln(n + 1) - gammaln(k + 1) - (n + k) * math.log(2)) / math.pi


def printed_alpha(n: int, k: int) -> float:
    """The variant with 2^(n+k+1) in the denominator; half of alpha_coef."""
    return 0.5 * alpha_coef(n, k)


def beta_coef(n: int, k: int) -> float:
    """<phi_k, phi_n^2 conj(phi_{2n-k})> = (2n)! / (pi n! sqrt(k! (2n-k)!) 2^(2n+1))."""
    j = 2 * n - k
    if j < 0:
        return 0.0
    return math.exp(gammaln(2 * n + 1) - gammaln(n + 1) - 0.5 * (gammaln(k + 1) + gammaln(j + 1))
                    - (2 * n + 1) * math.log(2)) / math.pi


def delta_coef(n: int, k: int, alpha=alpha_coef) -> float:
    a = alpha(n, k) + alpha(n, 2 * n - k) - 2 * omega_coef(n)
    return 4 * beta_coef(n, k) ** 2 - a * a


# exact rationals: pi*omega, pi*alpha and pi^2*beta^2 are rational

def omega_pi_exact(n: int) -> Fraction:
    return Fraction(math.factorial(2 * n), math.factorial(n) ** 2 * 2 ** (2 * n + 1))


def alpha_pi_exact(n: int, k: int, printed: bool = False) -> Fraction:
    extra = 1 if printed else 0
    return Fraction(math.factorial(n + k), math.factorial(n) * math.factorial(k) * 2 ** (n + k + extra))


def beta_sq_pi2_exact(n: int, k: int) -> Fraction:
    j = 2 * n - k
    return Fraction(math.factorial(2 * n) ** 2,
                    math.factorial(n) ** 2 * math.factorial(k) * math.factorial(j) * 2 ** (4 * n + 2))


def delta_pi2_exact(n: int, k: int, printed: bool = False) -> Fraction:
    """pi^2 Delta_{n,k} as an exact rational."""
    a = alpha_pi_exact(n, k, printed) + alpha_pi_exact(n, 2 * n - k, printed) - 2 * omega_pi_exact(n)
    return 4 * beta_sq_pi2_exact(n, k) - a * a


@dataclass
class ModeRow:
    k: int
    alpha: float
    beta: float
    delta: float
    growth_rate: float
    kind: str  # "paired", "self", "linear" (Jordan block, polynomial growth) or "neutral"


@dataclass
class LinearizationReport:
    n: int
    omega_n: float
    modes: list[ModeRow]
    unstable_modes: list[int]

    def row(self, k: int) -> ModeRow:
        return next(r for r in self.modes if r.k == k)

    @property
    def max_growth_rate(self) -> float:
        return max((r.growth_rate for r in self.modes), default=0.0)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "omega_n": self.omega_n,
            "unstable_modes": self.unstable_modes,
            "max_growth_rate": self.max_growth_rate,
            "modes": [r.__dict__ for r in self.modes],
        }


def linearize_phi_n(n: int, k_max: int | None = None) -> LinearizationReport:
    if n < 0:
        raise ValueError("n must be non-negative")
    k_max = 2 * n if k_max is None else k_max
    if k_max < 2 * n:
        raise ValueError("k_max must be at least 2n")
    rows = []
    for k in range(k_max + 1):
        if k > 2 * n:
            rows.append(ModeRow(k, alpha_coef(n, k), 0.0, 0.0, 0.0, "neutral"))
            continue
        d = delta_coef(n, k)
        exact = delta_pi2_exact(n, k)
        if k != n:
            kind = "paired"
        else:
            kind = "linear" if exact == 0 else "self"
        growth = math.sqrt(d) / 2 if exact > 0 else 0.0
        rows.append(ModeRow(k, alpha_coef(n, k), beta_coef(n, k), d, growth, kind))
    unstable = [r.k for r in rows if r.growth_rate > 0]
    return LinearizationReport(n, omega_coef(n), rows, unstable)


def pair_matrix(n: int, k: int) -> np.ndarray:
    """A with i x' = A x for x = (d_k, conj d_{2n-k})."""
    a1 = alpha_coef(n, k) - omega_coef(n)
    a2 = alpha_coef(n, 2 * n - k) - omega_coef(n)
    b = beta_coef(n, k)
    return np.array([[a1, b], [-b, -a2]], dtype=complex)


def unstable_direction(n: int, N: int, k: int | None = None) -> tuple[np.ndarray, float]:
    """Unit perturbation along the fastest growing eigenvector of the (k, 2n-k) pair."""
    if n < 2:
        raise ValueError("phi_0 and phi_1 have no exponentially unstable modes")
    if k is None:
        rep = linearize_phi_n(n)
        best = max(rep.modes, key=lambda r: r.growth_rate)
        k = best.k if best.growth_rate > 0 else n - 2
        k = min(k, 2 * n - k)
    if 2 * n - k >= N:
        raise ValueError("truncation too small for the unstable pair")
    w, V = np.linalg.eig(-1j * pair_matrix(n, k))
    j = int(np.argmax(w.real))
    v = V[:, j]
    d = np.zeros(N, dtype=complex)
    d[k] = v[0]
    d[2 * n - k] += np.conj(v[1])
    return d / np.linalg.norm(d), float(w.real[j])


# ---------------------------------------------------------------------------
# nonlinear experiments

@dataclass
class StabilityExperiment:
    target: str
    eps: float
    T: float
    times: np.ndarray
    distance: np.ndarray
    predicted_rate: float | None = None
    fitted_rate: float | None = None
    bound_constant: float | None = None
    drift: dict = field(default_factory=dict)

    @property
    def rate_rel_error(self) -> float | None:
        if self.predicted_rate is None or self.fitted_rate is None:
            return None
        return abs(self.fitted_rate - self.predicted_rate) / self.predicted_rate

    def as_dict(self) -> dict:
        return {
            "target": self.target, "eps": self.eps, "T": self.T,
            "predicted_rate": self.predicted_rate, "fitted_rate": self.fitted_rate,
            "rate_rel_error": self.rate_rel_error,
            "max_distance": float(np.max(self.distance)),
            "bound_constant": self.bound_constant, "drift": self.drift,
        }


def exponential_rate(t: np.ndarray, d: np.ndarray, ceiling: float = 0.1) -> float:
    """Least-squares slope of log d over the part of the trace below ``ceiling``."""
    keep = (d > 0) & (d < ceiling)
    if keep.sum() < 4:
        raise ValueError("too few samples in the linear regime")
    slope, _ = np.polyfit(t[keep], np.log(d[keep]), 1)
    return float(slope)


def _tangent_noise(c: np.ndarray, seed: int) -> np.ndarray:
    """Random localized direction, orthogonal to c in the complex sense, unit norm."""
    r = random_state(c.size, np.random.default_rng(seed))
    r = r - np.vdot(c, r) / np.vdot(c, c) * c
    return r / np.linalg.norm(r)


def nonlinear_instability_experiment(n, eps: float, T: float, N: int = 32, dt: float = 0.05,
                                     seed: int = 0, b: float = 1.0, stride: int = 10) -> StabilityExperiment:
    """Evolve a perturbed wave and record its distance to the unperturbed orbit.

    ``n`` is an integer for phi_n or the string "psi_b" (parameter ``b``).
    For n >= 2 the perturbation is the unstable eigendirection and the
    exponential rate is fitted; otherwise a random tangent direction is used
    and max distance / sqrt(eps) is reported.
    """
    if not 0 < eps <= 1e-3:
        raise ValueError("eps must lie in (0, 1e-3]")
    cfg = IntegratorConfig("rk4", dt=dt, t_end=T, snapshot_stride=stride)
    if n == "psi_b":
        ref = make_psi_b(b, N).coeffs
        c0 = ref + eps * _tangent_noise(ref, seed)
        sim = run(c0, cfg)
        dist = np.array([psi_b_orbit_distance(c, ref) for c in sim.snapshots])
        exp = StabilityExperiment(f"psi_b(b={b:g})", eps, T, sim.snapshot_times, dist)
    else:
        n = int(n)
        ref = basis_vector(n, N)
        if n >= 2:
            delta, rate = unstable_direction(n, N)
        else:
            delta, rate = _tangent_noise(ref, seed), None
        c0 = ref + eps * delta
        c0 = c0 / math.sqrt(mass(c0))
        sim = run(c0, cfg)
        dist = np.array([phase_orbit_distance(c, n) for c in sim.snapshots])
        exp = StabilityExperiment(f"phi_{n}", eps, T, sim.snapshot_times, dist, predicted_rate=rate)
        if n >= 2:
            exp.fitted_rate = exponential_rate(exp.times, dist)
    if exp.predicted_rate is None:
        exp.bound_constant = float(np.max(dist) / math.sqrt(eps))
    exp.drift = sim.drift()
    return exp


# ---------------------------------------------------------------------------
# bifurcating branch from phi_0

class ContinuationError(RuntimeError):
    pass


def branch_b0(k0: int) -> float:
    """Bifurcation value of b where 4u + b k u = 8 pi Pi(|u|^2 u) leaves phi_0 along phi_{k0}."""
    return (4.0 - 8.0 / 2**k0) / k0


@dataclass
class BranchPoint:
    s: float
    state: np.ndarray
    a: float
    b: float
    residual: float
    newton_iterations: int

    def remainder(self, k0: int) -> float:
        """|| u - phi_0 - s phi_{k0} ||."""
        d = np.array(self.state, dtype=complex)
        d[0] -= 1.0
        d[k0] -= self.s
        return float(np.linalg.norm(d))

    def as_row(self) -> dict:
        return {"s": self.s, "b": self.b, "residual": self.residual, "newton_iterations": self.newton_iterations}


def branch_residual(c: np.ndarray, b: float, a: float = 4.0) -> np.ndarray:
    k = np.arange(c.size)
    return 8 * np.pi * nonlinear(c) + b * k * c - a * c


def continue_branch(k0: int, s_max: float, ds: float, N: int = 64, a: float = 4.0,
                    tol: float = 1e-13, max_newton: int = 30) -> list[BranchPoint]:
    """Natural-parameter continuation in s = <w, phi_{k0}> with real coefficients on k0 Z.

    Newton uses the exact Jacobian of the reduced system, assembled column by
    column from the derivative of the nonlinearity.
    """
    if k0 < 2:
        raise ValueError("k0 must be at least 2")
    lattice = np.arange(0, N, k0)
    if lattice.size < 16:
        raise ValueError(f"N={N} leaves only {lattice.size} modes on {k0}Z; need 16")
    if not 0 < ds <= s_max:
        raise ValueError("need 0 < ds <= s_max")
    ws = workspace(N)
    k = np.arange(N)
    M = lattice.size
    j_k0 = 1  # position of mode k0 in the lattice

    def F(x, s):
        c = np.zeros(N)
        c[lattice] = x[:M]
        r = branch_residual(c.astype(complex), x[M], a)
        return np.concatenate([r.real[lattice], [x[j_k0] - s]]), c

    def J(x):
        c = np.zeros(N, dtype=complex)
        c[lattice] = x[:M]
        out = np.zeros((M + 1, M + 1))
        for j, m in enumerate(lattice):
            e = np.zeros(N, dtype=complex)
            e[m] = 1.0
            col = 8 * np.pi * nonlinear_derivative(c, e, ws) + (x[M] * k - a) * e
            out[:M, j] = col.real[lattice]
        out[:M, M] = (k * c).real[lattice]
        out[M, j_k0] = 1.0
        return out

    points: list[BranchPoint] = []
    x = np.zeros(M + 1)
    x[0] = 1.0
    x[M] = branch_b0(k0)
    prev = None
    n_steps = int(round(s_max / ds))
    for i in range(1, n_steps + 1):
        s = i * ds
        # secant predictor
        guess = x.copy()
        if prev is not None:
            guess = 2 * x - prev
        guess[j_k0] = s
        y = guess
        ok = False
        for it in range(1, max_newton + 1):
            Fv, _ = F(y, s)
            if np.linalg.norm(Fv) < tol:
                ok = True
                break
            y = y - np.linalg.solve(J(y), Fv)
        if not ok:
            Fv, _ = F(y, s)
            ok = np.linalg.norm(Fv) < 1e3 * tol
        if not ok or not np.all(np.isfinite(y)):
            break
        c = np.zeros(N, dtype=complex)
        c[lattice] = y[:M]
        res = float(np.linalg.norm(branch_residual(c, y[M], a)))
        points.append(BranchPoint(s, c, a, float(y[M]), res, it))
        prev, x = x, y
    if not points:
        raise ContinuationError("Newton failed at the first continuation step")
    return points


def fit_coefficient_envelope(c: np.ndarray, rel_floor: float = 1e-12) -> tuple[float, float]:
    """(K, eps) with |c_k| <= K eps^k / sqrt(k!) for all resolved k >= 1, eps from a log-linear fit.

    Coefficients below rel_floor * max|c| are roundoff and are left out.
    """
    c = np.asarray(c)
    k = np.arange(c.size)
    keep = (k >= 1) & (np.abs(c) > rel_floor * np.max(np.abs(c)))
    if keep.sum() < 2:
        raise ValueError("need at least two nonzero coefficients")
    y = np.log(np.abs(c[keep])) + 0.5 * gammaln(k[keep] + 1)
    slope, _ = np.polyfit(k[keep], y, 1)
    logK = float(np.max(y - slope * k[keep]))
    return math.exp(logK), math.exp(slope)


def remainder_check(points: list[BranchPoint], k0: int) -> dict:
    """Fitted C in ||u - phi_0 - s phi_{k0}|| <= C s^2 and the Richardson ratio e(s)/e(s/2)."""
    s = np.array([p.s for p in points])
    e = np.array([p.remainder(k0) for p in points])
    C = float(np.max(e / s**2))
    out = {"C": C, "ratios": []}
    for i, p in enumerate(points):
        j = np.flatnonzero(np.isclose(s, p.s / 2, rtol=1e-9, atol=0))
        if j.size:
            out["ratios"].append((float(p.s), float(e[i] / e[j[0]])))
    return out


def branch_slope(points: list[BranchPoint]) -> float:
    """db/ds from the first two branch points (the size of b - b0 is reported, not asserted)."""
    if len(points) < 2:
        raise ValueError("need two branch points")
    return (points[1].b - points[0].b) / (points[1].s - points[0].s)
