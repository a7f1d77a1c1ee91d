"""Closed-form stationary waves, a residual certifier and decay fitting.

A stationary wave solves ``lam*c + mu*k*c_k = N(c)``; its flow is
``c_k(t) = exp(-i (lam + k mu) t) c_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.special import gammaln

from .fock import (
    LOG_PI,
    as_coeffs,
    basis_vector,
    displacement_matrix,
    gauss2_coeffs,
    mass,
    z_gauss2_coeffs,
)
from .nonlinear import nonlinear


@dataclass
class StationaryWave:
    coeffs: np.ndarray
    lam: float
    mu: float
    family: str
    params: dict = field(default_factory=dict)
    residual: float = float("nan")
    normalizable: bool = True
    window: int | None = None
    closed_form: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.coeffs.size

    def metadata(self) -> dict:
        return {
            "family": self.family,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "lambda": self.lam,
            "mu": self.mu,
            "residual": self.residual,
            "normalizable": self.normalizable,
        }

    def evolve(self, t: float) -> np.ndarray:
        k = np.arange(self.n)
        return np.exp(-1j * (self.lam + k * self.mu) * t) * self.coeffs


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# ---------------------------------------------------------------------------
# expansions

def poly_exp_coeffs(poly, beta: complex, N: int) -> np.ndarray:
    """Coefficients of P(z) exp(beta z - |z|^2/2), P given by ascending coefficients.

    c_k = sqrt(pi k!) sum_j P_j beta^(k-j) / (k-j)!, each term formed in log space.
    """
    poly = np.asarray(poly, dtype=complex)
    beta = complex(beta)
    k = np.arange(N)
    out = np.zeros(N, dtype=complex)
    half_log_fact = 0.5 * (LOG_PI + gammaln(k + 1))
    for j, p in enumerate(poly):
        if p == 0:
            continue
        d = k - j
        ok = d >= 0
        if beta == 0:
            term = np.zeros(N, dtype=complex)
            if j < N:
                term[j] = math.exp(half_log_fact[j])
        else:
            dd = np.where(ok, d, 0)
            log_mod = half_log_fact + dd * np.log(abs(beta)) - gammaln(dd + 1)
            term = np.where(ok, np.exp(log_mod + 1j * dd * np.angle(beta)), 0.0)
        out += p * term
    return out


def exp_sum_coeffs(weights, gammas, N: int) -> np.ndarray:
    """Coefficients of sum_j w_j exp(g_j z - |z|^2/2): sqrt(pi) sum_j w_j g_j^k / sqrt(k!)."""
    out = np.zeros(N, dtype=complex)
    for w, g in zip(weights, gammas):
        out += w * poly_exp_coeffs([1.0], g, N)
    return out


def normalized(c: np.ndarray) -> np.ndarray:
    return c / np.sqrt(mass(c))


def _tail_check(c: np.ndarray, tol: float = 1e-14) -> None:
    tail = np.sqrt(np.sum(np.abs(c[-4:]) ** 2) / max(mass(c), 1e-300))
    if tail > tol:
        raise ValueError(f"truncation N={c.size} too small: tail amplitude {tail:.2e}")


# ---------------------------------------------------------------------------
# residuals

def certify(state, lam: float, mu: float, window: int | None = None) -> float:
    """||lam c + mu k c - N(c)|| / ||c||^3, optionally on modes k < window only."""
    c = as_coeffs(state)
    norm = np.sqrt(mass(c))
    if norm == 0:
        raise ValueError("certify is undefined for the zero state")
    r = lam * c + mu * np.arange(c.size) * c - nonlinear(c)
    if window is not None:
        r = r[:window]
        norm = np.sqrt(mass(c[:window]))
    return float(np.linalg.norm(r) / norm**3)


def fit_multipliers(state, window: int | None = None) -> tuple[float, float, float]:
    """Least-squares (lam, mu) for lam c + mu k c = N(c) with real lam, mu; also the residual."""
    c = as_coeffs(state)
    W = c.size if window is None else window
    k = np.arange(W)
    A = np.stack([c[:W], k * c[:W]], axis=1)
    b = nonlinear(c)[:W]
    A_r = np.concatenate([A.real, A.imag])
    b_r = np.concatenate([b.real, b.imag])
    (lam, mu), *_ = np.linalg.lstsq(A_r, b_r, rcond=None)
    return float(lam), float(mu), certify(c, lam, mu, window)


def _finalize(wave: StationaryWave) -> StationaryWave:
    wave.residual = certify(wave.coeffs, wave.lam, wave.mu, wave.window)
    return wave


# ---------------------------------------------------------------------------
# families

def omega(n: int) -> float:
    """(2n)!/(pi (n!)^2 2^(2n+1)), the frequency of phi_n at unit mass."""
    return math.exp(math.lgamma(2 * n + 1) - 2 * math.lgamma(n + 1) - (2 * n + 1) * math.log(2)) / math.pi


def make_phi_n_alpha(n: int, alpha: complex, N: int) -> StationaryWave:
    """(z - conj a)^n exp(-|z|^2/2 - |a|^2/2 + a z)/sqrt(pi n!)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    alpha = complex(alpha)
    poly = [math.comb(n, j) * (-np.conj(alpha)) ** (n - j) for j in range(n + 1)]
    scale = math.exp(-0.5 * abs(alpha) ** 2 - 0.5 * (LOG_PI + math.lgamma(n + 1)))
    c = scale * poly_exp_coeffs(poly, alpha, N)
    _tail_check(c)
    H = math.exp(math.lgamma(2 * n + 1) - 2 * n * math.log(2) - 2 * math.lgamma(n + 1)) / (8 * np.pi)
    wave = StationaryWave(
        c, omega(n), 0.0, "phi_n_alpha", {"n": n, "alpha": alpha},
        closed_form={"M": 1.0, "P": n + abs(alpha) ** 2, "Q": np.conj(alpha), "H": H},
    )
    return _finalize(wave)


def psi_b_lambda(b: float) -> float:
    """Frequency of psi_b: (4b^2 + 3 + b^2/(1+b^2)) / (8 pi (1+b^2))."""
    t = 1.0 + b * b
    return (4 * b * b + 3 + b * b / t) / (8 * np.pi * t)


def make_psi_b(b: float, N: int) -> StationaryWave:
    """Normalized (z + g) exp(beta z - |z|^2/2), beta = b/(1+b^2), g = -b(2+b^2)/(1+b^2)."""
    if b < 0:
        raise ValueError("b must be non-negative")
    t = 1.0 + b * b
    beta = b / t
    g = -b * (2 + b * b) / t
    c = normalized(poly_exp_coeffs([g, 1.0], beta, N))
    _tail_check(c)
    wave = StationaryWave(
        c, psi_b_lambda(b), -1.0 / (8 * np.pi), "psi_b", {"b": b},
        closed_form={"M": 1.0, "P": 1.0 / t**2, "Q": 0.0, "H": (1 - 0.5 / t**2) / (8 * np.pi)},
    )
    return _finalize(wave)


def make_chi_alpha(alpha: complex, N: int) -> StationaryWave:
    """sinh(a z) exp(-|z|^2/2) / sqrt(pi sinh|a|^2), zeros on (i pi / a) Z."""
    alpha = complex(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    x = abs(alpha) ** 2
    k = np.arange(N)
    odd = k % 2 == 1
    # log(e^x - e^-x) = x + log1p(-e^-2x)
    log_norm = 0.5 * (np.log(2.0) - x - np.log1p(-np.exp(-2 * x)))
    log_mod = k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1) + log_norm
    c = np.where(odd, np.exp(log_mod + 1j * k * np.angle(alpha)), 0.0)
    _tail_check(c)
    wave = StationaryWave(
        c, 1.0 / (4 * np.pi), 0.0, "chi_alpha", {"alpha": alpha},
        closed_form={"M": 1.0, "P": x / math.tanh(x), "Q": 0.0, "H": 1.0 / (16 * np.pi)},
    )
    return _finalize(wave)


def v_k_momentum(alpha: complex, k: int) -> float:
    a = abs(alpha) ** 2
    q = (np.pi * k) ** 2 / a
    num = (a + q) * 2 * math.sinh(a + q) + (a - q) * 2 * math.sinh(q - a)
    return num / (4 * math.sinh(a) * math.sinh(q))


def make_v_k(alpha: complex, k: int, N: int) -> StationaryWave:
    """sinh(a z) sin(k pi z / conj a) exp(-|z|^2/2), normalized; zeros on two crossed lattices."""
    alpha = complex(alpha)
    if alpha == 0 or k == 0:
        raise ValueError("alpha and k must be nonzero")
    w = 1j * k * np.pi / np.conj(alpha)
    gammas = [alpha + w, alpha - w, -alpha + w, -alpha - w]
    weights = [1.0, -1.0, -1.0, 1.0]
    c = normalized(exp_sum_coeffs(weights, gammas, N))
    _tail_check(c)
    wave = StationaryWave(
        c, 1.0 / (8 * np.pi), 0.0, "v_k", {"alpha": alpha, "k": k},
        closed_form={"M": 1.0, "P": v_k_momentum(alpha, k), "Q": 0.0, "H": 1.0 / (32 * np.pi)},
    )
    return _finalize(wave)


def make_tempered_deg2(variant: str, param: float, N: int, amplitude: float = 1.0,
                       window: int | None = None) -> StationaryWave:
    """Infinite-mass waves built on exp(-|z|^2/2 + z^2/2).

    ``gauss2``: A exp(-|z|^2/2 + z^2/2 + i s z), lam = A^2 exp(s^2/2)/sqrt 2, mu = 0.
    ``z_gauss2``: A (z + i r) exp(-|z|^2/2 + z^2/2), lam = (3/2 + r^2) A^2/sqrt 2, mu = A^2/sqrt 2.
    Certified on modes k < window (default N/4), where the truncation is harmless.
    """
    window = N // 4 if window is None else window
    A = float(amplitude)
    if variant == "gauss2":
        s = float(param)
        if s == 0:
            c = gauss2_coeffs(N)
        else:
            c = _times_exp(gauss2_coeffs(N), 1j * s)
        # the i s z factor is a magnetic translation in disguise, which rescales the amplitude
        wave = StationaryWave(A * c, A * A * np.exp(0.5 * s * s) / np.sqrt(2), 0.0, "tempered_deg2",
                              {"variant": variant, "s": s, "A": A}, normalizable=False, window=window)
    elif variant == "z_gauss2":
        r = float(param)
        c = z_gauss2_coeffs(N) + 1j * r * gauss2_coeffs(N)
        wave = StationaryWave(A * c, (1.5 + r * r) * A * A / np.sqrt(2), A * A / np.sqrt(2), "tempered_deg2",
                              {"variant": variant, "r": r, "A": A}, normalizable=False, window=window)
    else:
        raise ValueError(f"unknown tempered variant {variant!r}")
    return _finalize(wave)


def _times_exp(c: np.ndarray, beta: complex) -> np.ndarray:
    """Coefficients of u(z) exp(beta z) via the Taylor coefficients of the entire part."""
    N = c.size
    k = np.arange(N)
    lf = 0.5 * (LOG_PI + gammaln(k + 1))
    taylor = c * np.exp(-lf)
    h = np.exp(k * np.log(abs(beta)) - gammaln(k + 1) + 1j * k * np.angle(beta))
    prod = np.convolve(taylor, h)[:N]
    with np.errstate(divide="ignore"):
        log_mod = np.log(np.abs(prod)) + lf
    return np.exp(log_mod) * np.exp(1j * np.angle(prod))


FAMILIES = {
    "phi_n_alpha": "phi_n^alpha: (z - conj a)^n exp(a z), lam = (2n)!/(pi (n!)^2 2^(2n+1)), mu = 0",
    "psi_b": "psi_b: (z + g) exp(beta z), lam = (4b^2+3+b^2/(1+b^2))/(8 pi (1+b^2)), mu = -1/(8 pi)",
    "chi_alpha": "chi_alpha: sinh(a z), lam = 1/(4 pi), mu = 0",
    "v_k": "v_k: sinh(a z) sin(k pi z / conj a), lam = 1/(8 pi), mu = 0",
    "tempered_deg2": "gauss2 / z_gauss2: exp(z^2/2) based, infinite mass, windowed certification",
}


# ---------------------------------------------------------------------------
# decay

@dataclass
class DecayFit:
    gamma_hat: float
    r_hat: float
    eta_hat: float
    modes_used: int


def fit_decay(state, floor: float = 1e-280, drop_tail: float = 0.1) -> DecayFit:
    """Fit log|c_n| ~ -gamma n log n + n log r + const over resolved modes.

    Exactly vanishing and unresolved coefficients are skipped, as is the last
    ``drop_tail`` fraction of the truncation.
    """
    c = as_coeffs(state)
    N = c.size
    n = np.arange(N)
    keep = (np.abs(c) > floor) & (n < int(np.ceil((1 - drop_tail) * N))) & (n >= 1)
    if keep.sum() < 16:
        raise ValueError(f"only {int(keep.sum())} resolvable modes; need at least 16")
    nn = n[keep].astype(float)
    y = np.log(np.abs(c[keep]))
    A = np.stack([-nn * np.log(nn), nn, np.ones_like(nn)], axis=1)
    (gamma, logr, _), *_ = np.linalg.lstsq(A, y, rcond=None)
    return DecayFit(float(gamma), float(np.exp(logr)), float(1.0 / (0.5 + gamma)), int(keep.sum()))


GAMMA0 = math.log(2) / (2 * math.log(3))
ETA0 = 1.0 / (0.5 + GAMMA0)


# ---------------------------------------------------------------------------
# distance to the finite-zero catalog orbit

@dataclass
class ManifoldFit:
    lam: complex
    mu: complex
    alpha: complex
    residual: float
    ok: bool = True


def _manifold_basis(alpha: complex, N: int) -> np.ndarray:
    return np.stack([poly_exp_coeffs([0.0, 1.0], alpha, N), poly_exp_coeffs([1.0], alpha, N)], axis=1)


def _manifold_resid(alpha: complex, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    B = _manifold_basis(alpha, c.size)
    coef, *_ = np.linalg.lstsq(B, c, rcond=None)
    return c - B @ coef, coef


def manifold_fit(state, alpha_guesses=None, alpha_max: float | None = None) -> ManifoldFit:
    """Closest point of {(lam z + mu) exp(alpha z - |z|^2/2)}; residual is relative L2 distance."""
    c = as_coeffs(state)
    norm = np.sqrt(mass(c))
    if norm == 0:
        raise ValueError("zero state")
    N = c.size
    alpha_max = np.sqrt(N) / 2 if alpha_max is None else alpha_max
    if alpha_guesses is None:
        # for the manifold Q is close to conj(alpha) M; add the origin as a fallback
        q = np.sum(np.sqrt(np.arange(1, N)) * c[:-1] * np.conj(c[1:])) / norm**2
        alpha_guesses = [np.conj(q), 0.0, 0.5 * np.conj(q)]

    def fun(x):
        r, _ = _manifold_resid(complex(x[0], x[1]), c)
        return np.concatenate([r.real, r.imag]) / norm

    best = None
    for g in alpha_guesses:
        g = complex(g)
        sol = least_squares(fun, [g.real, g.imag], xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        res = float(np.linalg.norm(sol.fun))
        if best is None or res < best[0]:
            best = (res, complex(sol.x[0], sol.x[1]))
    res, alpha = best
    if not np.isfinite(res) or abs(alpha) > alpha_max:
        return ManifoldFit(0j, 0j, alpha, 1.0, ok=False)
    _, coef = _manifold_resid(alpha, c)
    return ManifoldFit(complex(coef[0]), complex(coef[1]), alpha, res)


def phi_n_orbit_distance(state, n: int, starts=None) -> tuple[float, complex]:
    """min over alpha and phase of the relative distance to phi_n^alpha."""
    c = as_coeffs(state)
    ch = c / np.sqrt(mass(c))
    N = c.size
    e = basis_vector(n, N)

    def overlap(x):
        w = displacement_matrix(complex(x[0], x[1]), N) @ e
        return abs(np.vdot(w, ch)) / np.sqrt(max(mass(w), 1e-300))

    if starts is None:
        q = np.sum(np.sqrt(np.arange(1, N)) * ch[:-1] * np.conj(ch[1:]))
        starts = [np.conj(q), 0.0]
    best = (np.inf, 0j)
    for s in starts:
        s = complex(s)
        sol = minimize(lambda x: -overlap(x), [s.real, s.imag], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        d = float(np.sqrt(max(0.0, 2 - 2 * overlap(sol.x))))
        if d < best[0]:
            best = (d, complex(sol.x[0], sol.x[1]))
    return best


@dataclass
class CatalogDistance:
    distance: float
    nearest: str
    detail: dict


def catalog_distance(state, n_max: int = 8) -> CatalogDistance:
    """Relative L2 distance to the finite-zero catalog modulo symmetries.

    The orbit of psi_b under translations and rotations, together with phi_0^a and
    phi_1^a, is exactly the degree-one manifold; phi_n^a with n >= 2 is checked
    separately.
    """
    c = as_coeffs(state)
    detail = {}
    mf = manifold_fit(c)
    # distance modulo scaling: compare unit vectors
    detail["manifold"] = float(np.sqrt(max(0.0, 2 - 2 * np.sqrt(max(0.0, 1 - mf.residual**2))))) if mf.ok else 2.0
    for n in range(2, n_max + 1):
        detail[f"phi_{n}"] = phi_n_orbit_distance(c, n)[0]
    nearest = min(detail, key=detail.get)
    return CatalogDistance(detail[nearest], nearest, detail)


def solve_b_for_gamma(gamma: float) -> float:
    """The b >= 0 with (1 + 4b^2 + 2b^4) / (2 (1+b^2)^2) = gamma, for gamma in [1/2, 1)."""
    if not 0.5 <= gamma < 1:
        raise ValueError("gamma must lie in [1/2, 1)")
    if gamma == 0.5:
        return 0.0
    # with x = b^2: (2 - 2 gamma) x^2 + (4 - 4 gamma) x + (1 - 2 gamma) = 0
    a = 2 - 2 * gamma
    x = (-2 * a + math.sqrt(4 * a * a - 4 * a * (1 - 2 * gamma))) / (2 * a)
    return math.sqrt(x)


def gamma_of_b(b: float) -> float:
    t = 1 + b * b
    return (1 + 4 * b * b + 2 * b**4) / (2 * t * t)

