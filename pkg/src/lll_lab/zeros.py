"""Zeros of u = exp(-|z|^2/2) f(z) from the truncated Taylor polynomial of f.

Roots are found with Aberth-Ehrlich simultaneous iteration on a rescaled
polynomial p(w) = sum b_n w^n, b_n proportional to c_n rho^n / sqrt(n!), so the
coefficients stay inside double range for every truncation in use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .fock import as_coeffs, basis_values, trust_radius

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# polynomial machinery (coefficients in ascending order)

def _horner(a: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """p(z), p'(z) and sum |a_k||z|^k for ascending coefficients a."""
    p = np.full(z.shape, a[-1], dtype=complex)
    dp = np.zeros(z.shape, dtype=complex)
    absz = np.abs(z)
    s = np.full(z.shape, abs(a[-1]))
    for coef in a[-2::-1]:
        dp = dp * z + p
        p = p * z + coef
        s = s * absz + abs(coef)
    return p, dp, s


def newton_ratio(a: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """p(z)/p'(z) and a relative backward-error measure |p| / sum|a_k||z|^k.

    Outside the unit disk the reversed polynomial is used so that powers of z never overflow.
    """
    d = a.size - 1
    ratio = np.empty(z.shape, dtype=complex)
    rel = np.empty(z.shape)
    inside = np.abs(z) <= 1
    if np.any(inside):
        p, dp, s = _horner(a, z[inside])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio[inside] = p / dp
        rel[inside] = np.abs(p) / s
    out = ~inside
    if np.any(out):
        y = 1.0 / z[out]
        q, dq, s = _horner(a[::-1], y)
        # p(z) = z^d q(1/z)  =>  p'/p = d/z - q'(y) y^2 / q(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio[out] = 1.0 / (d * y - dq * y * y / q)
        rel[out] = np.abs(q) / s
    return ratio, rel


def _initial_guesses(a: np.ndarray) -> np.ndarray:
    """Points on circles whose radii come from the upper convex hull of (k, log|a_k|)."""
    d = a.size - 1
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(a))
    pts = [k for k in range(d + 1) if np.isfinite(la[k])]
    hull: list[int] = []
    for k in pts:
        while len(hull) >= 2:
            k1, k2 = hull[-2], hull[-1]
            # drop k2 if it lies below the segment k1 -> k
            if (la[k2] - la[k1]) * (k - k1) <= (la[k] - la[k1]) * (k2 - k1):
                hull.pop()
            else:
                break
        hull.append(k)
    guesses = []
    sigma = 0.7
    for k1, k2 in zip(hull[:-1], hull[1:]):
        r = math.exp((la[k1] - la[k2]) / (k2 - k1))
        m = k2 - k1
        theta = 2 * np.pi * np.arange(m) / m + 2 * np.pi * k1 / d + sigma
        guesses.append(r * np.exp(1j * theta))
    return np.concatenate(guesses) if guesses else np.zeros(0, dtype=complex)


@dataclass
class RootResult:
    roots: np.ndarray
    converged: np.ndarray
    backward_error: np.ndarray
    iterations: int


def aberth(a, max_iter: int = 500, tol_factor: float = 8.0, polish: int = 3) -> RootResult:
    """All roots of sum a_k z^k (ascending); a[-1] must be nonzero."""
    a = np.asarray(a, dtype=complex)
    d = a.size - 1
    if d < 1:
        return RootResult(np.zeros(0, dtype=complex), np.zeros(0, bool), np.zeros(0), 0)
    if a[-1] == 0:
        raise ValueError("leading coefficient must be nonzero")
    z = _initial_guesses(a)
    active = np.ones(d, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ratio, rel = newton_ratio(a, z[idx])
        done = rel <= tol_factor * d * EPS
        diff = z[idx, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1.0
        inv = 1.0 / diff
        inv[np.arange(idx.size), idx] = 0.0
        s = inv.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = ratio / (1.0 - ratio * s)
        corr = np.where(np.isfinite(corr) & ~done, corr, 0.0)
        z[idx] -= corr
        small = np.abs(corr) <= 4 * EPS * np.maximum(np.abs(z[idx]), 1e-300)
        active[idx[done | small]] = False
    ratio, rel = newton_ratio(a, z)
    for _ in range(polish):
        trial = z - np.where(np.isfinite(ratio), ratio, 0)
        r2, rel2 = newton_ratio(a, trial)
        better = rel2 < rel
        z = np.where(better, trial, z)
        ratio = np.where(better, r2, ratio)
        rel = np.where(better, rel2, rel)
    converged = rel <= 1e3 * d * EPS
    return RootResult(z, converged, rel, it)


def cluster_roots(roots: np.ndarray, tol: float = 1e-6) -> list[tuple[complex, int]]:
    """Merge roots closer than tol * max(1, |z|); returns (centre, multiplicity)."""
    remaining = list(roots)
    out = []
    while remaining:
        z0 = remaining.pop(0)
        group = [z0]
        rest = []
        for z in remaining:
            if abs(z - z0) < tol * max(1.0, abs(z0)):
                group.append(z)
            else:
                rest.append(z)
        remaining = rest
        out.append((complex(np.mean(group)), len(group)))
    return out


# ---------------------------------------------------------------------------
# zeros of states

def scaled_taylor(state, rho: float) -> np.ndarray:
    """b_n = c_n rho^n / sqrt(n!) normalised to max |b_n| = 1 (zero entries stay zero)."""
    c = as_coeffs(state)
    n = np.arange(c.size)
    with np.errstate(divide="ignore"):
        log_b = np.log(np.abs(c)) + n * math.log(rho) - 0.5 * gammaln(n + 1)
    finite = np.isfinite(log_b)
    if not np.any(finite):
        return np.zeros(c.size, dtype=complex)
    log_b = log_b - np.max(log_b[finite])
    return np.where(finite, np.exp(np.where(finite, log_b, 0.0)) * np.exp(1j * np.angle(c)), 0.0)


@dataclass
class ZeroReport:
    roots: list[tuple[complex, int]]
    trust_radius: float
    radius: float
    counts: list[tuple[float, int]]
    max_backward_error: float
    dropped: int = 0
    eta_hat: float | None = None
    midpoint_counts: list[tuple[float, int]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(m for _, m in self.roots)

    def as_dict(self) -> dict:
        return {
            "roots": [[z.real, z.imag, m] for z, m in self.roots],
            "counts": [[r, n] for r, n in self.counts],
            "midpoint_counts": [[r, n] for r, n in self.midpoint_counts],
            "eta_hat": self.eta_hat,
            "trust_radius": self.trust_radius,
            "radius": self.radius,
            "max_backward_error": self.max_backward_error,
            "dropped": self.dropped,
        }


def polynomial_roots(state, rho: float, cluster_tol: float = 1e-6):
    """Roots of the Taylor polynomial of f with multiplicities, plus the worst backward error."""
    b = scaled_taylor(state, rho)
    nz = np.flatnonzero(np.abs(b) > 1e-280)
    if nz.size == 0:
        raise ValueError("zero state has no isolated zeros")
    origin = int(nz[0])
    b = b[origin: nz[-1] + 1]
    res = aberth(b)
    roots = cluster_roots(res.roots * rho, cluster_tol)
    if origin:
        roots.append((0j, origin))
    bad = int(np.sum(~res.converged))
    worst = float(np.max(res.backward_error)) if res.backward_error.size else 0.0
    return roots, worst, bad, res


def find_zeros(state, radius: float | None = None, n_radii: int = 64, tol: float = 1e-12,
               cluster_tol: float = 1e-6, horizon: float = 0.75) -> ZeroReport:
    """Zeros with |z| < min(radius, horizon * R_N); roots nearer the truncation horizon are unreliable."""
    c = as_coeffs(state)
    R_N = trust_radius(c.size, tol)
    limit = horizon * R_N if radius is None else min(radius, horizon * R_N)
    roots, worst, bad, res = polynomial_roots(c, limit, cluster_tol)
    # unconverged Aberth iterates are dropped and reported
    keep = []
    bad_pts = res.roots[~res.converged] * limit
    for z, m in roots:
        if bad_pts.size and np.min(np.abs(bad_pts - z)) < 1e-12 * max(1.0, abs(z)):
            continue
        if abs(z) < limit:
            keep.append((z, m))
    keep.sort(key=lambda t: abs(t[0]))
    counts = count_table(keep, limit, n_radii)
    report = ZeroReport(keep, R_N, limit, counts, worst, dropped=bad)
    report.midpoint_counts = midpoint_counts(keep)
    try:
        report.eta_hat = growth_fit(report.midpoint_counts)
    except ValueError as exc:
        report.notes.append(str(exc))
    return report


def midpoint_counts(roots, rel_tol: float = 1e-6) -> list[tuple[float, int]]:
    """N(R) sampled halfway between consecutive distinct root moduli.

    For an arithmetic progression of moduli these samples sit on the mean line
    of the staircase, so a log-log fit is free of the sawtooth bias.
    """
    if not roots:
        return []
    mods = sorted((abs(z), m) for z, m in roots)
    levels: list[list[float]] = []
    for r, m in mods:
        if levels and r - levels[-1][0] <= rel_tol * max(1.0, r):
            levels[-1][1] += m
        else:
            levels.append([r, m])
    out = []
    total = 0
    for (r0, m0), (r1, _) in zip(levels[:-1], levels[1:]):
        total += m0
        out.append((0.5 * (r0 + r1), int(total)))
    return out


def count_table(roots, limit: float, n_radii: int = 64) -> list[tuple[float, int]]:
    mods = np.array([abs(z) for z, _ in roots])
    mult = np.array([m for _, m in roots])
    radii = np.linspace(limit / n_radii, limit, n_radii)
    return [(float(r), int(mult[mods < r].sum()) if mods.size else 0) for r in radii]


def zero_count_in_trust_radius(state, tol: float = 1e-12) -> int:
    """Zeros with |z| < R_N counted with multiplicity."""
    return find_zeros(state, tol=tol, horizon=1.0).count


def root_residuals(state, roots) -> np.ndarray:
    """|u(z*)| relative to the local scale exp(-|z|^2/2) sum |c_n||z|^n / sqrt(pi n!)."""
    c = as_coeffs(state)
    z = np.array([r for r, _ in roots], dtype=complex)
    if z.size == 0:
        return np.zeros(0)
    phis = basis_values(c.size, z)
    return np.abs(phis @ c) / np.maximum(np.abs(phis) @ np.abs(c), 1e-300)


def growth_fit(counts, min_count: int = 1, r_min: float | None = None) -> float:
    """Least-squares slope of log N(R) against log R over radii with N(R) >= min_count."""
    pts = [(r, n) for r, n in counts if n >= min_count and r > 0 and (r_min is None or r >= r_min)]
    if len(pts) < 4:
        raise ValueError(f"growth fit needs at least 4 radii with nonzero counts, got {len(pts)}")
    x = np.log([r for r, _ in pts])
    y = np.log([n for _, n in pts])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


@dataclass
class JensenCheck:
    direct: int
    origin_multiplicity: int
    jensen_bound: float
    count_bound: float
    passed: bool

    def as_dict(self) -> dict:
        return self.__dict__.copy()


def jensen_count_check(state, R: float, points: int = 256, tol: float = 1e-12) -> JensenCheck:
    """Jensen's inequality for zeros of f in |z| < R/2.

    A zero of order m at the origin is divided out first: with g = f / z^m,
    (log 2) N_g(R/2) <= mean log|g(R e^{it})| - log|g(0)|.  ``direct`` counts all
    zeros in |z| < R/2 including the origin; ``count_bound`` is m + bound/log 2.
    """
    c = as_coeffs(state)
    R_N = trust_radius(c.size, tol)
    if R > R_N / 2 + 1e-12:
        raise ValueError(f"R={R} exceeds half the trust radius ({R_N / 2:.3f}) for N={c.size}")
    nz = np.flatnonzero(c != 0)
    if nz.size == 0:
        raise ValueError("zero state")
    m = int(nz[0])
    g0 = abs(c[m]) / math.sqrt(math.pi * math.factorial(m)) if m < 170 else 0.0
    if g0 < 1e-100:
        raise ValueError("f(0) vanishes to working precision after removing the origin zero")
    theta = 2 * np.pi * np.arange(points) / points
    z = R * np.exp(1j * theta)
    u = basis_values(c.size, z) @ c
    log_g = 0.5 * R * R + np.log(np.abs(u)) - m * math.log(R)
    bound = float(np.mean(log_g) - math.log(g0))
    report = find_zeros(c, radius=R / 2)
    direct = report.count
    count_bound = m + bound / math.log(2)
    return JensenCheck(direct, m, bound, count_bound, direct <= count_bound + 1)


# ---------------------------------------------------------------------------
# test states with known zero sets

def lattice_surrogate(spacing: float = math.sqrt(math.pi), rho: float = 8.0, N: int | None = None):
    """z prod (1 - z/w) over nonzero lattice points spacing*(m + i n) with |w| < rho.

    Returns unit-mass coefficients and the lattice points (including 0).
    The truncation is padded so that 0.75 times its trust radius reaches rho.
    """
    r = int(math.ceil(rho / spacing))
    pts = [spacing * complex(m, n) for m in range(-r, r + 1) for n in range(-r, r + 1)]
    pts = [w for w in pts if abs(w) < rho]
    poly = np.array([1.0 + 0j])
    for w in pts:
        if w == 0:
            poly = np.convolve(poly, [0.0, 1.0])
        else:
            poly = np.convolve(poly, [1.0, -1.0 / w])
    D = poly.size - 1
    if N is None:
        N = D + 1
        while 0.75 * trust_radius(N) < rho:
            N += 8
    if N <= D:
        raise ValueError("N must exceed the polynomial degree")
    n = np.arange(D + 1)
    with np.errstate(divide="ignore"):
        log_c = np.log(np.abs(poly)) + 0.5 * (math.log(math.pi) + gammaln(n + 1))
    finite = np.isfinite(log_c)
    log_c -= np.max(log_c[finite])
    c = np.zeros(N, dtype=complex)
    c[: D + 1] = np.where(finite, np.exp(np.where(finite, log_c, 0.0)), 0.0) * np.exp(1j * np.angle(poly))
    c /= np.linalg.norm(c)
    return c, np.array(pts)
