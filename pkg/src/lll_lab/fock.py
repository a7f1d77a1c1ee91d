"""Coefficient-space representation of lowest-Landau-level functions.

A state is a truncated coefficient vector ``c`` with ``u(z) = sum_n c_n phi_n(z)``
and ``phi_n(z) = z**n exp(-|z|**2 / 2) / sqrt(pi n!)``.  Everything factorial-like
is handled in log space.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Literal

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_legendre

LOG_PI = float(np.log(np.pi))
DEFAULT_TRUST_TOL = 1e-12


class TruncationError(RuntimeError):
    """Raised when the truncated basis cannot represent a result to tolerance."""


class TruncationWarning(UserWarning):
    """Evaluation requested outside the trust radius of the truncation."""


@dataclass(frozen=True)
class CoeffState:
    """Immutable truncated coefficient sequence (c_0, ..., c_{N-1})."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size < 1:
            raise ValueError("a state needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return int(self.coeffs.size)

    @property
    def mass(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def to_dict(self) -> dict:
        return {"n": self.n, "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs]}

    @classmethod
    def from_dict(cls, data: dict) -> "CoeffState":
        pairs = data["coeffs"]
        if "n" in data and int(data["n"]) != len(pairs):
            raise ValueError(f"header says n={data['n']} but {len(pairs)} coefficients were given")
        return cls(np.array([complex(re, im) for re, im in pairs]))

    def save(self, path, **metadata) -> None:
        payload = self.to_dict()
        payload.update(metadata)
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "CoeffState":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def as_coeffs(state) -> np.ndarray:
    """Return the coefficient array of a CoeffState or array-like."""
    if isinstance(state, CoeffState):
        return state.coeffs
    c = np.asarray(state, dtype=complex)
    if c.ndim != 1:
        raise ValueError("coefficients must be one-dimensional")
    return c


def basis_vector(n: int, N: int) -> np.ndarray:
    e = np.zeros(N, dtype=complex)
    e[n] = 1.0
    return e


@dataclass(frozen=True)
class ConservedSet:
    mass: float
    angular_momentum: float
    magnetic_momentum: complex
    hamiltonian: float

    # short aliases used throughout
    @property
    def M(self) -> float:
        return self.mass

    @property
    def P(self) -> float:
        return self.angular_momentum

    @property
    def Q(self) -> complex:
        return self.magnetic_momentum

    @property
    def H(self) -> float:
        return self.hamiltonian

    def as_dict(self) -> dict:
        return {
            "M": self.mass,
            "P": self.angular_momentum,
            "Q": [self.magnetic_momentum.real, self.magnetic_momentum.imag],
            "H": self.hamiltonian,
        }


@dataclass(frozen=True)
class SymmetryAction:
    """A symmetry of the flow.

    ``phase`` multiplies by exp(i*gamma), ``rotation`` maps u(z) to u(exp(i*phi) z)
    and ``translation`` is the magnetic translation
    u(z) -> u(z + a) exp((conj(z) a - z conj(a)) / 2).
    """

    kind: Literal["phase", "rotation", "translation"]
    parameter: complex = field(default=0.0)

    def __post_init__(self) -> None:
        if self.kind not in ("phase", "rotation", "translation"):
            raise ValueError(f"unknown symmetry kind {self.kind!r}")
        if self.kind != "translation" and complex(self.parameter).imag != 0:
            raise ValueError(f"{self.kind} takes a real parameter")


# ---------------------------------------------------------------------------
# log-space coefficients

def log_sqrt_binomial(S, m):
    """log sqrt(S! / (2**S m! (S-m)!)), vectorised over integer arrays."""
    S_arr = np.asarray(S)
    m_arr = np.asarray(m)
    if not (np.issubdtype(S_arr.dtype, np.integer) and np.issubdtype(m_arr.dtype, np.integer)):
        raise TypeError("S and m must be integers")
    if np.any(m_arr < 0) or np.any(m_arr > S_arr):
        raise ValueError("need 0 <= m <= S")
    out = 0.5 * (gammaln(S_arr + 1) - S_arr * np.log(2.0) - gammaln(m_arr + 1) - gammaln(S_arr - m_arr + 1))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _pair_tables(N: int) -> tuple[np.ndarray, np.ndarray]:
    S = np.arange(2 * N - 1)[:, None]
    m = np.arange(N)[None, :]
    valid = (m <= S) & (S - m <= N - 1)
    Sm = np.where(valid, S - m, 0)
    logk = 0.5 * (gammaln(S + 1) - S * np.log(2.0) - gammaln(m + 1) - gammaln(Sm + 1))
    K = np.where(valid, np.exp(np.where(valid, logk, 0.0)), 0.0)
    # index N points at a padding zero so gathers need no masking
    idx = np.where(valid, Sm, N)
    K.setflags(write=False)
    idx.setflags(write=False)
    return K, idx


def pair_kernel(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Kernel K[S, m] = sqrt(S!/(2^S m!(S-m)!)) for S < 2N-1 and the partner index S-m.

    Invalid (S, m) slots hold K = 0 and partner index N.
    """
    if N < 1:
        raise ValueError("N must be positive")
    return _pair_tables(int(N))


def pair_sums(c: np.ndarray) -> np.ndarray:
    """D_S = sum_m K[S, m] c_m c_{S-m}, i.e. 2**(-S/2) times the S_l sums of the Hamiltonian."""
    K, idx = pair_kernel(c.size)
    cp = np.append(c, 0.0)
    return (K * cp[idx]) @ c


# ---------------------------------------------------------------------------
# evaluation

def trust_radius(N: int, tol: float = DEFAULT_TRUST_TOL) -> float:
    """Largest R <= sqrt(N) with R**N exp(-R**2/2)/sqrt(pi N!) < tol, by bisection."""
    if N < 1:
        raise ValueError("N must be positive")
    log_tol = np.log(tol)
    const = -0.5 * LOG_PI - 0.5 * gammaln(N + 1)

    def g(R: float) -> float:
        return N * np.log(R) - 0.5 * R * R + const - log_tol

    lo, hi = 1e-300, np.sqrt(N)
    if g(hi) < 0:
        return float(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * hi:
            break
    return float(lo)


def basis_values(N: int, z) -> np.ndarray:
    """phi_0(z), ..., phi_{N-1}(z); shape z.shape + (N,).

    Runs the recurrence phi_{n+1} = z phi_n / sqrt(n+1) on log moduli so that
    neither the Gaussian factor nor z**n can under- or overflow on its own.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    n = np.arange(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r)
        steps = np.concatenate([[0.0], 0.5 * np.log(np.arange(1, N))])
        log_mod = -0.5 * r[..., None] ** 2 - 0.5 * LOG_PI + n * logr[..., None] - np.cumsum(steps)
    log_mod = np.where(np.isneginf(logr)[..., None] & (n > 0), -np.inf, log_mod)
    log_mod[..., 0] = -0.5 * r**2 - 0.5 * LOG_PI
    phase = np.exp(1j * n * np.angle(z)[..., None])
    return np.exp(log_mod) * phase


def evaluate(state, z, *, tol: float = DEFAULT_TRUST_TOL):
    """u(z) for scalar or array z; warns with TruncationWarning beyond the trust radius."""
    c = as_coeffs(state)
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) > trust_radius(c.size, tol)):
        warnings.warn(
            f"evaluation beyond trust radius {trust_radius(c.size, tol):.3f} for N={c.size}",
            TruncationWarning,
            stacklevel=2,
        )
    vals = basis_values(c.size, zz) @ c
    return complex(vals) if np.ndim(z) == 0 else vals


def entire_part(state, z):
    """f(z) = exp(|z|^2/2) u(z) = sum_n c_n z^n / sqrt(pi n!), without range checks."""
    c = as_coeffs(state)
    z = np.asarray(z, dtype=complex)
    u = basis_values(c.size, z) @ c
    return u * np.exp(0.5 * np.abs(z) ** 2)


# ---------------------------------------------------------------------------
# conserved quantities and norms

def mass(state) -> float:
    c = as_coeffs(state)
    return float(np.vdot(c, c).real)


def angular_momentum(state) -> float:
    c = as_coeffs(state)
    return float(np.sum(np.arange(c.size) * np.abs(c) ** 2))


def magnetic_momentum(state) -> complex:
    c = as_coeffs(state)
    if c.size < 2:
        return 0j
    return complex(np.sum(np.sqrt(np.arange(1, c.size)) * c[:-1] * np.conj(c[1:])))


def hamiltonian(state) -> float:
    """H = (1/8pi) sum_l 2^-l |S_l|^2."""
    c = as_coeffs(state)
    D = pair_sums(c)
    return float(np.sum(np.abs(D) ** 2) / (8 * np.pi))


def conserved(state) -> ConservedSet:
    return ConservedSet(mass(state), angular_momentum(state), magnetic_momentum(state), hamiltonian(state))


def weighted_norm_sq(state, s: float) -> float:
    """sum 2^s (n+1)^s |c_n|^2, equivalent to the weighted norm ||<z>^s u||^2."""
    if s < 0:
        raise ValueError("s must be non-negative")
    c = as_coeffs(state)
    w = (2.0 * np.arange(1, c.size + 1)) ** s
    return float(np.sum(w * np.abs(c) ** 2))


def carlen_ratio(state) -> float:
    """8 pi H / M^2, at most 1 with equality exactly on coherent states."""
    M = mass(state)
    if M == 0:
        raise ValueError("zero state")
    return 8 * np.pi * hamiltonian(state) / M**2


# ---------------------------------------------------------------------------
# symmetries

def displacement_matrix(alpha: complex, N: int) -> np.ndarray:
    """N x N block of the Fock displacement operator D(alpha).

    Entries come from the associated-Laguerre closed form.  In coefficient space
    the magnetic translation by a is D(-conj(a)); in particular D(alpha) sends
    phi_0 to the coherent state with c_k = alpha^k exp(-|alpha|^2/2)/sqrt(k!).
    """
    alpha = complex(alpha)
    if alpha == 0:
        return np.eye(N, dtype=complex)
    x = abs(alpha) ** 2
    m = np.arange(N)[:, None]
    n = np.arange(N)[None, :]
    lo = np.minimum(m, n)
    d = np.abs(m - n)
    lag = eval_genlaguerre(lo, d, x)
    if not np.all(np.isfinite(lag)):
        raise TruncationError(f"Laguerre values overflow for N={N}, |alpha|={abs(alpha)}")
    log_pref = 0.5 * (gammaln(lo + 1) - gammaln(lo + d + 1)) + d * np.log(abs(alpha)) - 0.5 * x
    # m >= n carries alpha^(m-n), m < n carries (-conj alpha)^(n-m)
    phase = np.where(m >= n, np.exp(1j * d * np.angle(alpha)), np.exp(1j * d * np.angle(-np.conj(alpha))))
    return np.exp(log_pref) * lag * phase


def apply_symmetry(state, action: SymmetryAction, *, mass_tol: float = 1e-8) -> np.ndarray:
    c = as_coeffs(state)
    n = np.arange(c.size)
    if action.kind == "phase":
        return np.exp(1j * float(np.real(action.parameter))) * c
    if action.kind == "rotation":
        return np.exp(1j * n * float(np.real(action.parameter))) * c
    a = complex(action.parameter)
    out = displacement_matrix(-np.conj(a), c.size) @ c
    M0 = mass(c)
    if abs(mass(out) - M0) > mass_tol * max(M0, 1.0):
        raise TruncationError(
            f"translation by {a} loses mass {M0 - mass(out):.3e}; increase N"
        )
    return out


def fourier(state) -> np.ndarray:
    """The Fourier transform acts on the basis as phi_n -> i^n phi_n, i.e. rotation by pi/2."""
    return apply_symmetry(state, SymmetryAction("rotation", np.pi / 2))


# ---------------------------------------------------------------------------
# quadrature cross-checks

@dataclass(frozen=True)
class PlaneQuadrature:
    """Tensor Gauss-Legendre rule on the square [-R, R]^2."""

    z: np.ndarray
    weights: np.ndarray
    R: float

    @classmethod
    def square(cls, R: float, points: int = 200) -> "PlaneQuadrature":
        x, w = roots_legendre(points)
        x = R * x
        w = R * w
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        return cls((X + 1j * Y).ravel(), W.ravel(), float(R))

    @classmethod
    def for_truncation(cls, N: int, points: int = 200, extra: float = 2.0, tol: float = DEFAULT_TRUST_TOL):
        return cls.square(trust_radius(N, tol) + extra, points)

    def integrate(self, values: np.ndarray):
        return np.sum(self.weights * values)

    def project(self, func: Callable[[np.ndarray], np.ndarray], kmax: int) -> np.ndarray:
        """<func, phi_k> for k <= kmax."""
        vals = func(self.z)
        phis = basis_values(kmax + 1, self.z)
        return (self.weights * vals) @ np.conj(phis)

    def values(self, state) -> np.ndarray:
        c = as_coeffs(state)
        return basis_values(c.size, self.z) @ c


def quadrature_box_radius(N: int, tol: float = DEFAULT_TRUST_TOL) -> float:
    """A box half-width that contains the numerical support of every N-mode state."""
    return max(trust_radius(N, tol) + 2.0, np.sqrt(N) + 6.0)


@dataclass
class DictionaryRow:
    name: str
    kmax: int
    max_deviation: float
    exact: np.ndarray
    quadrature: np.ndarray


@dataclass
class DictionaryReport:
    rows: list[DictionaryRow]

    @property
    def max_deviation(self) -> float:
        return max(r.max_deviation for r in self.rows)

    def as_dict(self) -> dict:
        return {r.name: {"kmax": r.kmax, "max_deviation": r.max_deviation} for r in self.rows}


def coherent_coeffs(alpha: complex, N: int) -> np.ndarray:
    k = np.arange(N)
    alpha = complex(alpha)
    if alpha == 0:
        return basis_vector(0, N)
    logmod = k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1) - 0.5 * abs(alpha) ** 2
    return np.exp(logmod + 1j * k * np.angle(alpha))


def gauss2_coeffs(N: int) -> np.ndarray:
    """Coefficients of exp(-|z|^2/2 + z^2/2): sqrt(pi k!)/(2^(k/2) (k/2)!) on even k."""
    k = np.arange(N)
    even = k % 2 == 0
    j = k // 2
    log_c = 0.5 * (LOG_PI + gammaln(k + 1)) - j * np.log(2.0) - gammaln(j + 1)
    return np.where(even, np.exp(log_c), 0.0).astype(complex)


def z_gauss2_coeffs(N: int) -> np.ndarray:
    """Coefficients of z exp(-|z|^2/2 + z^2/2): sqrt(pi k!)/(2^((k-1)/2) ((k-1)/2)!) on odd k."""
    k = np.arange(N)
    odd = k % 2 == 1
    j = (k - 1) // 2
    jj = np.where(odd, j, 0)
    log_c = 0.5 * (LOG_PI + gammaln(k + 1)) - jj * np.log(2.0) - gammaln(jj + 1)
    return np.where(odd, np.exp(log_c), 0.0).astype(complex)


def bargmann_dictionary_check(
    alpha: complex = 0.5, kmax: int = 20, points: int = 200
) -> DictionaryReport:
    """Compare closed-form coefficient rows with quadrature projections onto phi_k.

    Deviations are measured relative to the largest coefficient of each row.
    """
    R = max(trust_radius(kmax + 1) + 2.0, np.sqrt(kmax) + 8.0)
    quad = PlaneQuadrature.square(R, points)
    rows = []
    alpha = complex(alpha)
    funcs: Iterable[tuple[str, Callable, np.ndarray]] = [
        (
            "coherent",
            lambda z: np.exp(-0.5 * np.abs(z) ** 2 - 0.5 * abs(alpha) ** 2 + alpha * z) / np.sqrt(np.pi),
            coherent_coeffs(alpha, kmax + 1),
        ),
        ("gauss2", lambda z: np.exp(-0.5 * np.abs(z) ** 2 + 0.5 * z**2), gauss2_coeffs(kmax + 1)),
        ("z_gauss2", lambda z: z * np.exp(-0.5 * np.abs(z) ** 2 + 0.5 * z**2), z_gauss2_coeffs(kmax + 1)),
    ]
    for name, f, exact in funcs:
        got = quad.project(f, kmax)
        dev = float(np.max(np.abs(got - exact)) / np.max(np.abs(exact)))
        rows.append(DictionaryRow(name, kmax, dev, exact, got))
    return DictionaryReport(rows)


# ---------------------------------------------------------------------------
# interaction bound

def _bracket(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


def interaction_bound_constant(S_max: int = 512) -> float:
    """Smallest C with K[S,k] <= C psi(k/S)^S <S>^(1/4) / (<k>^(1/4) <S-k>^(1/4)) for S <= S_max.

    psi(x) = sqrt(1 / (2 x^x (1-x)^(1-x))).
    """
    best = 0.0
    for S in range(S_max + 1):
        k = np.arange(S + 1)
        logK = log_sqrt_binomial(np.full_like(k, S), k)
        if S == 0:
            log_psi_S = np.zeros(1)
        else:
            x = k / S
            with np.errstate(divide="ignore", invalid="ignore"):
                xlogx = np.where(x > 0, x * np.log(x), 0.0)
                ylogy = np.where(x < 1, (1 - x) * np.log1p(-x), 0.0)
            log_psi_S = S * (-0.5) * (np.log(2.0) + xlogx + ylogy)
        log_rhs = log_psi_S + 0.25 * (np.log(_bracket(S)) - np.log(_bracket(k)) - np.log(_bracket(S - k)))
        best = max(best, float(np.exp(np.max(logK - log_rhs))))
    return best


def random_state(N: int, rng: np.random.Generator, kind: str = "localized", rho: float = 1.5) -> np.ndarray:
    """Unit-mass random state.

    ``flat`` draws i.i.d. complex Gaussian coefficients.  ``localized`` multiplies
    them by the coherent envelope rho^n / sqrt(n!), so the state lives well
    inside the truncation and its weighted norms are all finite in practice.
    """
    c = rng.normal(size=N) + 1j * rng.normal(size=N)
    if kind == "localized":
        n = np.arange(N)
        c = c * np.exp(n * np.log(rho) - 0.5 * gammaln(n + 1))
    elif kind != "flat":
        raise ValueError(f"unknown random state kind {kind!r}")
    return c / np.sqrt(mass(c))
