"""Time integration of i dc/dt = N(c) and of its Hermite-multiplier perturbation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .catalog import manifold_fit
from .fock import as_coeffs, hamiltonian, magnetic_momentum, weighted_norm_sq
from .nonlinear import NonlinearWorkspace, nonlinear, workspace


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_good: np.ndarray | None = None, t: float | None = None):
        super().__init__(message)
        self.last_good = last_good
        self.t = t


@dataclass(frozen=True)
class IntegratorConfig:
    method: Literal["rk4", "implicit_midpoint"] = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    snapshot_stride: int = 100
    midpoint_tol: float = 1e-14
    midpoint_max_iter: int = 100

    def __post_init__(self):
        if self.method not in ("rk4", "implicit_midpoint"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 < self.dt <= 1:
            raise ValueError("dt must lie in (0, 1]")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class MultiplierSpec:
    """Hermite multiplier m_j added as -i(N(c) - m c).

    ``random_class`` draws m_j = u_j / (j+1)^k with u_j uniform on [-1/2, 1/2].
    """

    kind: Literal["none", "explicit", "random_class"] = "none"
    values: tuple[float, ...] = ()
    k: float = 0.0
    seed: int | None = None

    def values_for(self, N: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(N)
        if self.kind == "explicit":
            v = np.zeros(N)
            vals = np.asarray(self.values, dtype=float)[:N]
            v[: vals.size] = vals
            return v
        if self.kind == "random_class":
            if self.seed is None:
                raise ValueError("random_class multipliers need an explicit seed")
            rng = np.random.default_rng(self.seed)
            return rng.uniform(-0.5, 0.5, size=N) / (np.arange(N) + 1.0) ** self.k
        raise ValueError(f"unknown multiplier kind {self.kind!r}")


def rhs(c: np.ndarray, m: np.ndarray | None, ws: NonlinearWorkspace) -> np.ndarray:
    r = nonlinear(c, ws)
    if m is not None:
        r = r - m * c
    return -1j * r


def step(state, cfg: IntegratorConfig, multiplier: MultiplierSpec | np.ndarray | None = None,
         ws: NonlinearWorkspace | None = None) -> np.ndarray:
    c = np.array(as_coeffs(state), dtype=complex)
    ws = ws or workspace(c.size)
    m = _multiplier_array(multiplier, c.size)
    dt = cfg.dt
    if cfg.method == "rk4":
        k1 = rhs(c, m, ws)
        k2 = rhs(c + 0.5 * dt * k1, m, ws)
        k3 = rhs(c + 0.5 * dt * k2, m, ws)
        k4 = rhs(c + dt * k3, m, ws)
        return c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    # implicit midpoint: y = c + dt/2 f(y), c_new = 2y - c
    y = c + 0.5 * dt * rhs(c, m, ws)
    scale = max(np.linalg.norm(c), 1e-300)
    for it in range(cfg.midpoint_max_iter):
        y_new = c + 0.5 * dt * rhs(y, m, ws)
        err = np.linalg.norm(y_new - y) / scale
        y = y_new
        if err < cfg.midpoint_tol:
            return 2 * y - c
    raise IntegrationError(
        f"implicit midpoint did not converge in {cfg.midpoint_max_iter} iterations (last update {err:.2e})",
        last_good=c,
    )


def _multiplier_array(multiplier, N: int) -> np.ndarray | None:
    if multiplier is None:
        return None
    if isinstance(multiplier, MultiplierSpec):
        return None if multiplier.kind == "none" else multiplier.values_for(N)
    m = np.asarray(multiplier, dtype=float)
    return None if not np.any(m) else m


@dataclass
class SimulationRun:
    times: np.ndarray
    M: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    weighted: dict[float, np.ndarray]
    snapshot_times: np.ndarray
    snapshots: list[np.ndarray]
    manifold: np.ndarray | None = None
    config: IntegratorConfig | None = None
    extra: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def drift(self) -> dict:
        M0, H0 = self.M[0], self.H[0]
        out = {
            "M_rel": float(np.max(np.abs(self.M - M0)) / max(abs(M0), 1e-300)),
            "H_rel": float(np.max(np.abs(self.H - H0)) / max(abs(H0), 1e-300)),
            "P_abs": float(np.max(np.abs(self.P - self.P[0]))),
            "Q_abs": float(np.max(np.abs(self.Q - self.Q[0]))),
        }
        if self.manifold is not None:
            out["manifold_max"] = float(np.max(self.manifold))
        return out

    def summary(self) -> dict:
        out = {"drift": self.drift(), "t_end": float(self.times[-1]), "steps": int(self.times.size - 1)}
        for k, w in self.weighted.items():
            out[f"W{k:g}_envelope"] = fit_envelope(self.times, np.sqrt(w), exponent=(k - 1) / 2)
        return out

    def write_jsonl(self, path) -> None:
        idx = np.searchsorted(self.times, self.snapshot_times)
        with open(path, "w") as fh:
            for j, (t, c) in enumerate(zip(self.snapshot_times, self.snapshots)):
                i = min(idx[j], self.times.size - 1)
                rec = {
                    "t": float(t),
                    "coeffs": [[float(v.real), float(v.imag)] for v in c],
                    "M": float(self.M[i]),
                    "P": float(self.P[i]),
                    "Q": [float(self.Q[i].real), float(self.Q[i].imag)],
                    "H": float(self.H[i]),
                }
                for k, w in self.weighted.items():
                    rec[f"W{k:g}"] = float(w[i])
                if self.manifold is not None:
                    rec["manifold_residual"] = float(self.manifold[j])
                fh.write(json.dumps(rec) + "\n")


def fit_envelope(t: np.ndarray, y: np.ndarray, exponent: float = 1.0, fit_fraction: float = 0.2) -> dict:
    """Fit C in y(t) <= C (1+t)^exponent on the first part of the trace and test the rest.

    Returns C, the worst ratio y / (C (1+t)^exponent) over the whole trace and
    whether that ratio stays below 10.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    env = (1.0 + t) ** exponent
    cut = max(2, int(np.ceil(fit_fraction * t.size)))
    C = float(np.max(y[:cut] / env[:cut]))
    worst = float(np.max(y / (C * env)))
    return {"C": C, "exponent": exponent, "worst_ratio": worst, "within_10x": worst <= 10.0}


def run(initial, cfg: IntegratorConfig, multiplier: MultiplierSpec | None = None,
        weights: Sequence[float] = (), track_manifold: bool = False) -> SimulationRun:
    c = np.array(as_coeffs(initial), dtype=complex)
    N = c.size
    ws = workspace(N)
    m = _multiplier_array(multiplier, N)
    n = np.arange(N)
    steps = cfg.n_steps
    times = np.arange(steps + 1) * cfg.dt
    M = np.empty(steps + 1)
    P = np.empty(steps + 1)
    Q = np.empty(steps + 1, dtype=complex)
    H = np.empty(steps + 1)
    W = {float(k): np.empty(steps + 1) for k in weights}
    snap_t, snaps, manifold = [], [], []
    alpha_prev = None

    def record(i, c):
        nonlocal alpha_prev
        a2 = np.abs(c) ** 2
        M[i] = a2.sum()
        P[i] = (n * a2).sum()
        Q[i] = magnetic_momentum(c)
        H[i] = hamiltonian(c)
        for k in W:
            W[k][i] = weighted_norm_sq(c, k)
        if i % cfg.snapshot_stride == 0 or i == steps:
            snap_t.append(times[i])
            snaps.append(c.copy())
            if track_manifold:
                guesses = None if alpha_prev is None else [alpha_prev]
                fit = manifold_fit(c, alpha_guesses=guesses)
                if fit.residual > 1e-8 and guesses is not None:
                    fit = manifold_fit(c)
                alpha_prev = fit.alpha
                manifold.append(fit.residual)

    record(0, c)
    for i in range(1, steps + 1):
        c_new = step(c, cfg, m, ws)
        if not np.all(np.isfinite(c_new)):
            raise IntegrationError(f"non-finite state at t={times[i]:.6g}", last_good=c, t=times[i - 1])
        c = c_new
        record(i, c)
    return SimulationRun(times, M, P, Q, H, W, np.array(snap_t), snaps,
                         np.array(manifold) if track_manifold else None, cfg)


def manifold_residual(state) -> float:
    """Relative L2 distance to the invariant manifold {(l z + m) exp(a z - |z|^2/2)}."""
    return manifold_fit(state).residual


def manifold_point(lam: complex, mu: complex, alpha: complex, N: int) -> np.ndarray:
    from .catalog import poly_exp_coeffs

    return poly_exp_coeffs([mu, lam], alpha, N)
