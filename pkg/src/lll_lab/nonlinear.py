"""The cubic nonlinearity Pi(|u|^2 u) in coefficients, in O(N^2).

With K[S, m] = sqrt(S! / (2^S m! (S-m)!)) the nonlinear term is

    N(c)_k = (1/2pi) sum_S K[S, k] conj(c_{S-k}) D_S,   D_S = sum_m K[S, m] c_m c_{S-m},

keeping every S <= 2N-2 so low modes see the full truncated interaction.
"""

from __future__ import annotations

import numpy as np

from .fock import as_coeffs, hamiltonian, pair_kernel

TWO_PI = 2.0 * np.pi


class NonlinearWorkspace:
    """Precomputed kernel tables for one truncation order."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(N)
        self.K, self.idx = pair_kernel(self.capacity)
        self._pad = np.zeros(self.capacity + 1, dtype=complex)

    def _gather(self, c: np.ndarray) -> np.ndarray:
        self._pad[: self.capacity] = c
        return self.K * self._pad[self.idx]

    def check(self, c: np.ndarray) -> None:
        if c.size != self.capacity:
            raise ValueError(f"workspace capacity {self.capacity} does not match state length {c.size}")


_WORKSPACES: dict[int, NonlinearWorkspace] = {}


def workspace(N: int) -> NonlinearWorkspace:
    ws = _WORKSPACES.get(N)
    if ws is None:
        ws = _WORKSPACES[N] = NonlinearWorkspace(N)
    return ws


def trilinear(a, b, d, ws: NonlinearWorkspace | None = None) -> np.ndarray:
    """T(a, b, d)_k = (1/2pi) sum_S K[S,k] conj(a_{S-k}) sum_m K[S,m] b_m d_{S-m}.

    Antilinear in a, linear and symmetric in (b, d); N(c) = T(c, c, c).
    """
    a, b, d = as_coeffs(a), as_coeffs(b), as_coeffs(d)
    ws = ws or workspace(a.size)
    ws.check(a)
    D = ws._gather(d) @ b
    Ga = ws._gather(a)
    return (np.conj(Ga).T @ D) / TWO_PI


def nonlinear(state, ws: NonlinearWorkspace | None = None) -> np.ndarray:
    c = as_coeffs(state)
    ws = ws or workspace(c.size)
    ws.check(c)
    G = ws._gather(c)
    D = G @ c
    return (np.conj(G).T @ D) / TWO_PI


def nonlinear_derivative(state, v, ws: NonlinearWorkspace | None = None) -> np.ndarray:
    """Real directional derivative of N at c along v: T(v,c,c) + 2 T(c,c,v)."""
    c = as_coeffs(state)
    v = as_coeffs(v)
    ws = ws or workspace(c.size)
    Gc = ws._gather(c)
    Dcc = Gc @ c
    Dcv = Gc @ v
    Gv = ws._gather(v)
    return (np.conj(Gv).T @ Dcc + 2.0 * np.conj(Gc).T @ Dcv) / TWO_PI


def g_mu(state, mu: float) -> float:
    """G_mu = 8 pi H + mu P."""
    c = as_coeffs(state)
    return 8 * np.pi * hamiltonian(c) + mu * float(np.sum(np.arange(c.size) * np.abs(c) ** 2))


def grad_gmu(state, mu: float, ws: NonlinearWorkspace | None = None) -> np.ndarray:
    """Gradient of G_mu for the real inner product Re<x, y> on C^N.

    dG_mu = Re sum conj(g_k) dc_k with g = 8 pi N(c) + 2 mu k c_k.
    """
    c = as_coeffs(state)
    return 8 * np.pi * nonlinear(c, ws) + 2.0 * mu * np.arange(c.size) * c


def hess_gmu(state, v, mu: float, ws: NonlinearWorkspace | None = None) -> np.ndarray:
    """Euclidean Hessian of G_mu applied to v (same real inner product)."""
    c = as_coeffs(state)
    v = as_coeffs(v)
    return 8 * np.pi * nonlinear_derivative(c, v, ws) + 2.0 * mu * np.arange(c.size) * v
