"""Normal-extremal equations in frame variables (x, α, ν).

State: coordinates x ∈ R^m, horizontal velocity components α (u = α^i X_i)
and complement covector components ν_a (lowered index, paired with Z_a).

The sub-Riemannian limit reads

    ẋ   = α^i X_i(x)
    α̇^k = −Γ^k_{ij} α^i α^j − h^{kj} ν_a L^a_{ji} α^i
    ν̇_b = α^i Γ^d_{ib} ν_d − α_j T^j_{bk} α^k − ν_c T^c_{bk} α^k

with T^·_{bk} the mixed torsion evaluated on (X_k, Z_b).  The δ-family adds
the terms of the penalized Riemannian metric g_D ⊕ δ⁻¹ g_Q, whose complement
velocity is δ·ν^a.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .connection import gamma_D, gamma_Q, gamma_ZD, gamma_ZQ, mixed_torsion_D, mixed_torsion_Q
from .geometry import FramedGeometry, frame_data, levi_form


@dataclass
class ExtremalState:
    x: np.ndarray
    alpha: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.nu = np.asarray(self.nu, dtype=float)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.alpha, self.nu])

    @classmethod
    def from_vector(cls, y, G: FramedGeometry) -> "ExtremalState":
        m, n = G.m, G.n
        y = np.asarray(y, dtype=float)
        if y.shape != (m + n + G.l,):
            raise ValueError(f"state vector must have length {m + n + G.l}")
        return cls(y[:m].copy(), y[m : m + n].copy(), y[m + n :].copy())

    def check(self, G: FramedGeometry) -> None:
        if self.x.shape != (G.m,) or self.alpha.shape != (G.n,) or self.nu.shape != (G.l,):
            raise ValueError(
                f"state shapes {self.x.shape}, {self.alpha.shape}, {self.nu.shape} do not match "
                f"geometry (m={G.m}, n={G.n}, l={G.l})"
            )


@dataclass(frozen=True)
class RhsSpec:
    geometry: FramedGeometry
    delta: float = 0.0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be non-negative")


def _rhs(y: np.ndarray, G: FramedGeometry, delta: float) -> np.ndarray:
    m, n = G.m, G.n
    x = y[:m]
    alpha = y[m : m + n]
    nu = y[m + n :]
    data = frame_data(G, x)
    gD = gamma_D(data)
    tD = mixed_torsion_D(data)
    tQ = mixed_torsion_Q(data)
    gQ = gamma_Q(data, tQ)
    levi = levi_form(data)
    a_low = data.G_D @ alpha

    xdot = data.X @ alpha
    adot = -((gD @ alpha) @ alpha)
    adot -= data.G_D_inv @ ((nu @ levi.reshape(G.l, n * n)).reshape(n, n) @ alpha)
    nudot = nu @ (alpha @ gQ)  # α^i Γ^d_{ib} ν_d
    nudot -= a_low @ (tD @ alpha)
    nudot -= nu @ (tQ @ alpha)

    if delta:
        nu_up = data.G_Q_inv @ nu
        xdot = xdot + delta * (data.Z @ nu_up)
        adot -= delta * ((gamma_ZD(data, tD) @ alpha) @ nu_up)
        # T(X_l, ν♯) paired with u and with ν
        cross = nu_up @ ((a_low @ tD.reshape(n, -1)) + (nu @ tQ.reshape(G.l, -1))).reshape(G.l, n)
        adot += delta * (data.G_D_inv @ cross)
        nudot += delta * (nu @ (nu_up @ gamma_ZQ(data)))
        nudot += delta * (a_low @ (-data.c[:n, n:, n:] @ nu_up))
    return np.concatenate([xdot, adot, nudot])


def rhs_limit(s: ExtremalState, G: FramedGeometry) -> ExtremalState:
    """Time derivative of the state under the sub-Riemannian (δ = 0) system."""
    s.check(G)
    return ExtremalState.from_vector(_rhs(s.to_vector(), G, 0.0), G)


def rhs_family(s: ExtremalState, spec: RhsSpec) -> ExtremalState:
    """Time derivative under the δ-deformed system; δ = 0 is :func:`rhs_limit`."""
    s.check(spec.geometry)
    return ExtremalState.from_vector(_rhs(s.to_vector(), spec.geometry, float(spec.delta)), spec.geometry)


def vector_field(G: FramedGeometry, delta: float = 0.0) -> Callable[[float, np.ndarray], np.ndarray]:
    """Flat ``f(t, y)`` for the integrators."""
    if not delta >= 0:
        raise ValueError("delta must be non-negative")
    delta = float(delta)

    def f(t, y):
        return _rhs(y, G, delta)

    return f


def speed(s: ExtremalState, G: FramedGeometry) -> float:
    """‖u‖ = sqrt(G_D{ij} α^i α^j) at s.x."""
    G_D = G.gram_jet(np.asarray(s.x, dtype=float))[0]
    return float(np.sqrt(max(s.alpha @ G_D @ s.alpha, 0.0)))


def family_speed(s: ExtremalState, G: FramedGeometry, delta: float) -> float:
    """Speed in the penalized metric: sqrt(‖α‖² + δ ν_a G_Q^{ab} ν_b)."""
    G_D, _, G_Q, _ = G.gram_jet(np.asarray(s.x, dtype=float))
    sq = s.alpha @ G_D @ s.alpha + delta * (s.nu @ np.linalg.solve(G_Q, s.nu))
    return float(np.sqrt(max(sq, 0.0)))


def horizontality_residual(s: ExtremalState, G: FramedGeometry) -> float:
    """Size of the complement components of ẋ expressed in the frame."""
    data = frame_data(G, s.x)
    xdot = data.X @ s.alpha
    comps = data.E_inv @ xdot
    return float(np.abs(comps[G.n :]).max(initial=0.0))


def trajectory_states(ys, G: FramedGeometry) -> list[ExtremalState]:
    """Rows of a sampled trajectory (``Trajectory.ys``) as :class:`ExtremalState` objects."""
    return [ExtremalState.from_vector(y, G) for y in np.asarray(ys, dtype=float)]
