"""Coordinate Hamiltonian system for normal extremals, used as an oracle.

Only coordinate-level objects are used here (frame coefficients, their
partial derivatives and the Gram matrix), never the connection module, so
agreement with :mod:`nhgeo.extremal` is a genuine cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extremal import ExtremalState, vector_field
from .geometry import FramedGeometry
from .integrate import IntegratorConfig, Trajectory, integrate


@dataclass
class CotangentState:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.x.shape != self.p.shape:
            raise ValueError("x and p must have the same length")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])

    @classmethod
    def from_vector(cls, y) -> "CotangentState":
        y = np.asarray(y, dtype=float)
        m = y.size // 2
        return cls(y[:m].copy(), y[m:].copy())


def hamiltonian(s: CotangentState, G: FramedGeometry) -> float:
    """H = ½ G_D^{ij} ⟨p, X_i⟩⟨p, X_j⟩."""
    E, _ = G.frame_jet(s.x)
    G_D = G.gram_jet(s.x)[0]
    P = s.p @ E[:, : G.n]
    return 0.5 * float(P @ np.linalg.solve(G_D, P))


def _hamilton(y, G: FramedGeometry):
    m, n = G.m, G.n
    x, p = y[:m], y[m:]
    E, dE = G.frame_jet(x)
    G_D, dG_D = G.gram_jet(x)[:2]
    X = E[:, :n]
    dX = dE[:, :, :n]  # [nu, mu, i]
    Ginv = np.linalg.inv(G_D)
    P = p @ X
    w = Ginv @ P  # G_D^{ij} P_j
    xdot = X @ w
    # dH/dx^nu = w_i <p, d_nu X_i> - ½ w_i w_j d_nu G_D{ij}
    dP = np.einsum("m,vmi->vi", p, dX)
    pdot = -(dP @ w) + 0.5 * np.einsum("vij,i,j->v", dG_D, w, w)
    return np.concatenate([xdot, pdot])


def rhs_hamilton(s: CotangentState, G: FramedGeometry) -> CotangentState:
    """(∂H/∂p, −∂H/∂x) with exact partials from the compiled frame jet."""
    return CotangentState.from_vector(_hamilton(s.to_vector(), G))


def hamilton_field(G: FramedGeometry):
    """Flat ``f(t, y)`` over y = (x, p)."""

    def f(t, y):
        return _hamilton(y, G)

    return f


def initial_momentum(s: ExtremalState, G: FramedGeometry) -> np.ndarray:
    """Solve ⟨p, X_i⟩ = G_D{ij} α^j and ⟨p, Z_a⟩ = ν_a for p."""
    E, _ = G.frame_jet(s.x)
    G_D = G.gram_jet(s.x)[0]
    rhs = np.concatenate([G_D @ s.alpha, s.nu])
    return np.linalg.solve(E.T, rhs)


@dataclass(frozen=True)
class Comparison:
    times: np.ndarray
    deviations: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max(initial=0.0))


def compare(traj_a: Trajectory, traj_b: Trajectory, sample_count: int, m: int) -> Comparison:
    """Sup distance between the first ``m`` components of two trajectories.

    Both are resampled by dense output on a shared uniform grid.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    t0 = max(traj_a.step_t[0], traj_b.step_t[0])
    t1 = min(traj_a.step_t[-1], traj_b.step_t[-1])
    if not t1 > t0:
        raise ValueError("trajectories do not share a time interval")
    ts = np.linspace(t0, t1, sample_count)
    xa = traj_a.at(ts)[:, :m]
    xb = traj_b.at(ts)[:, :m]
    return Comparison(ts, np.linalg.norm(xa - xb, axis=1))


@dataclass(frozen=True)
class OracleReport:
    comparison: Comparison
    speed_drift: float
    energy_drift: float
    frame: Trajectory
    hamilton: Trajectory

    @property
    def max_deviation(self) -> float:
        return self.comparison.max_deviation

    def as_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "times": self.comparison.times.tolist(),
            "deviations": self.comparison.deviations.tolist(),
            "speed_drift": self.speed_drift,
            "energy_drift": self.energy_drift,
        }


def speed_series(traj_y: np.ndarray, G: FramedGeometry) -> np.ndarray:
    m, n = G.m, G.n
    out = np.empty(len(traj_y))
    for k, y in enumerate(traj_y):
        G_D = G.gram_jet(y[:m])[0]
        a = y[m : m + n]
        out[k] = np.sqrt(max(a @ G_D @ a, 0.0))
    return out


def run_oracle(G: FramedGeometry, s0: ExtremalState, cfg: IntegratorConfig, sample_count: int = 201) -> OracleReport:
    """Integrate both systems from matching data and compare projections.

    Drifts are measured on the accepted integrator steps, not on
    interpolated samples.
    """
    s0.check(G)
    frame = integrate(vector_field(G), s0.to_vector(), cfg)
    p0 = initial_momentum(s0, G)
    ham = integrate(hamilton_field(G), np.concatenate([s0.x, p0]), cfg)
    cmp_ = compare(frame, ham, sample_count, G.m)
    sp = speed_series(frame.step_y, G)
    m = G.m
    H = np.array([hamiltonian(CotangentState(y[:m], y[m:]), G) for y in ham.step_y])
    return OracleReport(
        comparison=cmp_,
        speed_drift=float(np.abs(sp - sp[0]).max()),
        energy_drift=float(np.abs(H - H[0]).max()),
        frame=frame,
        hamilton=ham,
    )
