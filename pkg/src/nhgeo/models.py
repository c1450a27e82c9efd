"""Built-in framed geometries and reference solutions.

Models
------
``heisenberg_a``  X1 = ∂x1 − x2 ∂z, X2 = ∂x2, Z = ∂z.
``heisenberg_b``  X1 = ∂x1 − x2 ∂z, X2 = ∂x2 + x1 ∂z, Z = 2 ∂z.
``free_n``        coordinates (x1..xn, y12, y13, ..., y(n-1)n) in lexicographic
                  order; X_i = ∂x_i − Σ_{j>i} x_j ∂y_ij, Z_ij = ∂y_ij = [X_i, X_j].
``contact5``      coordinates (x1..x4, z); X1 = ∂x1 − x3 ∂z, X2 = λ(∂x2 − x4 ∂z),
                  X3 = ∂x3 + x1 ∂z, X4 = λ(∂x4 + x2 ∂z), Z = 2 ∂z.

The default complement is normalized so that the Levi form has unit entries
(L(X1, X2) = Z for Heisenberg, L(X1, X3) = Z for contact5).  Passing
``complement="coordinate"`` uses the bare coordinate field ∂z instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .expr import ExprNode, evaluate, gradient, parse, to_source
from .extremal import ExtremalState
from .geometry import FramedGeometry

MODEL_IDS = ("heisenberg_a", "heisenberg_b", "free_n", "contact5")

LAMBDA_PRESETS = {
    "one": "1",
    "two": "2",
    "exp_x1": "exp(x1)",
    "exp_z": "exp(x5)",
    "quad_x1": "1 + x1^2",
    "mixed": "2 + sin(x1)*cos(x5) + x2*x4/4",
}

COMPLEMENTS = ("normalized", "coordinate")


@dataclass(frozen=True)
class ModelSpec:
    id: str
    n: int = 2
    lam: str = "1"
    complement: str = "normalized"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.id not in MODEL_IDS:
            raise ModelError(f"unknown model id {self.id!r}; expected one of {', '.join(MODEL_IDS)}")
        if self.complement not in COMPLEMENTS:
            raise ModelError(f"complement must be one of {COMPLEMENTS}, got {self.complement!r}")
        if self.id == "free_n" and (not isinstance(self.n, int) or self.n < 2):
            raise ModelError("free_n requires an integer n >= 2")

    @property
    def label(self) -> str:
        if self.id == "free_n":
            return f"free_n({self.n})"
        if self.id == "contact5":
            return f"contact5[lam={self.lam}]"
        return self.id

    def default_state(self) -> ExtremalState:
        G = build(self)
        alpha = np.zeros(G.n)
        alpha[0] = 1.0
        return ExtremalState(np.zeros(G.m), alpha, np.ones(G.l))


def lambda_source(lam: str) -> str:
    """Resolve a preset name to its expression source."""
    return LAMBDA_PRESETS.get(lam, lam)


def free_model(n: int, complement: str = "normalized") -> FramedGeometry:
    """Free two-step distribution of rank n on R^{n(n+1)/2}."""
    if n < 2:
        raise ModelError("free_n requires n >= 2")
    pairs = list(itertools.combinations(range(n), 2))
    m = n + len(pairs)
    slot = {p: n + k for k, p in enumerate(pairs)}
    X = []
    for i in range(n):
        row = ["0"] * m
        row[i] = "1"
        for j in range(i + 1, n):
            row[slot[(i, j)]] = f"-x{j + 1}"
        X.append(row)
    Z = []
    for p in pairs:
        row = [0] * m
        row[slot[p]] = 1
        Z.append(row)
    names = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}{j + 1}" for i, j in pairs]
    return FramedGeometry.from_sources(X, Z, coord_names=names, name=f"free_n({n})")


def free_pairs(n: int) -> list[tuple[int, int]]:
    """Index pairs (i, j), i < j, in the order of the complement frame."""
    return list(itertools.combinations(range(n), 2))


def heisenberg(frame: str = "a", complement: str = "normalized") -> FramedGeometry:
    names = ("x1", "x2", "z")
    if frame == "a":
        X = [[1, 0, "-x2"], [0, 1, 0]]
        zc = 1
    elif frame == "b":
        X = [[1, 0, "-x2"], [0, 1, "x1"]]
        zc = 2 if complement == "normalized" else 1
    else:
        raise ModelError(f"unknown Heisenberg frame {frame!r}")
    return FramedGeometry.from_sources(X, [[0, 0, zc]], coord_names=names, name=f"heisenberg_{frame}")


def contact5(lam="1", complement: str = "normalized") -> FramedGeometry:
    """The 5D contact model with scaling function λ(x1, x2, x3, x4, z)."""
    src = lambda_source(lam) if isinstance(lam, str) else to_source(lam)
    node = parse(src, 5)
    s = to_source(node)
    X = [
        [1, 0, 0, 0, "-x3"],
        [0, s, 0, 0, f"-{s}*x4"],
        [0, 0, 1, 0, "x1"],
        [0, 0, 0, s, f"{s}*x2"],
    ]
    zc = 2 if complement == "normalized" else 1
    return FramedGeometry.from_sources(
        X, [[0, 0, 0, 0, zc]], coord_names=("x1", "x2", "x3", "x4", "z"), name=f"contact5[{src}]"
    )


def build(spec: ModelSpec) -> FramedGeometry:
    if spec.id == "heisenberg_a":
        return heisenberg("a", spec.complement)
    if spec.id == "heisenberg_b":
        return heisenberg("b", spec.complement)
    if spec.id == "free_n":
        return free_model(spec.n, spec.complement)
    return contact5(spec.lam, spec.complement)


# -- Heisenberg closed forms --------------------------------------------------


def closed_form_heisenberg(K: float, C, frame: str, t, form: str = "consistent") -> np.ndarray:
    """Coordinates (x1, x2, z) of the Heisenberg extremal at times ``t``.

    ``C = (C1, ..., C5)``, ν = K.  ``form="printed"`` reproduces the published
    formulas term by term; ``form="consistent"`` is the exact solution of the
    frame system (the two agree e.g. for K = 1, C3 = C4 = C5 = 0).
    """
    if K == 0:
        raise ModelError("K = 0: the horizontal part is a straight line, x(t) affine in t")
    if form not in ("printed", "consistent"):
        raise ValueError("form must be 'printed' or 'consistent'")
    C1, C2, C3, C4, C5 = (float(c) for c in C)
    t = np.asarray(t, dtype=float)
    th = K * t + C2
    x1 = C1 / K * np.cos(th) + C3
    x2 = C1 / K * np.sin(th) + C4
    if frame == "a":
        if form == "printed":
            z = (
                C1**2 / (2 * K) * t
                - C1 * C4 / K * np.cos(th)
                - C1**2 / (4 * K) * np.sin(2 * th)
                + C1**2 * C2 / (2 * K)
                + C5
            )
        else:
            z = (
                C1**2 / (2 * K) * t
                - C1 * C4 / K * np.cos(th)
                - C1**2 / (4 * K**2) * np.sin(2 * th)
                + C1**2 * C2 / (2 * K)
                + C5
            )
    elif frame == "b":
        if form == "printed":
            z = C4 + C1**2 * C2 / K + C1**2 / K * t - (C1 * C3 * np.cos(th) + C1 * C5 * np.sin(th)) / K
        else:
            z = C1**2 * C2 / K + C1**2 / K * t + (C1 * C3 * np.sin(th) - C1 * C4 * np.cos(th)) / K + C5
    else:
        raise ModelError(f"unknown Heisenberg frame {frame!r}")
    return np.stack([x1, x2, z], axis=-1)


def closed_form_state0(K: float, C, frame: str, form: str = "consistent") -> ExtremalState:
    """Initial state (x(0), α(0), ν) matching the closed form at t = 0."""
    C1, C2 = float(C[0]), float(C[1])
    x0 = closed_form_heisenberg(K, C, frame, 0.0, form)
    alpha0 = np.array([-C1 * math.sin(C2), C1 * math.cos(C2)])
    return ExtremalState(x0, alpha0, np.array([float(K)]))


# -- 5D contact transcription -------------------------------------------------

# Each entry: (equation, what the published system prints, what the frame gives).
CONTACT5_CORRECTIONS = (
    ("xdot2", "alpha2/lam", "lam*alpha2"),
    ("xdot4", "alpha4/lam", "lam*alpha4"),
    ("zdot", "(x2*alpha4 - x4*alpha2)/lam", "lam*(x2*alpha4 - x4*alpha2)"),
    ("alphadot2", "(lam_x3 + x2*lam_z)*alpha2*alpha4", "(lam_x4 + x2*lam_z)*alpha2*alpha4"),
    ("alphadot3", "-(lam_x3 - x1*lam_z)/lam*(alpha2^2 + alpha4^2)", "-(lam_x3 + x1*lam_z)/lam*(alpha2^2 + alpha4^2)"),
    ("alphadot3", "-nu*alpha1", "+nu*alpha1"),
    ("nudot", "+2*lam_z/lam*(alpha2^2 + alpha4^2)", "-2*lam_z/lam*(alpha2^2 + alpha4^2)"),
)


def printed_contact5_rhs(lam, x, alpha, nu, corrected: bool = True) -> np.ndarray:
    """The hand-written ten-equation system of the 5D contact model.

    With ``corrected=False`` the published equations are used verbatim; with
    ``corrected=True`` the entries listed in :data:`CONTACT5_CORRECTIONS` are
    replaced by the values consistent with the frame.  Derivatives of λ come
    from the expression's exact gradient.
    """
    node = lam if isinstance(lam, ExprNode) else parse(lambda_source(lam), 5)
    x = np.asarray(x, dtype=float)
    L = evaluate(node, x)
    if L == 0:
        raise ModelError(f"lambda vanishes at {x.tolist()}")
    Lx1, Lx2, Lx3, Lx4, Lz = gradient(node, x)
    x1, x2, x3, x4, _ = x
    a1, a2, a3, a4 = (float(a) for a in alpha)
    nu = float(np.ravel(nu)[0])
    q = a2 * a2 + a4 * a4
    A = (Lx1 - x3 * Lz) / L
    B = (Lx3 + x1 * Lz) / L
    W = x4 * Lz - Lx2
    if corrected:
        s2, s4 = L, L
        c24 = Lx4 + x2 * Lz
        c3 = -(Lx3 + x1 * Lz) / L
        nu3 = 1.0
        nud = -2 * Lz / L * q
    else:
        s2, s4 = 1 / L, 1 / L
        c24 = Lx3 + x2 * Lz
        c3 = -(Lx3 - x1 * Lz) / L
        nu3 = -1.0
        nud = 2 * Lz / L * q
    return np.array(
        [
            a1,
            s2 * a2,
            a3,
            s4 * a4,
            x1 * a3 - x3 * a1 + s4 * x2 * a4 - s2 * x4 * a2,
            -A * q - nu * a3,
            A * a1 * a2 + B * a2 * a3 + c24 * a2 * a4 + W * a4 * a4 - L * L * nu * a4,
            c3 * q + nu3 * nu * a1,
            A * a1 * a4 + B * a3 * a4 - (Lx4 + x2 * Lz) * a2 * a2 - W * a2 * a4 + L * L * nu * a2,
            nud,
        ]
    )


def contact5_system_check(lam, point, state: ExtremalState, corrected: bool = True) -> float:
    """max |printed − engine| of the ten-equation right-hand side at one state."""
    from .extremal import _rhs

    src = lambda_source(lam) if isinstance(lam, str) else to_source(lam)
    G = contact5(src)
    point = np.asarray(point, dtype=float)
    y = np.concatenate([point, state.alpha, state.nu])
    engine = _rhs(y, G, 0.0)
    printed = printed_contact5_rhs(src, point, state.alpha, state.nu, corrected)
    return float(np.abs(engine - printed).max())
