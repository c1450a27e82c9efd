"""Framed geometries (M, g, D, D⊥): frames, Lie brackets, structure functions.

A geometry is given in a single chart of R^m by expression-backed frame
fields X_1..X_n spanning D and Z_1..Z_l spanning the complement.  Unless
Gram matrices are supplied, both frames are declared orthonormal, which
defines the metric.  Frame index order throughout is (X_1..X_n, Z_1..Z_l).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ModelError, SingularFrameError
from .expr import ExprNode, as_expr, compile_jet, gradient, evaluate

RCOND_MIN = 1e-12


def _expr_matrix(rows, dim, shape, what):
    if rows is None:
        return None
    out = tuple(tuple(as_expr(v, dim) for v in row) for row in rows)
    if len(out) != shape[0] or any(len(r) != shape[1] for r in out):
        raise ModelError(f"{what} must be a {shape[0]}x{shape[1]} matrix")
    return out


@dataclass(frozen=True)
class FramedGeometry:
    """Coordinate dimension m = n + l, frames X (n fields) and Z (l fields).

    Each field is a length-m sequence of coefficient expressions in the
    coordinate basis.  ``gram_D`` / ``gram_Q`` are optional symmetric matrices
    of expressions (default identity).
    """

    X: tuple
    Z: tuple
    gram_D: tuple | None = None
    gram_Q: tuple | None = None
    coord_names: tuple[str, ...] | None = None
    name: str = "custom"
    _jets: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_sources(cls, X, Z, gram_D=None, gram_Q=None, coord_names=None, name="custom"):
        """Build from nested sequences of numbers / expression sources / nodes."""
        if not X:
            raise ModelError("at least one horizontal frame field is required")
        m = len(X[0])
        n, l = len(X), len(Z)
        if n + l != m:
            raise ModelError(f"frame count n + l = {n} + {l} does not match dimension {m}")
        Xe = _expr_matrix(X, m, (n, m), "X frame")
        Ze = _expr_matrix(Z, m, (l, m), "Z frame")
        gD = _expr_matrix(gram_D, m, (n, n), "gram_D")
        gQ = _expr_matrix(gram_Q, m, (l, l), "gram_Q")
        names = tuple(coord_names) if coord_names else tuple(f"x{i + 1}" for i in range(m))
        if len(names) != m:
            raise ModelError("coord_names length does not match dimension")
        return cls(Xe, Ze, gD, gQ, names, name)

    def __post_init__(self):
        m = self.m
        if self.coord_names is None:
            object.__setattr__(self, "coord_names", tuple(f"x{i + 1}" for i in range(m)))
        for f in self.X + self.Z:
            if len(f) != m:
                raise ModelError("all frame fields must have m coefficients")
        if self.n + self.l != m:
            raise ModelError("n + l must equal m")

    @property
    def m(self) -> int:
        return len(self.X[0])

    @property
    def n(self) -> int:
        return len(self.X)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.Z)

    @property
    def fields(self) -> tuple:
        return self.X + self.Z

    # -- compiled evaluation -------------------------------------------------

    def _frame_jet(self):
        jet = self._jets.get("frame")
        if jet is None:
            exprs = [c for f in self.fields for c in f]
            jet = compile_jet(exprs, self.m)
            self._jets["frame"] = jet
        return jet

    def _gram_jet(self):
        if "gram" not in self._jets:
            exprs = []
            for g in (self.gram_D, self.gram_Q):
                if g is not None:
                    exprs.extend(c for row in g for c in row)
            self._jets["gram"] = compile_jet(exprs, self.m) if exprs else None
        return self._jets["gram"]

    @property
    def gram_is_constant(self) -> bool:
        return all(
            e.is_constant() for g in (self.gram_D, self.gram_Q) if g is not None for row in g for e in row
        )

    def frame_jet(self, point):
        """(E, dE) with E[mu, A] = E_A^mu and dE[nu, mu, A] = d_nu E_A^mu."""
        m = self.m
        vals, g = self._frame_jet()(point)
        E = vals.reshape(m, m).T
        dE = g.reshape(m, m, m).transpose(2, 1, 0)
        return E, dE

    def gram_jet(self, point):
        """(G_D, dG_D, G_Q, dG_Q) with dG[nu] = d_nu G (coordinate partials)."""
        n, l, m = self.n, self.l, self.m
        jet = self._gram_jet()
        if jet is not None:
            vals, g = jet(point)
        k = 0
        out = []
        for gram, size in ((self.gram_D, n), (self.gram_Q, l)):
            if gram is None:
                out.append(np.eye(size))
                out.append(np.zeros((m, size, size)))
            else:
                s = size * size
                out.append(vals[k : k + s].reshape(size, size))
                out.append(g[k : k + s].T.reshape(m, size, size))
                k += s
        return tuple(out)

    def constant_gram_data(self):
        """(G_D, G_Q, G_D⁻¹, G_Q⁻¹) when both Gram matrices are constant, else None."""
        if "gram_const" not in self._jets:
            out = None
            if self.gram_is_constant:
                G_D, _, G_Q, _ = self.gram_jet(np.zeros(self.m))
                out = (G_D, G_Q, np.linalg.inv(G_D), np.linalg.inv(G_Q))
            self._jets["gram_const"] = out
        return self._jets["gram_const"]

    def frame_matrix(self, point) -> np.ndarray:
        return self.frame_jet(np.asarray(point, dtype=float))[0]

    def with_gram(self, gram_D=None, gram_Q=None) -> "FramedGeometry":
        """Copy with replaced Gram matrices (``None`` keeps the current one)."""
        m = self.m
        gD = self.gram_D if gram_D is None else _expr_matrix(gram_D, m, (self.n, self.n), "gram_D")
        gQ = self.gram_Q if gram_Q is None else _expr_matrix(gram_Q, m, (self.l, self.l), "gram_Q")
        return FramedGeometry(self.X, self.Z, gD, gQ, self.coord_names, self.name)

    def with_complement(self, Z) -> "FramedGeometry":
        Ze = _expr_matrix(Z, self.m, (self.l, self.m), "Z frame")
        return FramedGeometry(self.X, Ze, self.gram_D, self.gram_Q, self.coord_names, self.name)


@dataclass(frozen=True)
class PointFrameData:
    """All first-order frame data at one point.

    ``c[C, A, B]`` are the structure functions, [E_A, E_B] = c^C_{AB} E_C.
    ``dG_D[A]`` / ``dG_Q[A]`` are the derivatives of the Gram matrices along
    the frame field E_A.
    """

    point: np.ndarray
    E: np.ndarray
    E_inv: np.ndarray
    dE: np.ndarray
    c: np.ndarray
    G_D: np.ndarray
    G_Q: np.ndarray
    G_D_inv: np.ndarray
    G_Q_inv: np.ndarray
    dG_D: np.ndarray
    dG_Q: np.ndarray
    n: int
    l: int  # noqa: E741
    rcond: float
    gram_constant: bool = False

    @property
    def m(self) -> int:
        return self.n + self.l

    @property
    def X(self) -> np.ndarray:
        return self.E[:, : self.n]

    @property
    def Z(self) -> np.ndarray:
        return self.E[:, self.n :]

    def bracket_vectors(self) -> np.ndarray:
        """Coordinate components of [E_A, E_B], shape (m, m, m) as [mu, A, B]."""
        return np.einsum("mc,cab->mab", self.E, self.c)


def frame_data(G: FramedGeometry, point) -> PointFrameData:
    """Evaluate frames, structure functions and Gram data at ``point``."""
    x = np.asarray(point, dtype=float)
    if x.shape != (G.m,):
        raise ValueError(f"point must have length {G.m}")
    E, dE = G.frame_jet(x)
    m, n, l = G.m, G.n, G.l
    try:
        E_inv = np.linalg.inv(E)
    except np.linalg.LinAlgError:
        raise SingularFrameError(x, 0.0) from None
    # 1-norm reciprocal condition number; non-finite entries in E end up as nan here
    norms = np.abs(np.concatenate((E, E_inv))).reshape(2, m, m).sum(axis=1).max(axis=1)
    rcond = 1.0 / (norms[0] * norms[1])
    if not rcond >= RCOND_MIN:
        raise SingularFrameError(x, float(rcond) if np.isfinite(rcond) else 0.0)
    # t[A, nu, B] = E_A(E_B^nu); bracket = t - t^T in (A, B)
    t = (E.T @ dE.reshape(m, m * m)).reshape(m, m, m)
    br = t.transpose(1, 0, 2) - t.transpose(1, 2, 0)
    c = (E_inv @ br.reshape(m, m * m)).reshape(m, m, m)
    c = 0.5 * (c - c.transpose(0, 2, 1))
    const = G.constant_gram_data()
    if const is not None:
        G_D, G_Q, G_D_inv, G_Q_inv = const
        dG_D = np.zeros((m, n, n))
        dG_Q = np.zeros((m, l, l))
    else:
        G_D, gD, G_Q, gQ = G.gram_jet(x)
        G_D_inv = np.linalg.inv(G_D)
        G_Q_inv = np.linalg.inv(G_Q)
        dG_D = (E.T @ gD.reshape(m, n * n)).reshape(m, n, n)
        dG_Q = (E.T @ gQ.reshape(m, l * l)).reshape(m, l, l)
    return PointFrameData(
        point=x,
        E=E,
        E_inv=E_inv,
        dE=dE,
        c=c,
        G_D=G_D,
        G_Q=G_Q,
        G_D_inv=G_D_inv,
        G_Q_inv=G_Q_inv,
        dG_D=dG_D,
        dG_Q=dG_Q,
        n=n,
        l=l,
        rcond=float(rcond),
        gram_constant=const is not None,
    )


def bracket(V: Sequence[ExprNode], W: Sequence[ExprNode], point) -> np.ndarray:
    """Lie bracket [V, W] = (JW)·V − (JV)·W at ``point`` via dual numbers."""
    x = [float(v) for v in point]
    if len(V) != len(x) or len(W) != len(x):
        raise ValueError("field dimension does not match point")
    Vv = np.array([evaluate(e, x) for e in V])
    Wv = np.array([evaluate(e, x) for e in W])
    JV = np.array([gradient(e, x) for e in V])
    JW = np.array([gradient(e, x) for e in W])
    return JW @ Vv - JV @ Wv


def levi_form(data: PointFrameData) -> np.ndarray:
    """L[a, i, k]: complement components of [X_i, X_k] in the Z-frame."""
    n = data.n
    return data.c[n:, :n, :n].copy()


def check_gram(data: PointFrameData) -> None:
    """Raise :class:`ModelError` unless both Gram matrices are SPD."""
    for name, g in (("gram_D", data.G_D), ("gram_Q", data.G_Q)):
        if not np.allclose(g, g.T, rtol=0, atol=1e-12 * (1 + np.abs(g).max())):
            raise ModelError(f"{name} is not symmetric at {list(data.point)}")
        if np.linalg.eigvalsh(0.5 * (g + g.T)).min() <= 0:
            raise ModelError(f"{name} is not positive definite at {list(data.point)}")
