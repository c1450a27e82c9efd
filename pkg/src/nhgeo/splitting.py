"""Changes of complement and the torsion-minimizing canonical complement.

A change of splitting is a pointwise linear map f: Q → D with components
``f[a, j]`` (complement index first).  It replaces Z_a by Ẑ_a = Z_a + f[a, j] X_j
and keeps D, its metric and the complement Gram matrix.

Conventions used here, with S_{cak} = ⟨Z_c, T(X_k, Z_a)⟩ lowered by the
complement metric and L_{cjk} = ⟨Z_c, [X_j, X_k]⟩:

    S_{cak} ↦ S_{cak} + ½ (f[a, j] L_{cjk} + f[c, j] L_{ajk})
    U_{bj}  = S_{bai} L^a_{jk} G_D^{ik}

The canonical complement is the one with U = 0; it exists and is unique
when f ↦ (change of U) is injective.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass

import numpy as np

from .connection import mixed_torsion_Q
from .errors import LeviNotSurjectiveError, ModelError, SingularSplittingError
from .expr import ExprNode, add, as_expr, const, mul
from .geometry import FramedGeometry, PointFrameData, frame_data, levi_form

RANK_RTOL = 1e-9
FD_STEP = 1e-3


@dataclass(frozen=True)
class SplittingChange:
    """f[a, j]: the X_j-component added to Z_a.  Entries are numbers or expressions."""

    f: tuple

    @classmethod
    def from_array(cls, f) -> "SplittingChange":
        if isinstance(f, np.ndarray):
            f = f.tolist()
        rows = tuple(tuple(v for v in row) for row in f)
        if len({len(r) for r in rows}) > 1:
            raise ModelError("splitting change rows must have equal length")
        return cls(rows)

    @classmethod
    def zero(cls, l: int, n: int) -> "SplittingChange":  # noqa: E741
        return cls(tuple((0.0,) * n for _ in range(l)))

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.f), len(self.f[0]) if self.f else 0)

    def values(self) -> np.ndarray:
        """Numeric matrix (raises if an entry is a non-constant expression)."""
        out = np.empty(self.shape)
        for a, row in enumerate(self.f):
            for j, v in enumerate(row):
                if isinstance(v, ExprNode):
                    if not v.is_constant():
                        raise ValueError("splitting change is not constant")
                    from .expr import evaluate

                    v = evaluate(v, [0.0] * (max(v.variables(), default=-1) + 1))
                out[a, j] = float(v)
        return out


def _is_zero(e: ExprNode) -> bool:
    return e.kind == "const" and e.value == 0


def apply_change(G: FramedGeometry, f: SplittingChange | np.ndarray) -> FramedGeometry:
    """New complement Ẑ_a = Z_a + f[a, j] X_j; X, G_D and G_Q are kept."""
    if not isinstance(f, SplittingChange):
        f = SplittingChange.from_array(f)
    if f.shape != (G.l, G.n):
        raise ModelError(f"splitting change must be {G.l}x{G.n}, got {f.shape[0]}x{f.shape[1]}")
    m = G.m
    Z = []
    for a in range(G.l):
        coeffs = []
        for mu in range(m):
            e = G.Z[a][mu]
            for j in range(G.n):
                fa = as_expr(f.f[a][j], m)
                if _is_zero(fa) or _is_zero(G.X[j][mu]):
                    continue
                term = G.X[j][mu] if fa.kind == "const" and fa.value == 1 else mul(fa, G.X[j][mu])
                e = term if _is_zero(e) else add(e, term)
            coeffs.append(e)
        Z.append(tuple(coeffs))
    return dataclasses.replace(G, Z=tuple(Z), _jets={})


def levi_matrix(data: PointFrameData) -> np.ndarray:
    """Λ[a, p] = L^a_{ik} for the p-th pair (i < k)."""
    L = levi_form(data)
    pairs = list(itertools.combinations(range(data.n), 2))
    return np.array([[L[a, i, k] for i, k in pairs] for a in range(data.l)]).reshape(data.l, len(pairs))


def wedge_metric(G_D: np.ndarray) -> np.ndarray:
    """Induced metric on D∧D in the basis e_i∧e_k, i < k."""
    pairs = list(itertools.combinations(range(G_D.shape[0]), 2))
    W = np.empty((len(pairs), len(pairs)))
    for p, (i, k) in enumerate(pairs):
        for q, (j, l) in enumerate(pairs):  # noqa: E741
            W[p, q] = G_D[i, j] * G_D[k, l] - G_D[i, l] * G_D[k, j]
    return W


def check_levi_surjective(data: PointFrameData) -> np.ndarray:
    lam = levi_matrix(data)
    s = np.linalg.svd(lam, compute_uv=False) if lam.size else np.zeros(0)
    rank = int((s > RANK_RTOL * max(1.0, s.max(initial=0.0))).sum())
    if rank < data.l:
        raise LeviNotSurjectiveError(
            f"not two-step generating at point {data.point.tolist()}: Levi form has rank {rank} < {data.l}"
        )
    return lam


def canonical_q_metric(data: PointFrameData) -> np.ndarray:
    """Metric on Q induced from D∧D through the Levi form: (Λ W⁻¹ Λᵀ)⁻¹."""
    lam = check_levi_surjective(data)
    W = wedge_metric(data.G_D)
    M = lam @ np.linalg.solve(W, lam.T)
    h = np.linalg.inv(M)
    return 0.5 * (h + h.T)


def _canonical_at(G: FramedGeometry, x) -> np.ndarray:
    return canonical_q_metric(frame_data(G, x))


def q_metric_data(G: FramedGeometry, point, q_metric: str = "canonical") -> PointFrameData:
    """Frame data with the complement metric replaced by the chosen one.

    ``q_metric="declared"`` keeps the geometry's G_Q.  ``"canonical"`` uses the
    induced metric; its derivatives along the frame are taken with a
    fourth-order central difference (the metric itself depends on first
    derivatives of the frame).
    """
    data = frame_data(G, point)
    if q_metric == "declared":
        return data
    if q_metric != "canonical":
        raise ValueError("q_metric must be 'canonical' or 'declared'")
    h = canonical_q_metric(data)
    x = data.point
    dh = np.empty((G.m, G.l, G.l))
    for A in range(G.m):
        v = data.E[:, A]
        eps = FD_STEP / max(1.0, float(np.abs(v).max()))
        hp1, hm1 = _canonical_at(G, x + eps * v), _canonical_at(G, x - eps * v)
        hp2, hm2 = _canonical_at(G, x + 2 * eps * v), _canonical_at(G, x - 2 * eps * v)
        dh[A] = (8 * (hp1 - hm1) - (hp2 - hm2)) / (12 * eps)
    return dataclasses.replace(data, G_Q=h, G_Q_inv=np.linalg.inv(h), dG_Q=dh, gram_constant=False)


def lowered_torsion_Q(data: PointFrameData) -> np.ndarray:
    """S[c, a, k] = ⟨Z_c, T(X_k, Z_a)⟩, lowered with the complement metric of ``data``."""
    t = mixed_torsion_Q(data)
    return np.einsum("cb,bak->cak", data.G_Q, t)


def lowered_levi(data: PointFrameData) -> np.ndarray:
    return np.einsum("cb,bjk->cjk", data.G_Q, levi_form(data))


def torsion_change_law(T_low: np.ndarray, L_low: np.ndarray, f) -> np.ndarray:
    """Predicted S after the change f: S_{cak} + ½(f[a,j] L_{cjk} + f[c,j] L_{ajk})."""
    f = np.asarray(f.values() if isinstance(f, SplittingChange) else f, dtype=float)
    fl = np.einsum("aj,cjk->cak", f, L_low)
    return T_low + 0.5 * (fl + fl.transpose(1, 0, 2))


def compute_U(data: PointFrameData) -> np.ndarray:
    """U[b, j] = S_{bai} L^a_{jk} G_D^{ik} (complement index lowered)."""
    S = lowered_torsion_Q(data)
    return np.einsum("bai,ajk,ik->bj", S, levi_form(data), data.G_D_inv)


@dataclass(frozen=True)
class InjectivityReport:
    matrix: np.ndarray
    rank: int
    kernel_dim: int
    kernel_basis: np.ndarray
    singular_values: np.ndarray

    @property
    def injective(self) -> bool:
        return self.kernel_dim == 0

    def as_dict(self) -> dict:
        return {
            "size": int(self.matrix.shape[0]),
            "rank": self.rank,
            "kernel_dim": self.kernel_dim,
            "kernel_basis": self.kernel_basis.tolist(),
            "singular_values": self.singular_values.tolist(),
        }


def injj_matrix(data: PointFrameData) -> np.ndarray:
    """Matrix of f ↦ ½(f[a,l] L_{bli} + f[b,l] L_{ali}) L^a_{jk} G_D^{ik}.

    Rows are indexed by (b, j), columns by (a, l), both row-major.
    """
    n, l = data.n, data.l  # noqa: E741
    L = levi_form(data)
    Llow = np.einsum("cb,bjk->cjk", data.G_Q, L)
    K = np.einsum("ajk,ik->aij", L, data.G_D_inv)  # L^a_{jk} G^{ik}, indexed [a, i, j]
    M = np.zeros((l, n, l, n))
    # ½ f[a', l'] L_{b l' i} K[a', i, j]  +  ½ f[b, l'] L_{a l' i} K[a, i, j]
    M += 0.5 * np.einsum("bpi,aij->bjap", Llow, K)
    t = 0.5 * np.einsum("api,aij->pj", Llow, K)
    for b in range(l):
        M[b, :, b, :] += t.T
    return M.reshape(l * n, l * n)


def build_injj_matrix(G: FramedGeometry, point, q_metric: str = "canonical") -> InjectivityReport:
    data = q_metric_data(G, point, q_metric) if q_metric == "canonical" else frame_data(G, point)
    check_levi_surjective(data)
    return _report(injj_matrix(data))


def _report(M: np.ndarray) -> InjectivityReport:
    _, s, Vt = np.linalg.svd(M)
    tol = RANK_RTOL * max(1.0, s.max(initial=0.0))
    rank = int((s > tol).sum())
    return InjectivityReport(M, rank, M.shape[1] - rank, Vt[rank:].copy(), s)


@dataclass(frozen=True)
class SplitResult:
    f: np.ndarray
    report: InjectivityReport
    U_before: np.ndarray
    U_after: np.ndarray
    torsion_norm: float
    q_metric: np.ndarray

    def as_dict(self) -> dict:
        return {
            "f": self.f.tolist(),
            "rank_report": self.report.as_dict(),
            "U_before": self.U_before.tolist(),
            "U_after": self.U_after.tolist(),
            "residual_before": float(np.abs(self.U_before).max(initial=0.0)),
            "residual_after": float(np.abs(self.U_after).max(initial=0.0)),
            "torsion_norm": self.torsion_norm,
            "q_metric": self.q_metric.tolist(),
        }


def solve_canonical_splitting(G: FramedGeometry, point, q_metric: str = "canonical") -> SplitResult:
    """The change f making U vanish at ``point``; verified by recomputation."""
    data = q_metric_data(G, point, q_metric)
    check_levi_surjective(data)
    report = _report(injj_matrix(data))
    U = compute_U(data)
    if not report.injective:
        raise SingularSplittingError(
            f"canonical complement is not determined at {data.point.tolist()}: kernel dimension "
            f"{report.kernel_dim} (free rank-3 distributions have this obstruction)",
            report.kernel_dim,
            report.kernel_basis,
        )
    f = np.linalg.solve(report.matrix, -U.reshape(-1)).reshape(G.l, G.n)
    after = q_metric_data(apply_change(G, f), point, q_metric)
    return SplitResult(
        f=f,
        report=report,
        U_before=U,
        U_after=compute_U(after),
        torsion_norm=float(np.abs(lowered_torsion_Q(data)).max(initial=0.0)),
        q_metric=data.G_Q,
    )


def gram_proportional(data: PointFrameData, h: np.ndarray, tol: float = 1e-10) -> bool:
    """Whether the declared complement metric is a constant multiple of h at this point."""
    r = np.trace(data.G_Q) / np.trace(h)
    return bool(np.abs(data.G_Q - r * h).max() <= tol * max(1.0, np.abs(data.G_Q).max()))


def zero_change(G: FramedGeometry) -> SplittingChange:
    return SplittingChange(tuple((const(0.0),) * G.n for _ in range(G.l)))
