"""The canonical metric connection of a framed geometry and its torsion.

The connection preserves D and D⊥, is metric, has vanishing D-valued
torsion on D×D and D⊥-valued torsion on D⊥×D⊥, and both mixed torsion
components are symmetric.  Everything is computed pointwise from
:class:`~nhgeo.geometry.PointFrameData`.

Index conventions (frame order X_1..X_n, Z_1..Z_l):

* ``levi[a, i, k]``   = L^a_{ik}, the Z_a-component of [X_i, X_k].
* ``tmix_D[j, a, k]`` = X_j-component of T(X_k, Z_a).
* ``tmix_Q[b, a, k]`` = Z_b-component of T(X_k, Z_a).
* ``gamma_D[k, i, j]``: ∇_{X_i} X_j = Γ^k_{ij} X_k.
* ``gamma_Q[b, i, a]``: ∇_{X_i} Z_a = Γ^b_{ia} Z_b.
* ``gamma_ZD[k, a, j]``: ∇_{Z_a} X_j.
* ``gamma_ZQ[c, a, b]``: ∇_{Z_a} Z_b.
* ``torsion_QQ[j, a, b]`` = X_j-component of T(Z_a, Z_b) = −[Z_a, Z_b]_D.

With the mixed torsions read as T(X_k, Z_a) (horizontal argument first) the
normal-extremal equations take the form implemented in :mod:`nhgeo.extremal`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointFrameData, levi_form


@dataclass(frozen=True)
class TorsionData:
    levi: np.ndarray
    tmix_D: np.ndarray
    tmix_Q: np.ndarray
    gamma_D: np.ndarray
    gamma_Q: np.ndarray
    gamma_ZD: np.ndarray
    gamma_ZQ: np.ndarray
    torsion_QQ: np.ndarray

    def as_dict(self) -> dict:
        return {name: getattr(self, name).tolist() for name in self.__dataclass_fields__}


def _raise(Ginv, low):
    """Contract the first index of ``low`` with Ginv (Ginv[b, c] low[c, ...])."""
    k = low.shape[0]
    return (Ginv @ low.reshape(k, -1)).reshape(low.shape)


def _koszul(G, Ginv, dG, c, const=False):
    """Christoffel symbols of a frame block via the Koszul formula.

    ``dG[i]`` is the derivative of G along the i-th field of the block and
    ``c[l, i, j]`` the block-internal components of [F_i, F_j].
    Returns Γ[l, i, j] with ∇_{F_i} F_j = Γ^l_{ij} F_l.
    """
    Gc = _raise(G, c)  # Gc[k, i, j] = <F_k, [F_i, F_j]>
    # rhs[k, i, j]: the Koszul bracket terms with the free index first
    rhs = Gc + Gc.transpose(1, 2, 0) - Gc.transpose(2, 0, 1)
    if not const:
        # F_i <F_j, F_k> + F_j <F_k, F_i> - F_k <F_i, F_j>
        rhs = rhs + dG.transpose(2, 0, 1) + dG.transpose(1, 2, 0) - dG
    return 0.5 * _raise(Ginv, rhs)


def gamma_D(data: PointFrameData) -> np.ndarray:
    """Γ^k_{ij} of ∇_{X_i} X_j from the Koszul formula on D."""
    n = data.n
    return _koszul(data.G_D, data.G_D_inv, data.dG_D[:n], data.c[:n, :n, :n], data.gram_constant)


def gamma_ZQ(data: PointFrameData) -> np.ndarray:
    """Γ^c_{ab} of ∇_{Z_a} Z_b from the Koszul formula on D⊥."""
    n = data.n
    return _koszul(data.G_Q, data.G_Q_inv, data.dG_Q[n:], data.c[n:, n:, n:], data.gram_constant)


def mixed_torsion_Q(data: PointFrameData) -> np.ndarray:
    """tmix_Q[b, a, k]: Z_b-component of T(X_k, Z_a).

    Lowered, ⟨Z_c, T(X_k, Z_a)⟩ = ½(X_k·G_Q{ac} − ⟨[X_k,Z_a],Z_c⟩ − ⟨Z_a,[X_k,Z_c]⟩),
    which is symmetric in (a, c).
    """
    n = data.n
    low = _raise(data.G_Q, data.c[n:, :n, n:]).transpose(0, 2, 1)  # [c, a, k] = <Z_c, [X_k, Z_a]>
    S = -(low + low.transpose(1, 0, 2))
    if not data.gram_constant:
        S = S + data.dG_Q[:n].transpose(1, 2, 0)  # X_k G_Q{ca}
    return 0.5 * _raise(data.G_Q_inv, S)


def mixed_torsion_D(data: PointFrameData) -> np.ndarray:
    """tmix_D[j, a, k]: X_j-component of T(X_k, Z_a).

    Lowered, ⟨X_l, T(X_k, Z_a)⟩ = ½(−Z_a·G_D{kl} + ⟨X_l,[Z_a,X_k]⟩ + ⟨X_k,[Z_a,X_l]⟩),
    symmetric in (k, l).
    """
    n = data.n
    low = _raise(data.G_D, data.c[:n, n:, :n])  # [l, a, k] = <X_l, [Z_a, X_k]>
    S = low + low.transpose(2, 1, 0)
    if not data.gram_constant:
        S = S - data.dG_D[n:].transpose(1, 0, 2)  # Z_a G_D{lk}
    return 0.5 * _raise(data.G_D_inv, S)


def gamma_Q(data: PointFrameData, tmix_Q: np.ndarray | None = None) -> np.ndarray:
    """Γ^b_{ia} of ∇_{X_i} Z_a = T(X_i, Z_a)_{D⊥} + [X_i, Z_a]_{D⊥}."""
    n = data.n
    if tmix_Q is None:
        tmix_Q = mixed_torsion_Q(data)
    return tmix_Q.transpose(0, 2, 1) + data.c[n:, :n, n:]


def gamma_ZD(data: PointFrameData, tmix_D: np.ndarray | None = None) -> np.ndarray:
    """Christoffels of ∇_{Z_a} X_j = T(Z_a, X_j)_D + [Z_a, X_j]_D."""
    n = data.n
    if tmix_D is None:
        tmix_D = mixed_torsion_D(data)
    return -tmix_D + data.c[:n, n:, :n]


def torsion_data(data: PointFrameData) -> TorsionData:
    """All connection and torsion blocks at one point."""
    n = data.n
    tQ = mixed_torsion_Q(data)
    tD = mixed_torsion_D(data)
    return TorsionData(
        levi=levi_form(data),
        tmix_D=tD,
        tmix_Q=tQ,
        gamma_D=gamma_D(data),
        gamma_Q=gamma_Q(data, tQ),
        gamma_ZD=gamma_ZD(data, tD),
        gamma_ZQ=gamma_ZQ(data),
        torsion_QQ=-data.c[:n, n:, n:],
    )


def full_connection(td: TorsionData) -> np.ndarray:
    """Assemble Γ[C, A, B] with ∇_{E_A} E_B = Γ^C_{AB} E_C over the whole frame."""
    n = td.gamma_D.shape[0]
    l = td.gamma_ZQ.shape[0]  # noqa: E741
    m = n + l
    gam = np.zeros((m, m, m))
    gam[:n, :n, :n] = td.gamma_D
    gam[n:, :n, n:] = td.gamma_Q
    gam[:n, n:, :n] = td.gamma_ZD
    gam[n:, n:, n:] = td.gamma_ZQ
    return gam


def torsion_tensor(gam: np.ndarray, c: np.ndarray) -> np.ndarray:
    """T[C, A, B] = Γ^C_{AB} − Γ^C_{BA} − c^C_{AB}."""
    return gam - gam.transpose(0, 2, 1) - c


def assembled_torsion(td: TorsionData) -> np.ndarray:
    """The torsion blocks placed in one (m, m, m) array, T[C, A, B] = T(E_A, E_B)^C."""
    n = td.gamma_D.shape[0]
    l = td.gamma_ZQ.shape[0]  # noqa: E741
    m = n + l
    T = np.zeros((m, m, m))
    T[n:, :n, :n] = -td.levi
    T[:n, n:, n:] = td.torsion_QQ
    # T(X_k, Z_a) stored at [., k, n + a]; T(Z_a, X_k) = −T(X_k, Z_a)
    mixD = np.einsum("jak->jka", td.tmix_D)
    mixQ = np.einsum("bak->bka", td.tmix_Q)
    T[:n, :n, n:] = mixD
    T[:n, n:, :n] = -mixD.transpose(0, 2, 1)
    T[n:, :n, n:] = mixQ
    T[n:, n:, :n] = -mixQ.transpose(0, 2, 1)
    return T


def lowered(tensor: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Lower the first (upper) index of a tensor with the Gram matrix G."""
    return np.tensordot(G, tensor, axes=(1, 0))
