"""Shared geometries and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from nhgeo.geometry import FramedGeometry
from nhgeo.models import contact5, free_model, heisenberg


def skew4() -> FramedGeometry:
    """4D geometry with two complement fields, [X, Z] ≠ 0, [Z1, Z2] ∈ D and variable Gram matrices."""
    return FramedGeometry.from_sources(
        X=[[1, 0, "-x2", 0], [0, 1, "x1", "x1^2/2"]],
        Z=[["0.1*x4", 0, 1, 0], [0, 0, "0.2*x1", 1]],
        gram_D=[["1 + 0.2*x1^2", "0.1*x3"], ["0.1*x3", "1 + 0.1*sin(x4)"]],
        gram_Q=[["1", 0], [0, "2 + 0.3*cos(x2)"]],
        name="skew4",
    )


def vargram_heisenberg() -> FramedGeometry:
    """Heisenberg frame A with non-orthonormal, point-dependent Gram matrices."""
    return FramedGeometry.from_sources(
        X=[[1, 0, "-x2"], [0, 1, 0]],
        Z=[[0, 0, 1]],
        gram_D=[["1 + x1^2/4", "0.2*x3"], ["0.2*x3", "1"]],
        gram_Q=[["1 + x2^2"]],
        name="vargram_heisenberg",
    )


def zoo() -> dict[str, FramedGeometry]:
    return {
        "heisenberg_a": heisenberg("a"),
        "heisenberg_b": heisenberg("b"),
        "free_2": free_model(2),
        "free_3": free_model(3),
        "contact5_one": contact5("1"),
        "contact5_quad": contact5("1 + x1^2"),
        "contact5_expz": contact5("exp(x5)"),
        "contact5_mixed": contact5("2 + sin(x1)*cos(x5) + x2*x4/4"),
        "skew4": skew4(),
        "vargram_heisenberg": vargram_heisenberg(),
    }


ZOO = zoo()


def random_points(G: FramedGeometry, count: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(count, G.m))


def fd_jacobian(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Fourth-order central difference Jacobian, J[i, j] = ∂fn_i/∂x_j."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((8 * (fn(x + e) - fn(x - e)) - (fn(x + 2 * e) - fn(x - 2 * e))) / (12 * h))
    return np.stack(cols, axis=-1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(ZOO))
def geometry(request):
    return ZOO[request.param]
