import math

import numpy as np
import pytest

from nhgeo.extremal import ExtremalState
from nhgeo.geometry import frame_data
from nhgeo.hamiltonian import (
    CotangentState,
    compare,
    hamilton_field,
    hamiltonian,
    initial_momentum,
    rhs_hamilton,
    run_oracle,
)
from nhgeo.integrate import IntegratorConfig, integrate
from nhgeo.models import free_model, heisenberg

from conftest import ZOO, fd_jacobian, random_points

TIGHT = IntegratorConfig(method="rk45", rel_tol=1e-10, abs_tol=1e-12, t_end=1.0)


def test_hamiltonian_examples():
    G = heisenberg("a")
    assert hamiltonian(CotangentState([0, 0, 0], [1, 2, 3]), G) == 2.5
    assert hamiltonian(CotangentState([0.3, 1, 0], [0, 0, 0]), G) == 0.0
    # p annihilating D at x: p = (x2, 0, 1)·ν
    assert hamiltonian(CotangentState([0.3, 0.7, 0], [0.7 * 2, 0, 2]), G) == pytest.approx(0.0, abs=1e-15)


def test_covector_on_complement_is_a_fixed_point_at_origin():
    d = rhs_hamilton(CotangentState([0, 0, 0], [0, 0, 1]), heisenberg("a"))
    assert np.abs(d.x).max() == 0 and np.abs(d.p).max() == 0


@pytest.mark.parametrize("name", sorted(ZOO))
def test_hamilton_equations_match_finite_differences_of_H(name):
    G = ZOO[name]
    rng = np.random.default_rng(8)
    for x in random_points(G, 3, rng):
        p = rng.normal(size=G.m)
        y = np.concatenate([x, p])
        H = lambda z: np.array([hamiltonian(CotangentState(z[: G.m], z[G.m :]), G)])  # noqa: E731
        grad = fd_jacobian(H, y, 1e-4)[0]
        f = hamilton_field(G)(0.0, y)
        assert np.allclose(f[: G.m], grad[G.m :], atol=1e-8)
        assert np.allclose(f[G.m :], -grad[: G.m], atol=1e-8)


@pytest.mark.parametrize("name", sorted(ZOO))
def test_initial_momentum_pairs_with_frame(name):
    G = ZOO[name]
    rng = np.random.default_rng(2)
    x = random_points(G, 1, rng)[0]
    s = ExtremalState(x, rng.normal(size=G.n), rng.normal(size=G.l))
    p = initial_momentum(s, G)
    data = frame_data(G, x)
    assert np.allclose(p @ data.X, data.G_D @ s.alpha, atol=1e-13)
    assert np.allclose(p @ data.Z, s.nu, atol=1e-13)


def test_energy_conserved_over_long_run():
    G = ZOO["contact5_mixed"]
    x0 = np.array([0.1, -0.2, 0.3, 0.0, 0.1])
    y0 = np.concatenate([x0, [0.5, -0.3, 0.2, 0.8, 1.1]])
    traj = integrate(hamilton_field(G), y0, IntegratorConfig(method="rk45", rel_tol=1e-11, abs_tol=1e-13, t_end=10.0))
    H = [hamiltonian(CotangentState(y[:5], y[5:]), G) for y in traj.step_y]
    assert np.ptp(H) < 1e-9


def test_compare_with_itself_is_zero():
    G = heisenberg("a")
    traj = integrate(hamilton_field(G), [0, 0, 0, 1, 0, 1], TIGHT)
    assert compare(traj, traj, 101, G.m).max_deviation == 0.0
    with pytest.raises(ValueError):
        compare(traj, traj, 1, G.m)


@pytest.mark.parametrize("n", [2, 3])
def test_free_model_zero_nu_gives_straight_lines(n):
    G = free_model(n)
    rng = np.random.default_rng(n)
    s0 = ExtremalState(rng.uniform(-1, 1, G.m), rng.normal(size=n), np.zeros(G.l))
    rep = run_oracle(G, s0, TIGHT)
    assert rep.max_deviation < 1e-9
    ts = rep.comparison.times
    xs = rep.frame.at(ts)[:, :n]
    assert np.abs(xs - (s0.x[:n] + np.outer(ts, s0.alpha))).max() < 1e-12


def test_heisenberg_full_turn_against_oracle():
    cfg = IntegratorConfig(method="rk45", rel_tol=1e-10, abs_tol=1e-12, t_end=2 * math.pi)
    rep = run_oracle(heisenberg("a"), ExtremalState([0, 0, 0], [1, 0], [1]), cfg)
    assert rep.max_deviation < 1e-6
    assert rep.speed_drift < 1e-9 and rep.energy_drift < 1e-9
    d = rep.as_dict()
    assert set(d) == {"max_deviation", "times", "deviations", "speed_drift", "energy_drift"}
