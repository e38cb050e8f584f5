import math

import numpy as np
import pytest
import scipy.linalg as sla

from hermite_dg.dg_space import DGField, evaluate, l2_project
from hermite_dg.errors import InvalidArgument
from hermite_dg.mesh import build_mesh_from_nodes, build_uniform_mesh
from hermite_dg.system import (HermiteState, ModelParams, VPFPSystem, equilibrium_state,
                               hermite_functions, initial_condition_landau, maxwellian,
                               nonlinear_term, phase_space_grid, reconstruct_f, rhs_linearized,
                               rhs_nonlinear)
from hermite_dg.diagnostics import random_admissible_state

from helpers import jittered_mesh, rates
from oracles import (MicroInstance, probabilists_hermite, project_product_exact, rt_micro_field,
                     velocity_moments, wave_mode_exact)

H0, H1 = 0.7, 1.9
MICRO = dict(T0=1.3, tau0=2.5, rho_inf=1.4)


def micro_system(method="ldg", flux="minus_plus"):
    mesh = build_mesh_from_nodes([0.0, H0, H0 + H1], H0 + H1)
    params = ModelParams(mesh, m=0, NH=1, **MICRO)
    return VPFPSystem(params, method, flux)


def micro_state(rng, system):
    st = random_admissible_state(system, rng, amplitude=0.3, decay=1.0)
    return st


@pytest.mark.parametrize("flux", ["minus_plus", "plus_minus"])
def test_micro_instance_ldg(rng, flux):
    s = micro_system("ldg", flux)
    mi = MicroInstance(H0, H1, flux=flux, **MICRO)
    tol = 1e-13
    assert np.abs(s.A.toarray() - mi.A).max() <= tol
    assert np.abs(s.A_star.toarray() - mi.A_star).max() <= tol
    assert np.abs(s.poisson.B.toarray() - mi.B).max() <= tol
    assert np.abs(s.poisson.B_star.toarray() - mi.B_star).max() <= tol
    T = s.transport_matrix().toarray()
    assert np.abs(T[:2, 2:] - mi.A_star).max() <= tol
    assert np.abs(T[2:, :2] + mi.A).max() <= tol
    assert np.abs(T[:2, :2]).max() == 0 and np.abs(T[2:, 2:]).max() == 0
    for _ in range(5):
        st = micro_state(rng, s)
        D0, D1 = st.data[0, :, 0], st.data[1, :, 0]
        d, sol = rhs_nonlinear(st, s)
        E, Phi = mi.poisson_ldg(D0 - mi.D_inf0)
        assert np.abs(sol.E.vector - E).max() <= tol
        assert np.abs(sol.Phi.vector - Phi).max() <= tol
        dD0, dD1 = mi.rhs(D0, D1)
        assert np.abs(d.data[0, :, 0] - dD0).max() <= tol
        assert np.abs(d.data[1, :, 0] - dD1).max() <= tol
    # linearized RHS as a 4x4 matrix acting on the deviation from equilibrium;
    # admissible probes are the zero-mean density direction w and unit D_1 bumps
    eq = equilibrium_state(s.params)
    Lm = mi.linear_matrix()
    for probe in (np.r_[mi.w, 0, 0], np.r_[0, 0, 1, 0], np.r_[0, 0, 0, 1]):
        st = eq.copy()
        st.data[0, :, 0] += probe[:2]
        st.data[1, :, 0] += probe[2:]
        d, _ = rhs_linearized(st, s)
        got = np.r_[d.data[0, :, 0], d.data[1, :, 0]]
        assert np.abs(got - Lm @ probe).max() <= tol


def test_micro_instance_rt(rng):
    s = micro_system("rt")
    mi = MicroInstance(H0, H1, **MICRO)
    for _ in range(5):
        st = micro_state(rng, s)
        D0, D1 = st.data[0, :, 0], st.data[1, :, 0]
        rho = D0 - mi.D_inf0
        d, sol = rhs_nonlinear(st, s)
        E, Phi = rt_micro_field(H0, H1, rho)
        assert np.abs(sol.E.coeffs - E).max() <= 1e-13
        assert np.abs(sol.Phi.vector - Phi).max() <= 1e-13
        h = mi.h
        nl = (E[:, 0] / np.sqrt(h)) * (rho / np.sqrt(h)) * np.sqrt(h)
        dD1 = (-mi.A @ D0 - (mi.rho_inf / mi.T0) * (mi.A @ Phi)
               + nl / math.sqrt(mi.T0) - D1 / mi.tau0)
        assert np.abs(d.data[0, :, 0] - mi.A_star @ D1).max() <= 1e-13
        assert np.abs(d.data[1, :, 0] - dD1).max() <= 1e-13


@pytest.mark.parametrize("method", ["ldg", "rt"])
def test_equilibrium_is_stationary(method):
    p = ModelParams(build_uniform_mesh(4 * math.pi, 16), m=1, NH=6, rho_inf=1.0)
    s = VPFPSystem(p, method)
    eq = equilibrium_state(p)
    np.testing.assert_allclose(eq.mode(0).cell_averages(), 1.0)
    for fn in (rhs_nonlinear, rhs_linearized):
        d, sol = fn(eq, s)
        assert d.norm() <= 1e-14 and sol.E.norm() <= 1e-14


def test_landau_initial_condition():
    p = ModelParams(build_uniform_mesh(4 * math.pi, 32), m=1, NH=4, rho_inf=2.0)
    st0 = initial_condition_landau(p, 0.0)
    np.testing.assert_allclose(st0.data, equilibrium_state(p).data, atol=1e-14)
    for delta in (0.05, 0.5):
        st = initial_condition_landau(p, delta)
        x = p.mesh.centers
        assert np.all(np.abs(st.data[1:]) == 0)
        err = np.abs(evaluate(st.mode(0), x) - 2.0 * (1 + delta * np.cos(x / 2))).max()
        assert err < 2.0 * delta * (p.mesh.h[0] / 2) ** 2
        assert st.mode(0).mean_integral() == pytest.approx(2.0 * 4 * math.pi, rel=1e-13)


@pytest.mark.parametrize("method", ["ldg", "rt"])
def test_mass_rhs_vanishes(rng, method):
    mesh = jittered_mesh(rng, 7.0, 20)
    s = VPFPSystem(ModelParams(mesh, m=2, NH=5), method)
    for _ in range(10):
        d, _ = rhs_nonlinear(random_admissible_state(s, rng), s)
        assert abs(d.mode(0).mean_integral()) <= 1e-13 * d.norm()


@pytest.mark.parametrize("method", ["ldg", "rt"])
def test_nonlinear_minus_linearized_is_projected_products(rng, method):
    mesh = jittered_mesh(rng, 5.0, 8)
    p = ModelParams(mesh, m=1, NH=4, T0=1.7, rho_inf=1.2)
    s = VPFPSystem(p, method)
    st = random_admissible_state(s, rng)
    dn, sol = rhs_nonlinear(st, s)
    dl, _ = rhs_linearized(st, s)
    diff = (dn - dl).data
    assert np.abs(diff[0]).max() == 0.0
    dev = st.data.copy()
    dev[0, :, 0] -= p.rho_inf * np.sqrt(mesh.h)
    for k in range(1, p.NH + 1):
        ref = math.sqrt(k / p.T0) * project_product_exact(sol.E.coeffs, dev[k - 1],
                                                          mesh.endpoints, p.m)
        np.testing.assert_allclose(diff[k], ref, atol=1e-12)


def test_nonlinear_term_examples(rng):
    mesh = jittered_mesh(rng, 3.0, 6)
    s = VPFPSystem(ModelParams(mesh, m=1, NH=2), "rt")
    D = DGField(mesh, 1, rng.standard_normal((6, 2)))
    assert nonlinear_term(DGField(mesh, 2), D, s).norm() == 0.0
    Ec = DGField.constant(mesh, 2, 3.0)
    Dc = DGField.constant(mesh, 1, -2.0)
    np.testing.assert_allclose(nonlinear_term(Ec, Dc, s).cell_averages(), -6.0)
    E = DGField(mesh, 2, rng.standard_normal((6, 3)))
    ref = project_product_exact(E.coeffs, D.coeffs, mesh.endpoints, 1)
    np.testing.assert_allclose(nonlinear_term(E, D, s).coeffs, ref, atol=1e-12)
    with pytest.raises(InvalidArgument):
        nonlinear_term(DGField(mesh, 3), D, s)


def test_hermite_functions_match_numpy():
    xi = np.linspace(-5, 5, 41)
    H = hermite_functions(12, xi)
    for k in range(13):
        np.testing.assert_allclose(H[k], probabilists_hermite(k, xi), rtol=1e-10, atol=1e-10)


def test_reconstruction(rng):
    p = ModelParams(build_uniform_mesh(4.0, 8), m=1, NH=6, T0=2.0, rho_inf=1.5)
    eq = equilibrium_state(p)
    assert reconstruct_f(eq, p, 1.3, 0.0) == pytest.approx(1.5 / math.sqrt(2 * math.pi * 2.0))
    v = np.linspace(-6, 6, 25)
    np.testing.assert_allclose(reconstruct_f(eq, p, 0.4, v), 1.5 * maxwellian(v, 2.0), rtol=1e-14)
    # single mode reproduces e_k = H_k(v/sqrt T0) M(v)
    single = HermiteState.zeros(p.mesh, 1, 6)
    single.data[3, :, 0] = np.sqrt(p.mesh.h)
    np.testing.assert_allclose(reconstruct_f(single, p, 2.2, v),
                               probabilists_hermite(3, v / math.sqrt(2.0)) * maxwellian(v, 2.0),
                               atol=1e-14)
    st = HermiteState(p.mesh, 1, rng.standard_normal((7, 8, 2)))
    for x in (0.1, 1.7, 3.9):
        mass, mom, _ = velocity_moments(lambda vv: reconstruct_f(st, p, x, vv), T0=2.0)
        assert mass == pytest.approx(evaluate(st.mode(0), x), abs=1e-12)
        assert mom == pytest.approx(math.sqrt(2.0) * evaluate(st.mode(1), x), abs=1e-12)
    grid = phase_space_grid(st, p, np.array([0.1, 1.7]), v)
    np.testing.assert_allclose(grid[1], reconstruct_f(st, p, 1.7, v), atol=1e-14)
    np.testing.assert_allclose(reconstruct_f(st, p, np.array([[0.1], [1.7]]), v[None, :]), grid,
                               atol=1e-14)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_wave_mode_convergence_order(m):
    """Collisionless, field-free transport of one Fourier mode, integrated exactly in time."""
    # the error against the projected exact solution oscillates in time, so
    # take its maximum over ten sampling times
    L, T0 = 2.0, 1.5
    kappa = 2 * math.pi / L
    errs = []
    for nx in (16, 32, 64, 128):
        mesh = build_uniform_mesh(L, nx)
        s = VPFPSystem(ModelParams(mesh, m=m, NH=1, T0=T0))
        X = np.concatenate([l2_project(lambda x: np.cos(kappa * x), mesh, m).vector,
                            np.zeros(mesh.num_cells * (m + 1))])
        P = sla.expm(0.1 * s.transport_matrix().toarray())
        worst = 0.0
        for n in range(1, 11):
            X = P @ X
            ex = [l2_project(lambda x: wave_mode_exact(x, 0.1 * n, kappa, T0)[i], mesh, m).vector
                  for i in (0, 1)]
            worst = max(worst, np.linalg.norm(X - np.concatenate(ex)))
        errs.append(worst)
    assert math.log2(errs[0] / errs[-1]) / 3 > m + 1 - 0.2


def test_state_validation():
    mesh = build_uniform_mesh(1.0, 4)
    with pytest.raises(InvalidArgument):
        HermiteState(mesh, 1, np.zeros((3, 4, 3)))
    with pytest.raises(InvalidArgument):
        ModelParams(mesh, tau0=0.0)
    s = VPFPSystem(ModelParams(mesh, m=1, NH=3))
    with pytest.raises(InvalidArgument):
        s.rhs(HermiteState.zeros(mesh, 1, 4))
