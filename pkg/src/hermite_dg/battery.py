"""Randomized invariant battery: every exact identity and inequality of the
semi-discrete scheme, evaluated on random meshes, degrees, fluxes and states.

Each suite returns a :class:`SuiteResult`; the battery passes iff all do.
"""

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .dg_space import DGField, interface_traces, jumps
from .diagnostics import (band_holds, calibrate_alpha0, momentum_rate,
                          pairing_energy_derivative, random_admissible_state,
                          total_energy_rate)
from .mesh import build_mesh_from_nodes
from .poisson import LdgPoissonOperator, cell_derivative, rt_space_basis
from .system import ModelParams, VPFPSystem
from .transport import FLUX_CHOICES, assemble_transport, constant_vector

__all__ = ["SuiteResult", "random_mesh", "run_battery", "SUITES", "verdict_table"]

TOL = 1e-11


@dataclass
class SuiteResult:
    name: str
    cases: int
    worst: float
    tol: float
    passed: bool
    note: str = ""

    def __post_init__(self):
        self.worst, self.tol = float(self.worst), float(self.tol)
        self.cases, self.passed = int(self.cases), bool(self.passed)


def random_mesh(rng, nx, L=None, jitter=0.3):
    L = float(rng.uniform(1.0, 15.0)) if L is None else L
    h = L / nx
    nodes = np.arange(nx + 1) * h
    nodes[1:-1] += rng.uniform(-jitter, jitter, nx - 1) * h
    return build_mesh_from_nodes(nodes, L)


def _cases(rng, size, bat):
    for _ in range(size):
        nx = int(rng.integers(bat.nx_min, bat.nx_max + 1))
        m = int(rng.choice(bat.degrees))
        flux = FLUX_CHOICES[int(rng.integers(2))]
        yield random_mesh(rng, nx), m, flux


def _rel(a, scale):
    return abs(a) / scale if scale > 0 else abs(a)


def suite_transport(rng, size, bat):
    """Duality ``A* = A^T`` and the kernel ``A 1 = A* 1 = 0``."""
    worst = 0.0
    for mesh, m, flux in _cases(rng, size, bat):
        op = assemble_transport(mesh, m, float(rng.uniform(0.5, 2.0)), flux)
        u = rng.standard_normal(op.size)
        v = rng.standard_normal(op.size)
        # a_h(u, v) = <A u, v> against a_h*(v, u) = <u, A* v>
        lhs, rhs = v @ (op.A @ u), u @ (op.A_star @ v)
        scale = np.linalg.norm(op.A @ u) * np.linalg.norm(v)
        one = constant_vector(mesh, m)
        nA = abs(op.A).sum(axis=1).max()
        worst = max(worst, _rel(lhs - rhs, scale),
                    np.linalg.norm(op.A @ one) / (nA * np.linalg.norm(one)),
                    np.linalg.norm(op.A_star @ one) / (nA * np.linalg.norm(one)))
    return SuiteResult("transport_duality_kernel", size, worst, TOL, worst <= TOL)


def suite_ldg_identities(rng, size, bat):
    """``b_h``/``b_h^*`` duality and ``<E, B* E> = 1/2 sum (g* - g)(E)[E]``."""
    worst = 0.0
    for mesh, m, flux in _cases(rng, size, bat):
        op = LdgPoissonOperator(mesh, m, flux)
        phi = DGField(mesh, m, rng.standard_normal(op.one.size))
        w = DGField(mesh, m, rng.standard_normal(op.one.size))
        lhs, rhs = op.b(phi, w), op.b_star(w, phi)
        scale = np.linalg.norm(op.B @ phi.vector) * w.norm()
        um, up = interface_traces(w)
        jmp = up - um
        expected = 0.5 * np.sum(jmp ** 2) * (1.0 if flux == "minus_plus" else -1.0)
        pair = float(w.vector @ (op.B_star @ w.vector))
        jscale = max(np.sum(jmp ** 2), np.linalg.norm(op.B_star @ w.vector) * w.norm())
        worst = max(worst, _rel(lhs - rhs, scale),
                    _rel(pair - expected, jscale))
    return SuiteResult("ldg_duality_jump_identity", size, worst, TOL, worst <= TOL)


def suite_rt_identity(rng, size, bat):
    """For continuous ``E``, the alternating-flux form tested on ``V_h`` equals ``-(d_x E, v)``."""
    worst = 0.0
    for mesh, m, flux in _cases(rng, size, bat):
        basis = rt_space_basis(mesh, m)
        E = DGField(mesh, m + 1, rng.standard_normal(basis.shape[0]) @ basis)
        cont = float(np.max(np.abs(jumps(E)))) / max(E.norm(), 1e-300)
        op = assemble_transport(mesh, m + 1, 1.0, flux)
        # rows of A* are the test functions; keep the degree <= m ones
        form = (op.A_star @ E.vector).reshape(mesh.num_cells, m + 2)[:, : m + 1]
        dE = cell_derivative(E).coeffs[:, : m + 1]
        err = np.linalg.norm(form + dE) / max(np.linalg.norm(dE), 1e-300)
        worst = max(worst, err, cont)
    return SuiteResult("rt_field_identity", size, worst, TOL, worst <= TOL)


def _system(rng, bat, method, flux=None, ldg_flux=None):
    nx = int(rng.integers(bat.nx_min, bat.nx_max + 1))
    m = int(rng.choice(bat.degrees))
    flux = flux or FLUX_CHOICES[int(rng.integers(2))]
    params = ModelParams(random_mesh(rng, nx), m=m, NH=bat.NH,
                         T0=float(rng.uniform(0.5, 2.0)), tau0=float(10 ** rng.uniform(-1, 2)),
                         rho_inf=float(rng.uniform(0.5, 2.0)))
    return VPFPSystem(params, method, flux, ldg_flux)


def suite_linearized_energy(rng, size, bat):
    worst = 0.0
    for i in range(size):
        s = _system(rng, bat, ("ldg", "rt")[i % 2])
        st = random_admissible_state(s, rng)
        rate, I = pairing_energy_derivative(st, s, nonlinear=False)
        worst = max(worst, _rel(rate + I / s.params.tau0, I / s.params.tau0))
    return SuiteResult("linearized_energy_law", size, worst, TOL, worst <= TOL)


def suite_mass(rng, size, bat):
    worst = 0.0
    for i in range(size):
        s = _system(rng, bat, ("ldg", "rt")[i % 2])
        st = random_admissible_state(s, rng)
        d, _ = s.rhs(st)
        one = s.transport.one
        worst = max(worst, _rel(d.data[0].reshape(-1) @ one,
                                np.linalg.norm(d.data[0]) * np.linalg.norm(one)))
    return SuiteResult("mass_conservation", size, worst, TOL, worst <= TOL)


def suite_rt_momentum(rng, size, bat):
    worst = 0.0
    for _ in range(size):
        s = _system(rng, bat, "rt")
        st = random_admissible_state(s, rng)
        dm1, ref = momentum_rate(st, s)
        d, _ = s.rhs(st)
        scale = math.sqrt(s.params.T0) * np.linalg.norm(d.data[1]) * math.sqrt(s.mesh.length)
        worst = max(worst, _rel(dm1 - ref, scale))
    return SuiteResult("rt_momentum_identity", size, worst, TOL, worst <= TOL)


def suite_ldg_momentum(rng, size, bat):
    """``dm_1/dt <= -m_1 / tau0`` with ``g_b(Phi) = Phi^-``; ``worst`` is the largest excess."""
    worst = -np.inf
    for _ in range(size):
        s = _system(rng, bat, "ldg", ldg_flux="minus_plus")
        st = random_admissible_state(s, rng)
        dm1, ref = momentum_rate(st, s)
        worst = max(worst, dm1 - ref)
    worst = 0.0 if size == 0 else float(worst)
    return SuiteResult("ldg_momentum_inequality", size, worst, 1e-12, worst <= 1e-12)


def _energy_defect(s, st):
    dW, diss = total_energy_rate(st, s)
    scale = max(abs(diss), abs(dW), 1e-300)
    return _rel(dW + diss, scale)


def suite_ldg_energy(rng, size, bat):
    worst = 0.0
    for _ in range(size):
        s = _system(rng, bat, "ldg")
        worst = max(worst, _energy_defect(s, random_admissible_state(s, rng)))
    return SuiteResult("ldg_total_energy_law", size, worst, TOL, worst <= TOL)


def suite_energy_negative_control(rng, size, bat):
    """Mismatched transport/LDG fluxes must violate the energy law; ``worst`` is the smallest defect."""
    best = np.inf
    for _ in range(size):
        s = _system(rng, bat, "ldg", flux="minus_plus", ldg_flux="plus_minus")
        best = min(best, _energy_defect(s, random_admissible_state(s, rng)))
    best = 1.0 if size == 0 else float(best)
    return SuiteResult("energy_law_negative_control", size, best, 1e-6, best > 1e-6,
                       "passes when the identity is violated")


def suite_entropy_band(rng, size, bat):
    """Calibrate ``alpha0`` per system and check ``E/2 <= H <= 3E/2`` on fresh random states."""
    failures = 0
    checked = 0
    for i in range(min(size, 3)):
        s = _system(rng, bat, ("ldg", "rt")[i % 2])
        alpha0 = calibrate_alpha0(s, rng, n_states=20)
        for _ in range(max(size, 1)):
            checked += 1
            failures += not band_holds(random_admissible_state(s, rng), s, alpha0)
    return SuiteResult("entropy_equivalence", checked, float(failures), 0.0, failures == 0)


SUITES = (suite_transport, suite_ldg_identities, suite_rt_identity, suite_linearized_energy,
          suite_mass, suite_rt_momentum, suite_ldg_momentum, suite_ldg_energy,
          suite_energy_negative_control, suite_entropy_band)


def run_battery(bat, seed=0):
    rng = np.random.default_rng(seed)
    return [suite(rng, bat.size, bat) for suite in SUITES]


def verdict_table(results) -> str:
    rows = [f"{'suite':32s} {'cases':>6s} {'worst':>12s} {'tol':>9s}  verdict"]
    for r in results:
        rows.append(f"{r.name:32s} {r.cases:6d} {r.worst:12.3e} {r.tol:9.1e}  "
                    f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(rows)


def battery_json(results, fingerprint=None) -> str:
    return json.dumps({"fingerprint": fingerprint, "passed": all(r.passed for r in results),
                       "suites": [asdict(r) for r in results]}, indent=2, sort_keys=True)
