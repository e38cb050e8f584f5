"""Functionals monitored along a run: energy, dissipation, modified entropy,
physical invariants and the distances to equilibrium.

All norms are exact: the DG basis is orthonormal and the Hermite functions are
orthonormal in ``L^2(M^{-1})``, so every quantity is a coefficient sum.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, asdict, fields

import numpy as np
import scipy.linalg as sla

from .dg_space import DGField
from .errors import InvalidArgument, InvalidWindow
from .poisson import solve_poisson
from .system import HermiteState, VPFPSystem
from .transport import solve_auxiliary_elliptic

__all__ = [
    "DiagnosticsRecord",
    "CSV_COLUMNS",
    "PhysicalInvariants",
    "energy_functional",
    "dissipation_functional",
    "modified_entropy",
    "entropy_cross_term",
    "physical_invariants",
    "distances",
    "make_record",
    "pairing_energy_derivative",
    "total_energy_rate",
    "momentum_rate",
    "worst_case_entropy_ratio",
    "calibrate_alpha0",
    "random_admissible_state",
    "decay_rate_fit",
    "DecayFit",
    "records_to_csv",
    "summary_json",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy_E: float
    dissipation_I: float
    entropy_H: float
    alpha0: float
    mass_m0: float
    momentum_m1: float
    kinetic_K: float
    total_W: float
    dist_f_finf: float
    dist_rho_rhoinf: float
    dist_f_localmaxwellian: float
    norm_E: float


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


@dataclass(frozen=True)
class PhysicalInvariants:
    m0: float
    m1: float
    K: float
    W: float
    complete: bool = True


def _field_of(E_field):
    return E_field.E if hasattr(E_field, "E") else E_field


def _deviation(state: HermiteState, rho_inf):
    dev = state.data.copy()
    dev[0, :, 0] -= rho_inf * np.sqrt(state.mesh.h)
    return dev


def energy_functional(state: HermiteState, E_field, params) -> float:
    """``(1/2 rho_inf) sum_k ||D_k - D_inf,k||^2 + (1/2 T0) ||E_h||^2``."""
    dev = _deviation(state, params.rho_inf)
    E = _field_of(E_field)
    return float(0.5 * np.sum(dev * dev) / params.rho_inf
                 + 0.5 * np.sum(E.coeffs ** 2) / params.T0)


def dissipation_functional(state: HermiteState, params) -> float:
    """``(1/rho_inf) sum_k k ||D_k - D_inf,k||^2``; only ``k >= 1`` contributes."""
    k = np.arange(state.NH + 1)
    sq = np.sum(state.data ** 2, axis=(1, 2))
    return float(np.sum(k * sq) / params.rho_inf)


def _rho_dev(state, system):
    return DGField(state.mesh, state.degree,
                   state.data[0].reshape(-1) - system.equilibrium_vector())


def entropy_cross_term(state: HermiteState, system: VPFPSystem) -> float:
    """``(1/rho_inf) <D_1, F_h>`` with ``-A_h^* F_h = D_0 - rho_inf``."""
    aux = solve_auxiliary_elliptic(system.transport, _rho_dev(state, system),
                                   atol=system.quasi_neutral_atol())
    return float(np.vdot(state.data[1], aux.F.coeffs) / system.params.rho_inf)


def modified_entropy(state: HermiteState, system: VPFPSystem, alpha0, E_field=None) -> float:
    """``H_h = E_h - (alpha0 / rho_inf) <D_1, F_h>``."""
    if E_field is None:
        E_field = system.solve_field(state.mode(0))
    energy = energy_functional(state, E_field, system.params)
    if alpha0 == 0:
        return energy
    return energy - alpha0 * entropy_cross_term(state, system)


def physical_invariants(state: HermiteState, E_field, params) -> PhysicalInvariants:
    """Mass, momentum, kinetic and total energy.

    ``K = (T0/sqrt 2) <D_2 + D_0/sqrt 2, 1>``; with ``NH < 2`` the ``D_2`` term is
    absent and ``complete`` is False.
    """
    sh = np.sqrt(state.mesh.h)
    m0 = float(state.data[0, :, 0] @ sh)
    m1 = float(math.sqrt(params.T0) * (state.data[1, :, 0] @ sh))
    complete = state.NH >= 2
    d2 = float(state.data[2, :, 0] @ sh) if complete else 0.0
    K = params.T0 / math.sqrt(2.0) * (d2 + m0 / math.sqrt(2.0))
    E = _field_of(E_field)
    W = K + 0.5 * float(np.sum(E.coeffs ** 2))
    return PhysicalInvariants(m0, m1, float(K), float(W), complete)


def distances(state: HermiteState, E_field, params):
    """``(||f - f_inf||, ||rho - rho_inf||, ||f - rho M||, ||E_h||)`` in the ``L^2(f_inf^{-1})`` scaling."""
    dev = _deviation(state, params.rho_inf)
    r = params.rho_inf
    d_f = math.sqrt(float(np.sum(dev * dev)) / r)
    d_rho = math.sqrt(float(np.sum(dev[0] ** 2)) / r)
    d_loc = math.sqrt(float(np.sum(dev[1:] ** 2)) / r)
    E = _field_of(E_field)
    return d_f, d_rho, d_loc, math.sqrt(float(np.sum(E.coeffs ** 2)))


def make_record(t, state: HermiteState, system: VPFPSystem, alpha0=0.0, E_field=None):
    p = system.params
    if E_field is None:
        E_field = system.solve_field(state.mode(0))
    energy = energy_functional(state, E_field, p)
    H = energy if alpha0 == 0 else energy - alpha0 * entropy_cross_term(state, system)
    inv = physical_invariants(state, E_field, p)
    d = distances(state, E_field, p)
    return DiagnosticsRecord(float(t), energy, dissipation_functional(state, p), float(H),
                             float(alpha0), inv.m0, inv.m1, inv.K, inv.W, *d)


def _field_rate(system, dstate):
    """Poisson solution of ``dD_0/dt``: the time derivative of ``(E_h, Phi_h)``."""
    return solve_poisson(system.poisson, dstate.mode(0), atol=system.quasi_neutral_atol())


def pairing_energy_derivative(state: HermiteState, system: VPFPSystem, nonlinear=False):
    """``(dE_h/dt, I_h)`` with the derivative obtained by pairing the RHS.

    ``dE_h/dt = (1/rho_inf) sum <D_k - D_inf,k, dD_k/dt> + (1/T0) <E_h, dE_h/dt>``.
    For the linearized scheme ``dE_h/dt + I_h / tau0 = 0``.
    """
    p = system.params
    d, sol = system.rhs(state, nonlinear=nonlinear)
    dsol = _field_rate(system, d)
    dev = _deviation(state, p.rho_inf)
    rate = float(np.sum(dev * d.data) / p.rho_inf
                 + np.vdot(sol.E.coeffs, dsol.E.coeffs) / p.T0)
    return rate, dissipation_functional(state, p)


def total_energy_rate(state: HermiteState, system: VPFPSystem):
    """``(dW/dt, (2K - T0 m0)/tau0)`` for the nonlinear scheme; their sum vanishes for matched LDG fluxes."""
    p = system.params
    d, sol = system.rhs(state, nonlinear=True)
    dsol = _field_rate(system, d)
    rates = physical_invariants(d, sol, p)
    dK = rates.K
    dW = dK + float(np.vdot(sol.E.coeffs, dsol.E.coeffs))
    inv = physical_invariants(state, sol, p)
    return dW, (2.0 * inv.K - p.T0 * inv.m0) / p.tau0


def momentum_rate(state: HermiteState, system: VPFPSystem):
    """``(dm_1/dt, -m_1/tau0)`` from the nonlinear RHS."""
    p = system.params
    d, sol = system.rhs(state, nonlinear=True)
    dm1 = math.sqrt(p.T0) * float(d.data[1, :, 0] @ np.sqrt(state.mesh.h))
    m1 = math.sqrt(p.T0) * float(state.data[1, :, 0] @ np.sqrt(state.mesh.h))
    return dm1, -m1 / p.tau0


def random_admissible_state(system: VPFPSystem, rng, amplitude=0.1, decay=0.5):
    """Random quasi-neutral state: ``D_0 - rho_inf`` has zero mean, mode ``k`` scaled by ``decay**k``."""
    p = system.params
    st = HermiteState.zeros(p.mesh, p.m, p.NH)
    scale = amplitude * decay ** np.arange(p.NH + 1)
    st.data[:] = rng.standard_normal(st.data.shape) * scale[:, None, None]
    one = system.transport.one
    d0 = st.data[0].reshape(-1)
    d0 -= (d0 @ one) / (one @ one) * one
    st.data[0] = d0.reshape(st.data[0].shape) + system.equilibrium_vector().reshape(st.data[0].shape)
    return st


def _zero_mean_basis(one):
    n = one.size
    q, _ = np.linalg.qr(np.column_stack([one, np.eye(n)[:, : n - 1]]))
    return q[:, 1:n]


def worst_case_entropy_ratio(system: VPFPSystem, max_size=2048):
    """Supremum of ``||F_h|| / (||rho||^2 + (rho_inf/T0) ||E_h||^2)^(1/2)`` over zero-mean ``rho``.

    Returns ``(s, rho)`` with ``rho`` a maximizer. The band of the modified
    entropy holds for every state iff ``alpha0 <= 1 / (2 s)``: choosing
    ``D_1`` parallel to ``F_h`` with matching size saturates the cross term.
    """
    p = system.params
    n = system.n
    if n > max_size:
        raise InvalidArgument(f"dense worst-case analysis limited to {max_size} unknowns")
    Q = _zero_mean_basis(system.transport.one)
    mesh, m = p.mesh, p.m
    F_cols, E_cols = [], []
    for i in range(Q.shape[1]):
        rho = DGField(mesh, m, Q[:, i])
        F_cols.append(solve_auxiliary_elliptic(system.transport, rho, atol=1e-12).F.vector)
        E_cols.append(solve_poisson(system.poisson, rho, atol=1e-12).E.vector)
    MF = np.column_stack(F_cols)
    ME = np.column_stack(E_cols)
    lhs = MF.T @ MF
    rhs = np.eye(Q.shape[1]) + (p.rho_inf / p.T0) * (ME.T @ ME)
    w, v = sla.eigh(lhs, rhs)
    return float(math.sqrt(max(w[-1], 0.0))), Q @ v[:, -1]


def _adversarial_state(system, rho_vec):
    p = system.params
    st = HermiteState.zeros(p.mesh, p.m, p.NH)
    rho = DGField(p.mesh, p.m, rho_vec)
    F = solve_auxiliary_elliptic(system.transport, rho, atol=1e-12).F.vector
    E = solve_poisson(system.poisson, rho, atol=1e-12).E.vector
    a = math.sqrt(rho_vec @ rho_vec + p.rho_inf / p.T0 * (E @ E))
    st.data[0] = (rho_vec + system.equilibrium_vector()).reshape(st.data[0].shape)
    st.data[1] = (a * F / np.linalg.norm(F)).reshape(st.data[1].shape)
    return st


def band_holds(state, system, alpha0, slack=1e-12):
    """``E/2 <= H <= 3E/2`` for one state."""
    sol = system.solve_field(state.mode(0))
    E = energy_functional(state, sol, system.params)
    H = modified_entropy(state, system, alpha0, sol)
    return 0.5 * E - slack * E <= H <= 1.5 * E + slack * E


def calibrate_alpha0(system: VPFPSystem, rng=None, n_states=100, exponents=range(1, 21),
                     adversarial=True):
    """Largest ``alpha0 = 2^-j`` for which the entropy band holds on the sample.

    The sample is ``n_states`` random admissible states plus, when
    ``adversarial`` and the system is small enough, the worst-case state from
    :func:`worst_case_entropy_ratio`, which makes the calibrated value valid
    for every state of this discretization.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    states = [random_admissible_state(system, rng) for _ in range(n_states)]
    if adversarial and system.n <= 2048:
        _, rho = worst_case_entropy_ratio(system)
        states.append(_adversarial_state(system, rho))
    for j in exponents:
        alpha0 = 2.0 ** (-j)
        if all(band_holds(s, system, alpha0) for s in states):
            return alpha0
    raise InvalidArgument("no alpha0 in the sweep satisfies the entropy band")


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    residual: float
    samples: int


def decay_rate_fit(series, window=None) -> DecayFit:
    """Least-squares fit ``log energy_E ~ intercept - rate * t`` over ``window = (t0, t1)``.

    ``series`` is a sequence of :class:`DiagnosticsRecord` or of ``(t, value)`` pairs.
    """
    pts = [(r.t, r.energy_E) if isinstance(r, DiagnosticsRecord) else (float(r[0]), float(r[1]))
           for r in series]
    if window is not None:
        t0, t1 = window
        pts = [(t, e) for t, e in pts if t0 <= t <= t1]
    if len(pts) < 10:
        raise InvalidWindow(f"need at least 10 samples in the window, got {len(pts)}")
    t = np.array([q[0] for q in pts])
    e = np.array([q[1] for q in pts])
    if np.any(~(e > 0)):
        raise InvalidWindow("non-positive energy in the fit window")
    y = np.log(e)
    coef, res, *_ = np.linalg.lstsq(np.column_stack([t, np.ones_like(t)]), y, rcond=None)
    resid = float(np.sqrt(res[0] / len(t))) if res.size else 0.0
    return DecayFit(float(-coef[0]), float(coef[1]), resid, len(t))


def records_to_csv(records, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([repr(float(getattr(r, c))) for c in CSV_COLUMNS])
    return buf.getvalue()


def summary_json(records, fits=None, extra=None) -> str:
    out = {"columns": list(CSV_COLUMNS), "samples": len(records)}
    if records:
        out["first"] = asdict(records[0])
        out["last"] = asdict(records[-1])
    if fits:
        out["fits"] = {k: asdict(v) if isinstance(v, DecayFit) else v for k, v in fits.items()}
    if extra:
        out.update(extra)
    return json.dumps(out, indent=2, sort_keys=True)
