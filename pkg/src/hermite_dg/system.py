"""Semi-discrete Hermite/DG right-hand side of the Vlasov-Poisson-Fokker-Planck system.

Unknowns ``D_0..D_NH`` in ``U_h^m`` (closure ``D_{NH+1} = 0``), evolved by

    dD_0/dt = A* D_1
    dD_1/dt = -A D_0 + sqrt(2) A* D_2 - (rho_inf/T0) A Phi
              + Pi(E (D_0 - rho_inf)) / sqrt(T0) - D_1 / tau0
    dD_k/dt = -sqrt(k) A D_{k-1} + sqrt(k+1) A* D_{k+1}
              + sqrt(k/T0) Pi(E D_{k-1}) - k D_k / tau0,     2 <= k <= NH

with ``(E, Phi)`` from the discrete Poisson problem driven by ``D_0 - rho_inf``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dg_space import DGField, default_rule, evaluate, l2_project, reference_basis
from .errors import InvalidArgument
from .mesh import Mesh1D
from .poisson import ElectricSolution, assemble_poisson, solve_poisson
from .transport import assemble_transport

__all__ = [
    "ModelParams",
    "HermiteState",
    "VPFPSystem",
    "equilibrium_state",
    "initial_condition_landau",
    "rhs_nonlinear",
    "rhs_linearized",
    "nonlinear_term",
    "hermite_functions",
    "maxwellian",
    "reconstruct_f",
    "phase_space_grid",
]


@dataclass(frozen=True)
class ModelParams:
    mesh: Mesh1D
    m: int = 1
    NH: int = 16
    T0: float = 1.0
    tau0: float = 10.0
    rho_inf: float = 1.0

    def __post_init__(self):
        for name in ("T0", "tau0", "rho_inf"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.NH < 1:
            raise InvalidArgument("NH must be at least 1")
        if self.m < 0:
            raise InvalidArgument("m must be non-negative")


class HermiteState:
    """Hermite modes ``D_0..D_NH``, stored as one array of shape ``(NH+1, Nx, m+1)``."""

    __slots__ = ("mesh", "degree", "data")

    def __init__(self, mesh, degree, data):
        data = np.asarray(data, dtype=float)
        if data.ndim != 3 or data.shape[1:] != (mesh.num_cells, degree + 1):
            raise InvalidArgument(f"state array has shape {data.shape}")
        self.mesh, self.degree, self.data = mesh, int(degree), data

    @classmethod
    def zeros(cls, mesh, degree, NH):
        return cls(mesh, degree, np.zeros((NH + 1, mesh.num_cells, degree + 1)))

    @classmethod
    def from_modes(cls, modes):
        modes = list(modes)
        mesh, m = modes[0].mesh, modes[0].degree
        for u in modes:
            if u.degree != m or u.mesh.num_cells != mesh.num_cells:
                raise InvalidArgument("all modes must share mesh and degree")
        return cls(mesh, m, np.stack([u.coeffs for u in modes]))

    @property
    def NH(self):
        return self.data.shape[0] - 1

    def mode(self, k) -> DGField:
        """Mode ``k`` as a field viewing the state's storage."""
        return DGField(self.mesh, self.degree, self.data[k])

    def modes(self):
        return [self.mode(k) for k in range(self.NH + 1)]

    def flat(self):
        return self.data.reshape(self.NH + 1, -1)

    def copy(self):
        return HermiteState(self.mesh, self.degree, self.data.copy())

    def norm(self):
        return float(np.linalg.norm(self.data))

    def __add__(self, other):
        return HermiteState(self.mesh, self.degree, self.data + other.data)

    def __sub__(self, other):
        return HermiteState(self.mesh, self.degree, self.data - other.data)

    def __mul__(self, s):
        return HermiteState(self.mesh, self.degree, s * self.data)

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermiteState(NH={self.NH}, Nx={self.mesh.num_cells}, m={self.degree})"


class VPFPSystem:
    """Assembled operators for one ``(params, Poisson method, fluxes)`` combination.

    ``flux`` selects the transport fluxes ``(g_a, g_a*)``; ``ldg_flux`` the LDG
    Poisson fluxes and defaults to the same choice.
    """

    def __init__(self, params: ModelParams, poisson_method="ldg", flux="minus_plus",
                 ldg_flux=None):
        self.params = params
        self.poisson_method = poisson_method
        self.flux = flux
        self.ldg_flux = flux if ldg_flux is None else ldg_flux
        mesh, m = params.mesh, params.m
        self.transport = assemble_transport(mesh, m, params.T0, flux)
        self.poisson = assemble_poisson(mesh, m, poisson_method, self.ldg_flux)
        self.A = self.transport.A
        self.A_star = self.transport.A_star
        self.rule = default_rule(m)
        self._psi = reference_basis(m, self.rule.nodes)
        k = np.arange(params.NH + 1, dtype=float)
        self.collision_rates = k / params.tau0
        self._sqrt_k = np.sqrt(k)
        self._transport_matrix = None

    @property
    def mesh(self):
        return self.params.mesh

    @property
    def n(self):
        return self.transport.size

    def equilibrium_vector(self):
        d = np.zeros(self.n)
        d[:: self.params.m + 1] = self.params.rho_inf * np.sqrt(self.mesh.h)
        return d

    def quasi_neutral_atol(self):
        p = self.params
        return 1e-12 * p.rho_inf * self.mesh.length

    def solve_field(self, D0: DGField) -> ElectricSolution:
        rho = DGField(self.mesh, self.params.m, D0.vector - self.equilibrium_vector())
        return solve_poisson(self.poisson, rho, atol=self.quasi_neutral_atol())

    def transport_terms(self, X):
        """Linear transport part for the flat mode array ``X`` of shape ``(NH+1, n)``."""
        AX = (self.A @ X.T).T
        AsX = (self.A_star @ X.T).T
        out = np.zeros_like(X)
        out[:-1] += self._sqrt_k[1:, None] * AsX[1:]
        out[1:] -= self._sqrt_k[1:, None] * AX[:-1]
        return out

    def transport_matrix(self):
        """Sparse block matrix of :meth:`transport_terms` acting on the stacked modes."""
        if self._transport_matrix is None:
            K = self.params.NH + 1
            s = self._sqrt_k[1:]
            sub = sp.diags(s, -1, shape=(K, K))
            sup = sp.diags(s, 1, shape=(K, K))
            self._transport_matrix = (sp.kron(sup, self.A_star) - sp.kron(sub, self.A)).tocsr()
        return self._transport_matrix

    def project_products(self, E: DGField, X):
        """``Pi_h(E X_k)`` for every row of the mode array ``X`` (shape ``(K, Nx, m+1)``)."""
        h = self.mesh.h
        Eq = E.values(self.rule.nodes)
        Xq = np.einsum("kjb,qb->kjq", X, self._psi) / np.sqrt(h)[None, :, None]
        w = self.rule.weights
        return np.einsum("kjq,qb->kjb", Xq * (Eq * w)[None], self._psi) * \
            (0.5 * np.sqrt(h))[None, :, None]

    def field_terms(self, data, sol: ElectricSolution, nonlinear=True):
        """Field-coupling contributions to ``dD/dt`` given a Poisson solution."""
        p = self.params
        out = np.zeros_like(data)
        out[1] -= (p.rho_inf / p.T0) * (self.A @ sol.Phi.vector).reshape(data.shape[1:])
        if nonlinear:
            X = data[:-1].copy()
            X[0] -= self.equilibrium_vector().reshape(data.shape[1:])
            nl = self.project_products(sol.E, X)
            out[1:] += (self._sqrt_k[1:] / np.sqrt(p.T0))[:, None, None] * nl
        return out

    def rhs(self, state: HermiteState, nonlinear=True, collisions=True):
        if state.NH != self.params.NH or state.degree != self.params.m:
            raise InvalidArgument("state does not match the system's NH/m")
        sol = self.solve_field(state.mode(0))
        data = state.data
        out = self.transport_terms(state.flat()).reshape(data.shape)
        out += self.field_terms(data, sol, nonlinear)
        if collisions:
            out -= self.collision_rates[:, None, None] * data
        return HermiteState(state.mesh, state.degree, out), sol


def equilibrium_state(params: ModelParams) -> HermiteState:
    st = HermiteState.zeros(params.mesh, params.m, params.NH)
    st.data[0, :, 0] = params.rho_inf * np.sqrt(params.mesh.h)
    return st


def initial_condition_landau(params: ModelParams, delta) -> HermiteState:
    """``(1 + delta cos(2 pi x / L)) rho_inf M(v)``: only the ``k = 0`` mode is non-zero."""
    L = params.mesh.length
    st = HermiteState.zeros(params.mesh, params.m, params.NH)
    D0 = l2_project(lambda x: params.rho_inf * (1.0 + delta * np.cos(2 * np.pi * x / L)),
                    params.mesh, params.m)
    st.data[0] = D0.coeffs
    return st


def rhs_nonlinear(state, system: VPFPSystem, collisions=True):
    """``(dD/dt, ElectricSolution)`` of the full nonlinear scheme."""
    return system.rhs(state, nonlinear=True, collisions=collisions)


def rhs_linearized(state, system: VPFPSystem, collisions=True):
    """As :func:`rhs_nonlinear` without the projected ``E_h D`` products."""
    return system.rhs(state, nonlinear=False, collisions=collisions)


def nonlinear_term(E: DGField, D: DGField, system: VPFPSystem) -> DGField:
    """``Pi_h(E D)`` by the system's quadrature (exact for the admissible degrees)."""
    if E.degree > system.poisson.field_degree:
        raise InvalidArgument("electric field degree too high for the quadrature rule")
    out = system.project_products(E, D.coeffs[None])[0]
    return DGField(D.mesh, D.degree, out)


def hermite_functions(NH, xi):
    """Normalized Hermite polynomials ``H_0..H_NH`` at ``xi`` via the three-term recurrence."""
    xi = np.asarray(xi, dtype=float)
    H = np.empty((NH + 1,) + xi.shape)
    H[0] = 1.0
    if NH >= 1:
        H[1] = xi
    for k in range(1, NH):
        H[k + 1] = (xi * H[k] - np.sqrt(k) * H[k - 1]) / np.sqrt(k + 1)
    return H


def maxwellian(v, T0=1.0):
    v = np.asarray(v, dtype=float)
    return np.exp(-v ** 2 / (2 * T0)) / np.sqrt(2 * np.pi * T0)


def reconstruct_f(state: HermiteState, params: ModelParams, x, v):
    """``f_h(x, v) = sum_k D_k(x) H_k(v / sqrt(T0)) M(v)``.

    ``x`` and ``v`` broadcast against each other; pass ``x[:, None]`` and
    ``v[None, :]`` for a phase-space grid.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    xb, vb = np.broadcast_arrays(x, v)
    xu, xinv = np.unique(xb.ravel(), return_inverse=True)
    vu, vinv = np.unique(vb.ravel(), return_inverse=True)
    Dx = np.stack([evaluate(state.mode(k), xu) for k in range(state.NH + 1)])
    Hv = hermite_functions(state.NH, vu / np.sqrt(params.T0)) * maxwellian(vu, params.T0)
    vals = np.einsum("kp,kp->p", Dx[:, xinv], Hv[:, vinv])
    out = vals.reshape(xb.shape)
    return float(out) if out.ndim == 0 else out


def phase_space_grid(state: HermiteState, params: ModelParams, x, v) -> np.ndarray:
    """``f_h`` on the tensor grid ``x`` by ``v``, shape ``(len(x), len(v))``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    Dx = np.stack([evaluate(state.mode(k), x) for k in range(state.NH + 1)])
    Hv = hermite_functions(state.NH, v / np.sqrt(params.T0)) * maxwellian(v, params.T0)
    return Dx.T @ Hv
