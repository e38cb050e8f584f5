"""Periodic Poisson solvers: local discontinuous Galerkin and 1D Raviart-Thomas.

Both return ``(E_h, Phi_h)`` with

    <E_h, w> = -b_h(Phi_h, w)      for all w in W_h
    -b_h^*(E_h, v) = <rho_dev, v>  for all v in V_h
    <Phi_h, 1> = 0

``V_h`` is the zero-mean part of ``U_h^m``. For LDG ``W_h = U_h^m``; for
Raviart-Thomas ``W_h`` is the continuous periodic piecewise ``P_{m+1}`` space,
and ``E_h`` is stored as a degree ``m+1`` :class:`DGField` with continuous
traces.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .dg_space import DGField, jumps, interface_traces, linf_norm
from .errors import InvalidArgument, UndefinedRatio
from .mesh import Mesh1D
from .transport import FLUX_CHOICES, ZeroMeanSolver, assemble_transport, \
    check_zero_mean, constant_vector

__all__ = [
    "POISSON_METHODS",
    "ElectricSolution",
    "LdgPoissonOperator",
    "RtPoissonOperator",
    "assemble_poisson",
    "solve_poisson",
    "solve_poisson_ldg",
    "solve_poisson_rt",
    "electric_linf_ratio",
    "cell_antiderivative",
    "cell_derivative",
    "rt_space_basis",
]

POISSON_METHODS = ("ldg", "rt")


@dataclass
class ElectricSolution:
    E: DGField
    Phi: DGField
    method: str
    residual: float = 0.0

    def energy(self) -> float:
        """``||E_h||^2``, exact in the native space of ``E_h``."""
        return float(np.vdot(self.E.coeffs, self.E.coeffs))


def _to_legendre(coeffs, h):
    nb = coeffs.shape[1]
    return coeffs * np.sqrt((2.0 * np.arange(nb) + 1.0)[None, :] / h[:, None])


def _from_legendre(a, h):
    nb = a.shape[1]
    return a * np.sqrt(h[:, None] / (2.0 * np.arange(nb) + 1.0)[None, :])


def cell_derivative(u: DGField) -> DGField:
    """Exact cellwise derivative, degree ``m-1`` (zero field for ``m = 0``)."""
    mesh, m = u.mesh, u.degree
    if m == 0:
        return DGField(mesh, 0)
    a = _to_legendre(u.coeffs, mesh.h)
    da = npleg.legder(a, axis=1) * (2.0 / mesh.h)[:, None]
    return DGField(mesh, m - 1, _from_legendre(da, mesh.h))


def cell_antiderivative(u: DGField, zero_mean=True) -> DGField:
    """Continuous antiderivative of ``u``, degree ``m+1``.

    Cellwise exact integration, continuity by accumulating cell integrals from
    ``x_{1/2}``. Periodic only when ``<u, 1> = 0``.
    """
    mesh = u.mesh
    a = _to_legendre(u.coeffs, mesh.h)
    ia = npleg.legint(a, lbnd=-1, axis=1) * (0.5 * mesh.h)[:, None]
    cell_int = u.coeffs[:, 0] * np.sqrt(mesh.h)
    offset = np.concatenate([[0.0], np.cumsum(cell_int)[:-1]])
    ia[:, 0] += offset
    G = DGField(mesh, u.degree + 1, _from_legendre(ia, mesh.h))
    if zero_mean:
        G.coeffs[:, 0] -= G.mean_integral() / mesh.length * np.sqrt(mesh.h)
    return G


def rt_space_basis(mesh: Mesh1D, m) -> np.ndarray:
    """Basis of continuous periodic piecewise ``P_{m+1}`` as rows of degree-(m+1) coefficients.

    Vertex hats first, then per-cell bubbles ``P_k - P_{k-2}``, ``k = 2..m+1``.
    """
    nx, nb = mesh.num_cells, m + 2
    rows = []
    for j in range(nx):
        # hat centred at x_{j-1/2}: rises on cell j-1, falls on cell j
        c = np.zeros((nx, nb))
        c[j, :2] = [0.5, -0.5]
        c[(j - 1) % nx, :2] += [0.5, 0.5]
        rows.append(c)
    for j in range(nx):
        for k in range(2, m + 2):
            c = np.zeros((nx, nb))
            c[j, k] = 1.0
            c[j, k - 2] = -1.0
            rows.append(c)
    basis = np.array([_from_legendre(r, mesh.h).ravel() for r in rows])
    return basis


class LdgPoissonOperator:
    """``b_h(Phi, w) = -(sum g_b(Phi)[w] + sum (Phi, d_x w))`` and its alternating partner.

    With matching flux labels these are the transport forms at unit temperature,
    so ``B_h`` and ``B_h^*`` are the ``T0 = 1`` matrices of ``A_h``, ``A_h^*``.
    """

    method = "ldg"

    def __init__(self, mesh, m, flux_choice="minus_plus"):
        if flux_choice not in FLUX_CHOICES:
            raise InvalidArgument(f"ldg_flux must be one of {FLUX_CHOICES}")
        self.mesh, self.degree, self.flux_choice = mesh, int(m), flux_choice
        op = assemble_transport(mesh, m, 1.0, flux_choice)
        self.B = op.A
        self.B_star = op.A_star
        self.one = constant_vector(mesh, m)
        self.solver = ZeroMeanSolver(self.B_star @ self.B, self.one)

    @property
    def field_degree(self):
        return self.degree

    def b(self, phi: DGField, w: DGField) -> float:
        return float(w.vector @ (self.B @ phi.vector))

    def b_star(self, E: DGField, v: DGField) -> float:
        return float(v.vector @ (self.B_star @ E.vector))

    def apply_B_star(self, E: DGField) -> DGField:
        return DGField(self.mesh, self.degree, self.B_star @ E.vector)

    def jump_pairing(self, E: DGField) -> float:
        """``1/2 sum (g_b^* - g_b)(E) [E]``, equal to ``<E, B_h^* E>``."""
        um, up = interface_traces(E)
        g, g_star = (um, up) if self.flux_choice == "minus_plus" else (up, um)
        return 0.5 * float(np.sum((g_star - g) * (up - um)))


class RtPoissonOperator:
    """``b_h(Phi, w) = -sum (Phi, d_x w)``, ``b_h^*(E, v) = -sum (d_x E, v)``, ``E`` continuous."""

    method = "rt"

    def __init__(self, mesh, m):
        self.mesh, self.degree = mesh, int(m)
        self.one = constant_vector(mesh, m)

    @property
    def field_degree(self):
        return self.degree + 1

    def b(self, phi: DGField, w: DGField) -> float:
        return -_inner_mixed(phi, cell_derivative(w))

    def b_star(self, E: DGField, v: DGField) -> float:
        return self.b(v, E)

    def apply_B_star(self, E: DGField) -> DGField:
        """Riesz representative in ``V_h`` of ``v -> b_h^*(E, v)``."""
        dE = cell_derivative(E)
        out = DGField(self.mesh, self.degree)
        k = min(dE.degree, self.degree) + 1
        out.coeffs[:, :k] = -dE.coeffs[:, :k]
        out.coeffs[:, 0] -= out.mean_integral() / self.mesh.length * np.sqrt(self.mesh.h)
        return out

    def continuity_defect(self, E: DGField) -> float:
        return float(np.max(np.abs(jumps(E))))


def assemble_poisson(mesh, m, method="ldg", ldg_flux="minus_plus"):
    if method == "ldg":
        return LdgPoissonOperator(mesh, m, ldg_flux)
    if method == "rt":
        return RtPoissonOperator(mesh, m)
    raise InvalidArgument(f"poisson method must be one of {POISSON_METHODS}")


def _inner_mixed(u: DGField, v: DGField) -> float:
    """L2 inner product of fields of possibly different degree (orthonormal basis)."""
    k = min(u.degree, v.degree) + 1
    return float(np.vdot(u.coeffs[:, :k], v.coeffs[:, :k]))


def _zero_mean_part(rho: DGField, one):
    v = rho.vector
    return v - (v @ one) / (one @ one) * one


def solve_poisson_ldg(op: LdgPoissonOperator, rho_dev: DGField, atol=0.0) -> ElectricSolution:
    """Eliminate ``E_h = -B_h Phi_h`` and solve ``B_h^* B_h Phi_h = rho_dev`` on zero-mean fields."""
    check_zero_mean(rho_dev, atol=atol, what="rho_dev")
    b = _zero_mean_part(rho_dev, op.one)
    phi = op.solver.solve(b)
    E = -(op.B @ phi)
    bn = np.linalg.norm(b)
    res = np.linalg.norm(-(op.B_star @ E) - b) / bn if bn > 0 else 0.0
    mesh, m = op.mesh, op.degree
    return ElectricSolution(DGField(mesh, m, E), DGField(mesh, m, phi), "ldg", float(res))


def solve_poisson_rt(op: RtPoissonOperator, rho_dev: DGField, atol=0.0) -> ElectricSolution:
    """Raviart-Thomas field as the zero-mean continuous antiderivative of ``rho_dev``.

    ``Phi_h = -Pi_h G`` with ``G`` the zero-mean antiderivative of ``E_h``:
    integrating by parts, ``<E_h, w> = <Phi_h, d_x w>`` for every ``w`` in
    ``W_h`` reduces to this, since ``d_x W_h = V_h``.
    """
    check_zero_mean(rho_dev, atol=atol, what="rho_dev")
    mesh, m = op.mesh, op.degree
    rho = DGField(mesh, m, _zero_mean_part(rho_dev, op.one))
    E = cell_antiderivative(rho)
    G = cell_antiderivative(E)
    phi = DGField(mesh, m, -G.coeffs[:, : m + 1])
    phi.coeffs[:, 0] -= phi.mean_integral() / mesh.length * np.sqrt(mesh.h)
    dE = cell_derivative(E)
    rn = rho.norm()
    res = (dE - rho).norm() / rn if rn > 0 else 0.0
    return ElectricSolution(E, phi, "rt", float(res))


def solve_poisson(op, rho_dev: DGField, atol=0.0) -> ElectricSolution:
    if op.method == "ldg":
        return solve_poisson_ldg(op, rho_dev, atol)
    return solve_poisson_rt(op, rho_dev, atol)


def electric_linf_ratio(sol: ElectricSolution, rho_dev: DGField) -> float:
    """``||E_h||_inf / ||rho_dev||_2`` with the sup norm from dense sampling."""
    rn = rho_dev.norm()
    if rn == 0.0:
        raise UndefinedRatio("rho_dev is zero")
    return linf_norm(sol.E) / rn
