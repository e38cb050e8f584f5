"""Discrete transport operators ``A_h``, ``A_h^*`` with alternating fluxes.

``<A_h D, u> = a_h(D, u)`` and ``<D, A_h^* u> = a_h^*(u, D)`` where

    a_h(D, u)   = -sqrt(T0) (sum_j g_a(D)  [u]_{j-1/2} + sum_j (D, d_x u)_{K_j})
    a_h^*(D, u) = +sqrt(T0) (sum_j g_a*(D) [u]_{j-1/2} + sum_j (D, d_x u)_{K_j})

with ``(g_a, g_a*) = (D^-, D^+)`` (``"minus_plus"``) or ``(D^+, D^-)``
(``"plus_minus"``). The two matrices are assembled independently; their
transpose relation is checked by the test suite rather than imposed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dg_space import DGField, endpoint_values, gauss_rule, reference_basis, \
    reference_basis_derivative
from .errors import CompatibilityViolation, InvalidArgument, NumericFailure
from .mesh import Mesh1D

__all__ = [
    "FLUX_CHOICES",
    "TransportOperator",
    "AuxiliaryEllipticSolution",
    "ZeroMeanSolver",
    "assemble_transport",
    "apply_A",
    "apply_A_star",
    "solve_auxiliary_elliptic",
    "constant_vector",
    "check_zero_mean",
]

FLUX_CHOICES = ("minus_plus", "plus_minus")

ZERO_MEAN_RTOL = 1e-10


def constant_vector(mesh: Mesh1D, m) -> np.ndarray:
    """Coefficients of the constant function 1 in ``U_h^m``."""
    one = np.zeros((mesh.num_cells, m + 1))
    one[:, 0] = np.sqrt(mesh.h)
    return one.reshape(-1)


def check_zero_mean(u: DGField, rtol=ZERO_MEAN_RTOL, atol=0.0, what="rhs"):
    mean = u.mean_integral()
    if abs(mean) > rtol * u.norm() + atol:
        raise CompatibilityViolation(
            f"{what} has <{what}, 1> = {mean:.3e} (norm {u.norm():.3e})")
    return mean


def _volume_block(m):
    """``S[i', i] = int psi_i psi_{i'}' dxi`` on the reference cell."""
    rule = gauss_rule(m + 1)
    psi = reference_basis(m, rule.nodes)
    dpsi = reference_basis_derivative(m, rule.nodes)
    return (dpsi * rule.weights[:, None]).T @ psi


def _assemble_form(mesh, m, sign, flux_side):
    """Matrix of ``sign * (sum_j g(D)[u] + sum_j (D, d_x u))`` with rows = test ``u``.

    ``flux_side`` is ``"minus"`` (g(D) = D^-) or ``"plus"`` (g(D) = D^+).
    """
    nx, nb = mesh.num_cells, m + 1
    h = mesh.h
    left, right = endpoint_values(m)
    S = _volume_block(m)

    rows, cols, vals = [], [], []

    # volume term, block diagonal
    cell = np.arange(nx)
    ii, kk = np.meshgrid(np.arange(nb), np.arange(nb), indexing="ij")
    r = cell[:, None, None] * nb + ii[None]
    c = cell[:, None, None] * nb + kk[None]
    rows.append(r.ravel())
    cols.append(c.ravel())
    vals.append((S[None] / h[:, None, None]).ravel())

    # interface x_{j-1/2}: [u] = u^+ (cell j) - u^- (cell j-1)
    j = np.arange(nx)
    jm = (j - 1) % nx
    if flux_side == "minus":
        src, tvec = jm, right[None, :] / np.sqrt(h[jm])[:, None]
    elif flux_side == "plus":
        src, tvec = j, left[None, :] / np.sqrt(h[j])[:, None]
    else:
        raise InvalidArgument(f"unknown flux side {flux_side!r}")
    test_plus = left[None, :] / np.sqrt(h[j])[:, None]
    test_minus = -right[None, :] / np.sqrt(h[jm])[:, None]
    for tcell, tval in ((j, test_plus), (jm, test_minus)):
        r = tcell[:, None, None] * nb + np.arange(nb)[None, :, None]
        c = src[:, None, None] * nb + np.arange(nb)[None, None, :]
        rows.append(np.broadcast_to(r, (nx, nb, nb)).ravel())
        cols.append(np.broadcast_to(c, (nx, nb, nb)).ravel())
        vals.append((tval[:, :, None] * tvec[:, None, :]).ravel())

    n = nx * nb
    mat = sp.coo_matrix(
        (sign * np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


class ZeroMeanSolver:
    """Direct solver for ``M x = b`` with ``M`` symmetric semi-definite, ``ker M = span(one)``.

    One degree of freedom is pinned to remove the kernel; for ``b`` orthogonal
    to ``one`` the dropped equation holds automatically. The result is then
    projected onto the zero-mean subspace.
    """

    def __init__(self, M, one, rtol=1e-10):
        self.M = sp.csc_matrix(M)
        self.one = np.asarray(one, dtype=float)
        self.rtol = rtol
        self.pin = int(np.argmax(np.abs(self.one)))
        keep = np.ones(self.M.shape[0], dtype=bool)
        keep[self.pin] = False
        self._keep = keep
        self._lu = spla.splu(self.M[keep][:, keep].tocsc())

    def _solve_raw(self, b):
        x = np.zeros_like(b)
        x[self._keep] = self._lu.solve(b[self._keep])
        x -= (x @ self.one) / (self.one @ self.one) * self.one
        return x

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros_like(b)
        x = self._solve_raw(b)
        res = np.linalg.norm(self.M @ x - b)
        if res > self.rtol * bnorm:
            x += self._solve_raw(b - self.M @ x)
            res = np.linalg.norm(self.M @ x - b)
            if res > self.rtol * bnorm:
                raise NumericFailure(
                    f"zero-mean solve residual {res / bnorm:.2e} above {self.rtol:.0e}",
                    residual=res / bnorm)
        return x


@dataclass(eq=False)
class TransportOperator:
    mesh: Mesh1D
    degree: int
    T0: float
    flux_choice: str
    A: sp.csr_matrix
    A_star: sp.csr_matrix

    _elliptic: ZeroMeanSolver = None

    @property
    def size(self):
        return self.mesh.num_cells * (self.degree + 1)

    @property
    def one(self):
        return constant_vector(self.mesh, self.degree)

    def elliptic_solver(self) -> ZeroMeanSolver:
        """Cached factorization of ``A_h^* A_h`` on the zero-mean subspace."""
        if self._elliptic is None:
            self._elliptic = ZeroMeanSolver(self.A_star @ self.A, self.one)
        return self._elliptic

    def to_coordinate_text(self, which="A") -> str:
        """Debug dump: one ``row col value`` line per stored entry."""
        mat = (self.A if which == "A" else self.A_star).tocoo()
        lines = [f"# {which} n={mat.shape[0]} flux={self.flux_choice} T0={self.T0!r}"]
        lines += [f"{r} {c} {float(v)!r}" for r, c, v in zip(mat.row, mat.col, mat.data)]
        return "\n".join(lines) + "\n"


@dataclass
class AuxiliaryEllipticSolution:
    F: DGField
    Psi: DGField
    residual: float


def assemble_transport(mesh, m, T0=1.0, flux_choice="minus_plus") -> TransportOperator:
    if flux_choice not in FLUX_CHOICES:
        raise InvalidArgument(f"flux_choice must be one of {FLUX_CHOICES}")
    if not T0 > 0:
        raise InvalidArgument("T0 must be positive")
    if m < 0:
        raise InvalidArgument("degree must be non-negative")
    g, g_star = ("minus", "plus") if flux_choice == "minus_plus" else ("plus", "minus")
    s = np.sqrt(T0)
    A = _assemble_form(mesh, m, -s, g)
    A_star = _assemble_form(mesh, m, s, g_star)
    return TransportOperator(mesh, int(m), float(T0), flux_choice, A, A_star)


def _apply(op, mat, u):
    if not isinstance(u, DGField) or u.degree != op.degree or \
            u.mesh.num_cells != op.mesh.num_cells:
        raise InvalidArgument("field does not match the operator's mesh/degree")
    return DGField(u.mesh, u.degree, mat @ u.vector)


def apply_A(op: TransportOperator, u: DGField) -> DGField:
    return _apply(op, op.A, u)


def apply_A_star(op: TransportOperator, u: DGField) -> DGField:
    return _apply(op, op.A_star, u)


def solve_auxiliary_elliptic(op: TransportOperator, rhs: DGField, atol=0.0):
    """Find zero-mean ``Psi`` with ``A_h^* A_h Psi = rhs`` and return ``F = -A_h Psi``.

    Then ``-A_h^* F = rhs``.
    """
    check_zero_mean(rhs, atol=atol)
    b = rhs.vector - (rhs.vector @ op.one) / (op.one @ op.one) * op.one
    psi = op.elliptic_solver().solve(b)
    F = -(op.A @ psi)
    bn = np.linalg.norm(b)
    res = np.linalg.norm(-(op.A_star @ F) - b) / bn if bn > 0 else 0.0
    return AuxiliaryEllipticSolution(
        DGField(op.mesh, op.degree, F), DGField(op.mesh, op.degree, psi), float(res))
