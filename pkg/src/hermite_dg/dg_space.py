"""Broken polynomial space on a periodic mesh, in an orthonormal Legendre basis.

On cell ``K_j`` the basis is ``phi_{j,i}(x) = sqrt((2i+1)/h_j) P_i(xi)`` with
``xi = 2 (x - x_j) / h_j``, so the global mass matrix is the identity and the
L2 inner product of two fields is the dot product of their coefficients.
"""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import InvalidArgument
from .mesh import Mesh1D, build_mesh_from_nodes

__all__ = [
    "DGField",
    "QuadratureRule",
    "gauss_rule",
    "default_rule",
    "reference_basis",
    "reference_basis_derivative",
    "endpoint_values",
    "l2_project",
    "l2_inner",
    "interface_traces",
    "trace_values",
    "jumps",
    "averages",
    "broken_seminorm",
    "evaluate",
    "sample_points",
    "linf_norm",
    "lp_norm",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1], exact up to degree ``order``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def npts(self) -> int:
        return self.nodes.size


_RULES = {}


def gauss_rule(npts) -> QuadratureRule:
    npts = int(npts)
    if npts < 1:
        raise InvalidArgument("quadrature needs at least one point")
    if npts not in _RULES:
        x, w = npleg.leggauss(npts)
        x.setflags(write=False)
        w.setflags(write=False)
        _RULES[npts] = QuadratureRule(2 * npts - 1, x, w)
    return _RULES[npts]


def default_rule(m) -> QuadratureRule:
    """Rule exact for degree ``3m+3``: enough for every product the scheme forms."""
    return gauss_rule(math.ceil((3 * m + 4) / 2))


def reference_basis(m, xi) -> np.ndarray:
    """``sqrt(2i+1) P_i(xi)`` for ``i = 0..m``, shape ``(len(xi), m+1)``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    vals = npleg.legvander(xi, m)
    return vals * np.sqrt(2.0 * np.arange(m + 1) + 1.0)


def reference_basis_derivative(m, xi) -> np.ndarray:
    """d/dxi of :func:`reference_basis`."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.zeros((xi.size, m + 1))
    for i in range(1, m + 1):
        c = np.zeros(i + 1)
        c[i] = 1.0
        out[:, i] = npleg.legval(xi, npleg.legder(c))
    return out * np.sqrt(2.0 * np.arange(m + 1) + 1.0)


def endpoint_values(m):
    """Reference basis at xi = -1 and xi = +1 (closed form)."""
    i = np.arange(m + 1)
    s = np.sqrt(2.0 * i + 1.0)
    return s * (-1.0) ** i, s


class DGField:
    """Element of the broken space ``U_h^m``: per-cell orthonormal coefficients."""

    __slots__ = ("mesh", "degree", "coeffs")

    def __init__(self, mesh: Mesh1D, degree, coeffs=None):
        degree = int(degree)
        if degree < 0:
            raise InvalidArgument("degree must be non-negative")
        shape = (mesh.num_cells, degree + 1)
        if coeffs is None:
            coeffs = np.zeros(shape)
        else:
            coeffs = np.array(coeffs, dtype=float)
            if coeffs.shape != shape:
                if coeffs.size == np.prod(shape):
                    coeffs = coeffs.reshape(shape)
                else:
                    raise InvalidArgument(
                        f"coefficient array has shape {coeffs.shape}, expected {shape}")
        self.mesh = mesh
        self.degree = degree
        self.coeffs = coeffs

    @classmethod
    def constant(cls, mesh, degree, value):
        u = cls(mesh, degree)
        u.coeffs[:, 0] = value * np.sqrt(mesh.h)
        return u

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def copy(self):
        return DGField(self.mesh, self.degree, self.coeffs.copy())

    def cell_averages(self) -> np.ndarray:
        return self.coeffs[:, 0] / np.sqrt(self.mesh.h)

    def mean_integral(self) -> float:
        """``<u, 1>``."""
        return float(self.coeffs[:, 0] @ np.sqrt(self.mesh.h))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def with_degree(self, degree):
        """Same function viewed in ``U_h^degree`` (requires ``degree >= self.degree``)."""
        if degree < self.degree:
            raise InvalidArgument("cannot embed into a lower degree space")
        c = np.zeros((self.mesh.num_cells, degree + 1))
        c[:, : self.degree + 1] = self.coeffs
        return DGField(self.mesh, degree, c)

    def values(self, xi) -> np.ndarray:
        """Values at reference points ``xi`` in every cell, shape ``(Nx, len(xi))``."""
        return (self.coeffs @ reference_basis(self.degree, xi).T) / np.sqrt(self.mesh.h)[:, None]

    def _check(self, other):
        if not isinstance(other, DGField):
            return NotImplemented
        if other.mesh is not self.mesh and not np.array_equal(
                other.mesh.endpoints, self.mesh.endpoints):
            raise InvalidArgument("fields live on different meshes")
        if other.degree != self.degree:
            raise InvalidArgument(
                f"degree mismatch: {self.degree} vs {other.degree}")
        return other

    def __add__(self, other):
        if np.isscalar(other):
            return self + DGField.constant(self.mesh, self.degree, other)
        self._check(other)
        return DGField(self.mesh, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if np.isscalar(other):
            return self - DGField.constant(self.mesh, self.degree, other)
        self._check(other)
        return DGField(self.mesh, self.degree, self.coeffs - other.coeffs)

    def __neg__(self):
        return DGField(self.mesh, self.degree, -self.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return DGField(self.mesh, self.degree, scalar * self.coeffs)

    __rmul__ = __mul__

    def __repr__(self):
        return f"DGField(Nx={self.mesh.num_cells}, m={self.degree}, |u|={self.norm():.3e})"

    # serialization: (j, i, coefficient) triples with a header carrying Nx, m, L

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# Nx={self.mesh.num_cells} m={self.degree} L={float(self.mesh.length)!r}\n")
        buf.write("# nodes=" + " ".join(repr(float(x)) for x in self.mesh.endpoints) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "i", "coefficient"])
        for j in range(self.mesh.num_cells):
            for i in range(self.degree + 1):
                w.writerow([j, i, repr(float(self.coeffs[j, i]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        header = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        nodes = [float(x) for x in lines[1].split("=", 1)[1].split()]
        mesh = build_mesh_from_nodes(nodes, float(header["L"]))
        u = cls(mesh, int(header["m"]))
        if mesh.num_cells != int(header["Nx"]):
            raise InvalidArgument("header Nx does not match node list")
        for row in csv.DictReader(lines[2:]):
            u.coeffs[int(row["j"]), int(row["i"])] = float(row["coefficient"])
        return u

    def to_json(self) -> str:
        return json.dumps({
            "Nx": self.mesh.num_cells,
            "m": self.degree,
            "L": self.mesh.length,
            "nodes": self.mesh.endpoints.tolist(),
            "coefficients": [[j, i, float(self.coeffs[j, i])]
                             for j in range(self.mesh.num_cells)
                             for i in range(self.degree + 1)],
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        mesh = build_mesh_from_nodes(data["nodes"], data["L"])
        u = cls(mesh, data["m"])
        for j, i, c in data["coefficients"]:
            u.coeffs[j, i] = c
        return u


def l2_project(g, mesh, m, rule=None, excess=None) -> DGField:
    """L2 projection of a vectorized callable ``g`` onto ``U_h^m``.

    ``excess`` is the polynomial degree of ``g`` above ``m`` when ``g`` is a
    polynomial; the rule is then chosen exact for ``2m + excess``. Without it a
    rule of ``m + 12`` points is used.
    """
    if rule is None:
        if excess is not None:
            rule = gauss_rule(math.ceil((2 * m + excess + 1) / 2))
        else:
            rule = gauss_rule(m + 12)
    xq = mesh.centers[:, None] + 0.5 * mesh.h[:, None] * rule.nodes[None, :]
    gq = np.broadcast_to(np.asarray(g(xq), dtype=float), xq.shape)
    basis = reference_basis(m, rule.nodes)
    coeffs = 0.5 * np.sqrt(mesh.h)[:, None] * ((gq * rule.weights) @ basis)
    return DGField(mesh, m, coeffs)


def l2_inner(u: DGField, v: DGField) -> float:
    u._check(v)
    return float(np.vdot(u.coeffs, v.coeffs))


def interface_traces(u: DGField):
    """Arrays ``(u_minus, u_plus)`` at the ``Nx`` interfaces ``x_{j-1/2}``."""
    left, right = endpoint_values(u.degree)
    s = 1.0 / np.sqrt(u.mesh.h)
    u_plus = (u.coeffs @ left) * s          # left end of cell j
    u_right = (u.coeffs @ right) * s        # right end of cell j
    return np.roll(u_right, 1), u_plus


def trace_values(u: DGField, j):
    """``(u^-, u^+)`` at interface ``x_{j-1/2}`` (index taken modulo Nx)."""
    j = int(j) % u.mesh.num_cells
    um, up = interface_traces(u)
    return float(um[j]), float(up[j])


def jumps(u: DGField) -> np.ndarray:
    um, up = interface_traces(u)
    return up - um


def averages(u: DGField) -> np.ndarray:
    um, up = interface_traces(u)
    return 0.5 * (up + um)


def broken_seminorm(u: DGField) -> float:
    """``(sum_j |d_x u|^2_{K_j} + sum_j h_{j-1/2}^{-1} [u]^2)^{1/2}``."""
    m = u.degree
    rule = gauss_rule(m + 1)
    dbasis = reference_basis_derivative(m, rule.nodes)
    # d_x phi = (2/h) psi'(xi) / sqrt(h); integral picks up h/2
    du = (u.coeffs @ dbasis.T) * (2.0 / u.mesh.h ** 1.5)[:, None]
    grad2 = float(np.sum((du ** 2 * rule.weights) * (0.5 * u.mesh.h)[:, None]))
    jump2 = float(np.sum(jumps(u) ** 2 / u.mesh.interface_h))
    return math.sqrt(grad2 + jump2)


def evaluate(u: DGField, x, side="right"):
    """Point values of ``u``.

    At an interface ``side="right"`` returns ``u^+`` (the cell starting at
    ``x``), ``side="left"`` returns ``u^-``.
    """
    mesh = u.mesh
    xa = np.asarray(x, dtype=float)
    lo, hi = mesh.endpoints[0], mesh.endpoints[0] + mesh.length
    if np.any(xa < lo) or np.any(xa >= hi) or not np.all(np.isfinite(xa)):
        raise InvalidArgument("evaluation point outside [x_1/2, x_1/2 + L)")
    flat = xa.reshape(-1)
    if side == "right":
        cell = np.searchsorted(mesh.endpoints, flat, side="right") - 1
    elif side == "left":
        cell = np.searchsorted(mesh.endpoints, flat, side="left") - 1
        cell = np.where(cell < 0, mesh.num_cells - 1, cell)
    else:
        raise InvalidArgument("side must be 'left' or 'right'")
    cell = np.clip(cell, 0, mesh.num_cells - 1)
    xi = 2.0 * (flat - mesh.centers[cell]) / mesh.h[cell]
    if side == "left":
        xi = np.where(flat == lo, 1.0, xi)
    basis = reference_basis(u.degree, xi)
    vals = np.einsum("pi,pi->p", basis, u.coeffs[cell]) / np.sqrt(mesh.h[cell])
    return vals.reshape(xa.shape) if xa.ndim else float(vals[0])


def sample_points(m, npts=None) -> np.ndarray:
    """Chebyshev points plus both endpoints on [-1, 1] (at least ``4(m+2)`` interior)."""
    n = npts if npts is not None else 4 * (m + 2)
    k = np.arange(n)
    cheb = np.cos((2 * k + 1) * np.pi / (2 * n))[::-1]
    return np.concatenate([[-1.0], cheb, [1.0]])


def linf_norm(u: DGField, npts=None) -> float:
    """Max of ``|u|`` over a dense per-cell sampling."""
    return float(np.max(np.abs(u.values(sample_points(u.degree, npts)))))


def lp_norm(u: DGField, p) -> float:
    """L1, L2 or Linf norm; L1 by a high-order Gauss rule, Linf by sampling."""
    if p == 2:
        return u.norm()
    if p == np.inf:
        return linf_norm(u)
    rule = gauss_rule(u.degree + 8)
    vals = np.abs(u.values(rule.nodes)) ** p
    return float(np.sum((vals * rule.weights) * (0.5 * u.mesh.h)[:, None]) ** (1.0 / p))
