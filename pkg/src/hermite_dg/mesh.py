"""Periodic one-dimensional meshes of the torus [0, L]."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = ["Mesh1D", "build_uniform_mesh", "build_mesh_from_nodes"]


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Partition ``x_{1/2} < ... < x_{Nx+1/2}`` of a periodic interval.

    Interfaces are indexed by the cell on their right: interface ``j`` is
    ``x_{j-1/2}``, shared by cells ``j-1`` and ``j`` (cell ``-1`` aliases the
    last cell), so there are exactly ``Nx`` interfaces.
    """

    endpoints: np.ndarray
    length: float
    h: np.ndarray = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.endpoints, dtype=float)
        pts.setflags(write=False)
        h = np.diff(pts)
        h.setflags(write=False)
        object.__setattr__(self, "endpoints", pts)
        object.__setattr__(self, "h", h)

    @property
    def num_cells(self) -> int:
        return self.h.size

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.endpoints[:-1] + self.endpoints[1:])

    @property
    def h_max(self) -> float:
        return float(self.h.max())

    @property
    def quasi_uniformity(self) -> float:
        return float(self.h.max() / self.h.min())

    @property
    def interface_h(self) -> np.ndarray:
        """``h_{j-1/2} = min(h_{j-1}, h_j)`` for every interface."""
        return np.minimum(np.roll(self.h, 1), self.h)

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.h, self.h[0], rtol=1e-12, atol=0.0))

    def locate(self, x):
        """Cell index containing each ``x`` in ``[x_{1/2}, x_{1/2} + L)``."""
        x = np.asarray(x, dtype=float)
        lo = self.endpoints[0]
        if np.any(x < lo) or np.any(x >= lo + self.length):
            raise InvalidArgument("point outside the periodic domain")
        idx = np.searchsorted(self.endpoints, x, side="right") - 1
        return np.clip(idx, 0, self.num_cells - 1)

    def refine(self) -> "Mesh1D":
        """Split every cell at its midpoint."""
        pts = np.empty(2 * self.num_cells + 1)
        pts[0::2] = self.endpoints
        pts[1::2] = self.centers
        return Mesh1D(pts, self.length)

    def __repr__(self):
        return (f"Mesh1D(Nx={self.num_cells}, L={self.length:.6g}, "
                f"C_qu={self.quasi_uniformity:.3g})")


def build_uniform_mesh(L, Nx) -> Mesh1D:
    if not L > 0:
        raise InvalidArgument(f"domain length must be positive, got {L}")
    if int(Nx) != Nx or Nx < 2:
        raise InvalidArgument(f"need at least two cells, got Nx={Nx}")
    Nx = int(Nx)
    pts = L * np.arange(Nx + 1) / Nx
    pts[-1] = L
    return Mesh1D(pts, float(L))


def build_mesh_from_nodes(nodes, L) -> Mesh1D:
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 3:
        raise InvalidArgument("need at least three nodes (two cells)")
    if not L > 0:
        raise InvalidArgument(f"domain length must be positive, got {L}")
    if np.any(np.diff(nodes) <= 0):
        raise InvalidArgument("nodes must be strictly increasing")
    span = nodes[-1] - nodes[0]
    if abs(span - L) > 4 * np.finfo(float).eps * max(abs(L), 1.0) * nodes.size:
        raise InvalidArgument(f"nodes span {span} but L={L}")
    return Mesh1D(nodes, float(L))
