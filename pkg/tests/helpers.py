import numpy as np

from hermite_dg.mesh import build_mesh_from_nodes


def jittered_mesh(rng, L, nx, amount=0.3):
    nodes = np.linspace(0, L, nx + 1)
    nodes[1:-1] += rng.uniform(-amount, amount, nx - 1) * L / nx
    return build_mesh_from_nodes(nodes, L)


def zero_mean(vec, one):
    return vec - (vec @ one) / (one @ one) * one


def rates(errs):
    errs = np.asarray(errs, dtype=float)
    return np.log2(errs[:-1] / errs[1:])
