"""Reference Lagrange elements on simplices and shared dof-numbering logic.

Nodes are the equispaced lattice points of degree p.  Global degrees of
freedom are keyed by mesh entities (vertex / edge / face / cell) with
positions expressed relative to *sorted global vertex indices*, which makes
the numbering orientation-independent and lets volume and surface spaces
agree on shared boundary entities.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np


@lru_cache(maxsize=None)
def lattice_multiindices(dim, p):
    """Barycentric multi-indices (length dim+1, summing to p), fixed order."""
    out = []
    for c in product(range(p + 1), repeat=dim):
        if sum(c) <= p:
            out.append((p - sum(c),) + c)
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_exponents(dim, p):
    out = []
    for c in product(range(p + 1), repeat=dim):
        if sum(c) <= p:
            out.append(c)
    return tuple(out)


def _mono_eval(exponents, pts):
    vals = np.ones((len(pts), len(exponents)))
    for m, e in enumerate(exponents):
        for d, a in enumerate(e):
            if a:
                vals[:, m] *= pts[:, d] ** a
    return vals


@lru_cache(maxsize=None)
def lagrange_coefficients(dim, p):
    """Coefficient matrix C with basis_j(x) = sum_m C[m, j] * mono_m(x)."""
    alphas = lattice_multiindices(dim, p)
    nodes = np.array([a[1:] for a in alphas], dtype=float) / p if p > 0 else \
        np.zeros((1, dim))
    V = _mono_eval(monomial_exponents(dim, p), nodes)
    return np.linalg.inv(V)


def eval_basis(dim, p, pts):
    """Values of all basis functions at pts; shape (npts, nbasis)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return _mono_eval(monomial_exponents(dim, p), pts) @ lagrange_coefficients(dim, p)


def eval_basis_grad(dim, p, pts):
    """Reference gradients; shape (npts, nbasis, dim)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    exps = monomial_exponents(dim, p)
    C = lagrange_coefficients(dim, p)
    out = np.empty((len(pts), C.shape[1], dim))
    for d in range(dim):
        dm = np.zeros((len(pts), len(exps)))
        for m, e in enumerate(exps):
            if e[d] == 0:
                continue
            val = e[d] * np.ones(len(pts))
            for dd, a in enumerate(e):
                a_eff = a - 1 if dd == d else a
                if a_eff:
                    val = val * pts[:, dd] ** a_eff
            dm[:, m] = val
        out[:, :, d] = dm @ C
    return out


def dof_key(alpha, cell_vertices, cell_index, p):
    """Entity key of the local lattice node with barycentric index alpha.

    cell_vertices are the *global* vertex ids of the cell, in local order.
    """
    support = [i for i, a in enumerate(alpha) if a > 0]
    gv = [cell_vertices[i] for i in support]
    if len(support) == 1:
        return ("v", gv[0])
    if len(support) == 2:
        pair = sorted(zip(gv, (alpha[i] for i in support)))
        # position: weight on the larger global vertex id
        return ("e", (pair[0][0], pair[1][0]), pair[1][1])
    if len(support) == 3 and len(alpha) == 4 or (len(support) == 3 and len(alpha) == 3 and min(alpha) > 0):
        trip = sorted(zip(gv, (alpha[i] for i in support)))
        return ("f", tuple(g for g, _ in trip), (trip[1][1], trip[2][1]))
    # cell-interior node
    return ("c", cell_index, alpha)


def build_dof_map(cells, p, dim):
    """Continuous Lagrange dof numbering over simplicial cells.

    cells: (ncells, dim+1) global vertex indices.
    Returns (ndofs, element_dofs (ncells, nloc), keys list, node info list)
    where node info is (cell index, alpha) for reconstructing coordinates.
    """
    alphas = lattice_multiindices(dim, p)
    keys = {}
    info = []
    elem = np.empty((len(cells), len(alphas)), dtype=np.int64)
    for ci, cell in enumerate(cells):
        cell = tuple(int(v) for v in cell)
        for li, alpha in enumerate(alphas):
            k = dof_key(alpha, cell, ci, p)
            if k not in keys:
                keys[k] = len(keys)
                info.append((ci, alpha))
            elem[ci, li] = keys[k]
    key_list = [None] * len(keys)
    for k, i in keys.items():
        key_list[i] = k
    return len(keys), elem, key_list, info


def dof_coordinates(vertices, cells, info, p):
    """Physical coordinates of dofs from (cell, alpha) info."""
    out = np.empty((len(info), vertices.shape[1]))
    for i, (ci, alpha) in enumerate(info):
        vs = vertices[np.asarray(cells[ci])]
        out[i] = np.asarray(alpha, dtype=float) @ vs / p
    return out
