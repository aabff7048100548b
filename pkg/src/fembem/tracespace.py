"""Boundary trace spaces for the mortar coupling.

Two surface spaces live on the boundary triangulation:

  * Z_h: continuous Lagrange of degree p (Dirichlet-trace space).  Its dofs
    are keyed by parent-mesh entities so they coincide with boundary dofs of
    the degree-p volume space.
  * W_h: discontinuous Lagrange of degree p - 1 (mortar space).

The module also provides surface mass matrices between the spaces, nodal
interpolation, L2 projection and the trace map Z_h -> V_h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import reference
from .meshes import SurfaceMesh
from .quadrature import triangle_rule


@dataclass(frozen=True)
class TraceSpaces:
    """Paired surface spaces (Z_h, W_h) on a closed boundary mesh."""

    surface: SurfaceMesh
    degree: int
    nz: int = field(init=False)
    nw: int = field(init=False)
    z_elem: np.ndarray = field(init=False)
    w_elem: np.ndarray = field(init=False)
    z_keys: list = field(init=False)
    z_coords: np.ndarray = field(init=False)
    w_coords: np.ndarray = field(init=False)

    def __post_init__(self):
        if not 1 <= self.degree <= 3:
            raise ValueError(f"degree must be 1, 2 or 3, got {self.degree}")
        p = self.degree
        surf = self.surface
        # Z_h keyed by parent (volume) vertex ids for compatibility with V_h.
        parent_cells = surf.parent_vertex[surf.triangles]
        nz, z_elem, z_keys, z_info = reference.build_dof_map(
            parent_cells, p, dim=2)
        # node coordinates from the surface triangles themselves
        z_coords = np.empty((nz, 3))
        for i, (ci, alpha) in enumerate(z_info):
            vs = surf.vertices[surf.triangles[ci]]
            z_coords[i] = np.asarray(alpha, dtype=float) @ vs / p

        # W_h: fully discontinuous degree p - 1
        pw = p - 1
        alphas_w = reference.lattice_multiindices(2, pw)
        nlw = len(alphas_w)
        ntri = len(surf.triangles)
        w_elem = np.arange(ntri * nlw, dtype=np.int64).reshape(ntri, nlw)
        w_coords = np.empty((ntri * nlw, 3))
        centroid_bary = np.full(3, 1.0 / 3.0)
        for ci in range(ntri):
            vs = surf.vertices[surf.triangles[ci]]
            for li, alpha in enumerate(alphas_w):
                bary = (np.asarray(alpha, dtype=float) / pw if pw > 0
                        else centroid_bary)
                w_coords[ci * nlw + li] = bary @ vs

        for a in (z_elem, w_elem, z_coords, w_coords):
            a.flags.writeable = False
        object.__setattr__(self, "nz", nz)
        object.__setattr__(self, "nw", ntri * nlw)
        object.__setattr__(self, "z_elem", z_elem)
        object.__setattr__(self, "w_elem", w_elem)
        object.__setattr__(self, "z_keys", z_keys)
        object.__setattr__(self, "z_coords", z_coords)
        object.__setattr__(self, "w_coords", w_coords)

    # -- geometry ----------------------------------------------------------

    def panel_geometry(self):
        """(corners (nt,3,3), normals (nt,3), areas (nt,))."""
        return (self.surface.corners(), self.surface.normals,
                self.surface.areas())

    def trace_map(self, fespace):
        """Indices into the volume space: vh_index[i] hosts Z_h dof i."""
        lookup = {k: i for i, k in enumerate(fespace.dof_keys)}
        try:
            return np.array([lookup[k] for k in self.z_keys], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(
                "surface space is not a trace of the given volume space"
            ) from exc

    # -- interpolation and projection --------------------------------------

    def interpolate_z(self, fn):
        return np.asarray(fn(self.z_coords))

    def interpolate_w(self, fn):
        return np.asarray(fn(self.w_coords))

    def project_w(self, fn, quad_order=None):
        """L2 projection onto W_h (block-diagonal solve per panel)."""
        rhs = _surface_load(self, "w", fn, quad_order)
        M = mass_matrix(self, "w", "w")
        return sp.linalg.spsolve(M.tocsc(), rhs)

    def project_z(self, fn, quad_order=None):
        rhs = _surface_load(self, "z", fn, quad_order)
        M = mass_matrix(self, "z", "z")
        return sp.linalg.spsolve(M.tocsc(), rhs)


def _space_tables(spaces, which, pts):
    """(element dof array, basis values (q, nl)) for 'z' or 'w'."""
    if which == "z":
        return spaces.z_elem, reference.eval_basis(2, spaces.degree, pts)
    if which == "w":
        return spaces.w_elem, reference.eval_basis(2, spaces.degree - 1, pts)
    raise ValueError(f"unknown surface space {which!r}")


def _ndofs(spaces, which):
    return spaces.nz if which == "z" else spaces.nw


def mass_matrix(spaces, test, trial, quad_order=None):
    """Surface mass matrix M[i, j] = int_Gamma trial_j * test_i ds."""
    p = spaces.degree
    order = quad_order if quad_order is not None else 2 * p + 2
    pts, wts = triangle_rule(order)
    elem_t, phi_t = _space_tables(spaces, test, pts)
    elem_s, phi_s = _space_tables(spaces, trial, pts)
    areas = spaces.surface.areas()
    loc = np.einsum("q,ql,qm->lm", wts, phi_t, phi_s)
    vals = (2.0 * areas)[:, None, None] * loc[None, :, :]
    nl_t, nl_s = phi_t.shape[1], phi_s.shape[1]
    rows = np.repeat(elem_t, nl_s, axis=1).ravel()
    cols = np.tile(elem_s, (1, nl_t)).ravel()
    return sp.csr_matrix((vals.ravel(), (rows, cols)),
                         shape=(_ndofs(spaces, test), _ndofs(spaces, trial)))


def _surface_load(spaces, which, fn, quad_order=None):
    p = spaces.degree
    order = quad_order if quad_order is not None else 2 * p + 2
    pts, wts = triangle_rule(order)
    elem, phi = _space_tables(spaces, which, pts)
    corners = spaces.surface.corners()
    lam = np.column_stack([1.0 - pts.sum(axis=1), pts])       # (q, 3)
    xq = np.einsum("qi,tix->tqx", lam, corners)               # (nt, q, 3)
    fval = np.asarray(fn(xq.reshape(-1, 3))).reshape(xq.shape[:2])
    areas = spaces.surface.areas()
    loc = np.einsum("tq,q,ql->tl", fval, wts, phi) * (2.0 * areas)[:, None]
    b = np.zeros(_ndofs(spaces, which), dtype=loc.dtype)
    np.add.at(b, elem.ravel(), loc.ravel())
    return b


def surface_quad_points(spaces, quad_order):
    """Mapped quadrature points and scaled weights on every panel."""
    pts, wts = triangle_rule(quad_order)
    corners = spaces.surface.corners()
    lam = np.column_stack([1.0 - pts.sum(axis=1), pts])
    xq = np.einsum("qi,tix->tqx", lam, corners)
    wq = (2.0 * spaces.surface.areas())[:, None] * wts[None, :]
    return xq, wq
