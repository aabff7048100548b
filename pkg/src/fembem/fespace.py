"""Continuous Lagrange finite element spaces on tetrahedral meshes.

Provides the interior discretization pieces of the coupled system: the
stiffness form (A grad u, grad v), the weighted mass form ((k n)^2 u, v)
and the load vector (f, v).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import reference
from .meshes import VolumeMesh
from .quadrature import tet_rule


@dataclass(frozen=True)
class FESpace:
    """Degree-p continuous Lagrange space on a tetrahedral mesh."""

    mesh: VolumeMesh
    degree: int
    ndofs: int = field(init=False)
    element_dofs: np.ndarray = field(init=False)
    dof_keys: list = field(init=False)
    dof_coords: np.ndarray = field(init=False)

    def __post_init__(self):
        if not 1 <= self.degree <= 3:
            raise ValueError(f"degree must be 1, 2 or 3, got {self.degree}")
        n, elem, keys, info = reference.build_dof_map(
            self.mesh.tets, self.degree, dim=3)
        coords = reference.dof_coordinates(
            self.mesh.vertices, self.mesh.tets, info, self.degree)
        elem.flags.writeable = False
        coords.flags.writeable = False
        object.__setattr__(self, "ndofs", n)
        object.__setattr__(self, "element_dofs", elem)
        object.__setattr__(self, "dof_keys", keys)
        object.__setattr__(self, "dof_coords", coords)

    @property
    def nloc(self):
        return self.element_dofs.shape[1]

    def geometry(self):
        """Affine maps per tet: (jacobians (nt,3,3), inv-transpose, |det|)."""
        v = self.mesh.vertices[self.mesh.tets]          # (nt, 4, 3)
        J = np.transpose(v[:, 1:] - v[:, :1], (0, 2, 1))  # columns = edges
        detJ = np.abs(np.linalg.det(J))
        invJT = np.transpose(np.linalg.inv(J), (0, 2, 1))
        return J, invJT, detJ

    def map_points(self, ref_pts):
        """Physical images of reference points in every tet; (nt, q, 3)."""
        v = self.mesh.vertices[self.mesh.tets]
        lam = np.column_stack([1.0 - ref_pts.sum(axis=1), ref_pts])  # (q, 4)
        return np.einsum("qi,tix->tqx", lam, v)

    def interpolate(self, fn):
        """Nodal interpolant of a callable fn(points (n,3)) -> (n,)."""
        return np.asarray(fn(self.dof_coords))


def _coeff_at(coeff, pts):
    """Evaluate a medium coefficient: scalar constant or callable on points."""
    if callable(coeff):
        return np.asarray(coeff(pts))
    return np.full(pts.shape[0], float(coeff))


def assemble_interior(space, wavenumber, diffusion=1.0, refraction=1.0,
                      quad_order=None):
    """Sparse S - M with S = (A grad u, grad v), M = ((k n)^2 u, v).

    diffusion A and refraction n may be scalars or callables on point arrays
    (A scalar-valued; matrix-valued A is supplied as callable returning
    (npts, 3, 3)).  Returns (S, M) as CSR matrices.
    """
    p = space.degree
    order = quad_order if quad_order is not None else 2 * p + 2
    pts, wts = tet_rule(order)
    phi = reference.eval_basis(3, p, pts)            # (q, nl)
    dphi = reference.eval_basis_grad(3, p, pts)      # (q, nl, 3)
    _, invJT, detJ = space.geometry()
    xq = space.map_points(pts)                       # (nt, q, 3)
    nt, q, _ = xq.shape
    nl = space.nloc

    flat = xq.reshape(-1, 3)
    Aval = _coeff_at(diffusion, flat)
    nval = _coeff_at(refraction, flat).reshape(nt, q)

    grad = np.einsum("txy,qly->tqlx", invJT, dphi)   # physical gradients
    if Aval.ndim == 1:
        Agrad = Aval.reshape(nt, q, 1, 1) * grad
    else:
        Agrad = np.einsum("tqxy,tqly->tqlx", Aval.reshape(nt, q, 3, 3), grad)
    wdet = wts[None, :] * detJ[:, None]              # (nt, q)
    S_loc = np.einsum("tq,tqlx,tqmx->tlm", wdet, grad, Agrad)
    mw = wdet * (wavenumber * nval) ** 2
    M_loc = np.einsum("tq,ql,qm->tlm", mw, phi, phi)

    rows = np.repeat(space.element_dofs, nl, axis=1).ravel()
    cols = np.tile(space.element_dofs, (1, nl)).ravel()
    shape = (space.ndofs, space.ndofs)
    S = sp.csr_matrix((S_loc.ravel(), (rows, cols)), shape=shape)
    M = sp.csr_matrix((M_loc.ravel(), (rows, cols)), shape=shape)
    return S, M


def assemble_load(space, f, quad_order=None):
    """Load vector (f, v) for a callable f(points (n,3)) -> (n,)."""
    p = space.degree
    order = quad_order if quad_order is not None else 2 * p + 2
    pts, wts = tet_rule(order)
    phi = reference.eval_basis(3, p, pts)
    _, _, detJ = space.geometry()
    xq = space.map_points(pts)
    nt, q, _ = xq.shape
    fval = np.asarray(f(xq.reshape(-1, 3))).reshape(nt, q)
    loc = np.einsum("tq,q,ql->tl", fval * detJ[:, None], wts, phi)
    b = np.zeros(space.ndofs, dtype=loc.dtype)
    np.add.at(b, space.element_dofs.ravel(), loc.ravel())
    return b
