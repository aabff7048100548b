"""Assembly of the coupled three-field block system.

Unknowns (u, m, uext): the interior FEM field u in V_h, the mortar density
m = dnu + i k u in W_h and the exterior Dirichlet trace uext in Z_h.  The
system reads

    [ A_blk  B1   0  ] [u   ]   [ f  ]
    [ 0      B2   B3 ] [m   ] = [ r_z]
    [ B4     B5   B6 ] [uext]   [ r_w]

with A_blk = S - M + ik R the interior impedance block, B1/B4 the trace
pairings, and B2/B3/B5/B6 built from the boundary operators.  Nonzero
interface jumps (g1, g2) between the manufactured interior and exterior
fields enter the right-hand sides through d = i k g1 + g2 projected onto
W_h; the derivation is documented in docs/jump_corrections.md.

The adjoint operator matrices use the exact Galerkin transpose identities
K'_zw = K_wz^T and K'_zz = K_zz^T; the independently assembled adjoint
matrices exist solely for verification (see fembem.bemops.convention_audit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fespace import FESpace, assemble_interior, assemble_load
from .kernels import assemble_operators
from .meshes import extract_boundary
from .quadrature import triangle_rule
from .tracespace import TraceSpaces, mass_matrix
from . import reference


@dataclass
class CoupledSystem:
    """Assembled blocks, right-hand sides and the spaces they act on."""

    fespace: FESpace
    spaces: TraceSpaces
    trace_idx: np.ndarray
    k: complex
    A_blk: sp.csc_matrix
    B1: sp.csc_matrix
    B2: np.ndarray
    B3: np.ndarray
    B4: sp.csc_matrix
    B5: np.ndarray
    B6: np.ndarray
    rhs_u: np.ndarray
    rhs_z: np.ndarray
    rhs_w: np.ndarray
    ops: Optional[dict] = None

    @property
    def shape(self):
        return (self.fespace.ndofs, self.spaces.nw, self.spaces.nz)

    def matvec(self, u, m, z):
        """Full-system product, used for independent residual checks."""
        return (self.A_blk @ u + self.B1 @ m,
                self.B2 @ m + self.B3 @ z,
                self.B4 @ u + self.B5 @ m + self.B6 @ z)

    def rhs(self):
        return self.rhs_u, self.rhs_z, self.rhs_w

    def dense_matrix(self):
        """Monolithic dense matrix; unknowns (u, m, uext), equation rows
        ordered to match dense_rhs(): interior, z-tested, w-tested."""
        nV, nw, nz = self.shape
        n = nV + nw + nz
        full = np.zeros((n, n), dtype=complex)
        full[:nV, :nV] = self.A_blk.toarray()
        full[:nV, nV:nV + nw] = self.B1.toarray()
        full[nV:nV + nz, nV:nV + nw] = self.B2
        full[nV:nV + nz, nV + nw:] = self.B3
        full[nV + nz:, :nV] = self.B4.toarray()
        full[nV + nz:, nV:nV + nw] = self.B5
        full[nV + nz:, nV + nw:] = self.B6
        return full

    def dense_rhs(self):
        return np.concatenate([self.rhs_u, self.rhs_z, self.rhs_w])


def trace_matrix(spaces, fespace):
    """Sparse restriction Tr: V_h coefficients -> Z_h coefficients."""
    idx = spaces.trace_map(fespace)
    nz = spaces.nz
    return sp.csr_matrix((np.ones(nz), (np.arange(nz), idx)),
                         shape=(nz, fespace.ndofs)), idx


def surface_moment(spaces, which, fn, quad_order=None):
    """Moments <fn, basis> where fn(points, unit normals) -> values."""
    p = spaces.degree
    order = quad_order if quad_order is not None else 2 * p + 2
    pts, wts = triangle_rule(order)
    deg = p if which == "z" else p - 1
    elem = spaces.z_elem if which == "z" else spaces.w_elem
    phi = reference.eval_basis(2, deg, pts)
    corners = spaces.surface.corners()
    lam = np.column_stack([1.0 - pts.sum(axis=1), pts])
    xq = np.einsum("qi,tix->tqx", lam, corners)
    nt, q, _ = xq.shape
    nrm = np.repeat(spaces.surface.normals, q, axis=0)
    fval = np.asarray(fn(xq.reshape(-1, 3), nrm)).reshape(nt, q)
    areas = spaces.surface.areas()
    loc = np.einsum("tq,q,ql->tl", fval, wts, phi) * (2.0 * areas)[:, None]
    ndof = spaces.nz if which == "z" else spaces.nw
    b = np.zeros(ndof, dtype=loc.dtype)
    np.add.at(b, elem.ravel(), loc.ravel())
    return b


def build_system(mesh, case, degree, k=None, far_order=3, near_order=7,
                 sing_order=4, backend=None, threads=1, quad_order=None,
                 keep_ops=False):
    """Assemble the coupled system for a case on a tetrahedral mesh.

    k overrides the case wavenumber (used by the k = 0 energy probe).
    """
    kk = complex(case.k if k is None else k)
    fes = FESpace(mesh, degree)
    surf = extract_boundary(mesh)
    spaces = TraceSpaces(surf, degree)
    Tr, idx = trace_matrix(spaces, fes)

    S, M = assemble_interior(fes, kk.real if kk.imag == 0 else kk,
                             case.diffusion, case.refraction,
                             quad_order=quad_order)
    M_zz = mass_matrix(spaces, "z", "z")
    M_zw = mass_matrix(spaces, "z", "w")
    M_wz = mass_matrix(spaces, "w", "z")
    M_ww = mass_matrix(spaces, "w", "w")

    ops = assemble_operators(spaces, kk, far_order=far_order,
                             near_order=near_order, sing_order=sing_order,
                             backend=backend, threads=threads)
    V_ww, V_wz, V_zw, V_zz = (ops[x] for x in ("V_ww", "V_wz", "V_zw", "V_zz"))
    K_wz, K_zz, W_zz = ops["K_wz"], ops["K_zz"], ops["W_zz"]
    Kp_zw, Kp_zz = K_wz.T.copy(), K_zz.T.copy()

    A_blk = (S - M + 1j * kk * (Tr.T @ (M_zz @ Tr))).astype(complex).tocsc()
    B1 = (-(Tr.T @ M_zw)).astype(complex).tocsc()

    Apm_zw = 0.5 * M_zw.toarray() + Kp_zw + 1j * kk * V_zw
    Apm_zz = 0.5 * M_zz.toarray() + Kp_zz + 1j * kk * V_zz
    Bm_zz = -W_zz - 1j * kk * (0.5 * M_zz.toarray() - K_zz)
    B2 = -Apm_zw
    B3 = Bm_zz + 1j * kk * Apm_zz
    B4 = (M_wz @ Tr).astype(complex).tocsc()
    B5 = V_ww
    B6 = -(0.5 * M_wz.toarray() + K_wz) - 1j * kk * V_wz

    rhs_u = assemble_load(fes, case.f, quad_order=quad_order).astype(complex)

    # interface jump data: d = i k g1 + g2, L2-projected onto W_h
    G1_w = surface_moment(spaces, "w", lambda x, n: case.jump_g1(x),
                          quad_order)
    G2_w = surface_moment(spaces, "w", case.jump_g2, quad_order)
    d_vec = spla.spsolve(M_ww.tocsc(), 1j * kk * G1_w + G2_w)
    rhs_z = B2 @ d_vec
    rhs_w = G1_w + V_ww @ d_vec

    return CoupledSystem(fes, spaces, idx, kk, A_blk, B1, B2, B3, B4, B5, B6,
                         rhs_u, rhs_z, rhs_w, ops=ops if keep_ops else None)


def assemble_T_matrix(system):
    """Dense matrix of the sign-adjusted bilinear form in test order
    (v, lambda, -tilde v); at k = 0 its quadratic form over real coefficient
    triples equals the energy sum used by the identity probe."""
    nV, nw, nz = system.shape
    n = nV + nw + nz
    T = np.zeros((n, n), dtype=complex)
    T[:nV, :nV] = system.A_blk.toarray()
    T[:nV, nV:nV + nw] = system.B1.toarray()
    T[nV:nV + nw, :nV] = system.B4.toarray()
    T[nV:nV + nw, nV:nV + nw] = system.B5
    T[nV:nV + nw, nV + nw:] = system.B6
    T[nV + nw:, nV:nV + nw] = -system.B2
    T[nV + nw:, nV + nw:] = -system.B3
    return T
