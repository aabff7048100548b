"""Layer potentials and operator-level diagnostics.

Complements the Galerkin matrices from :mod:`fembem.kernels` with pointwise
evaluation of the single and double layer potentials (used to reconstruct
the exterior field and to verify the jump relations) and with the Calderon
identity residual used as an end-to-end check of all four operators.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from . import reference
from .quadrature import triangle_rule
from .tracespace import mass_matrix

_4PI = 4.0 * np.pi


def greens(x, y, k):
    """Helmholtz kernel G_k(x, y) = exp(ik|x-y|) / (4 pi |x-y|)."""
    r = np.linalg.norm(np.asarray(x) - np.asarray(y), axis=-1)
    return np.exp(1j * k * r) / (_4PI * r)


def _panel_contrib(points, corners, bary_corners, normal, phi_fn, coeffs_loc,
                   k, order, kind):
    """Contribution of one (sub-)panel to the potential at given points."""
    uv, w = triangle_rule(order)
    lam = np.column_stack([1.0 - uv.sum(axis=1), uv])
    yq = lam @ corners                       # (q, 3)
    bary = lam @ bary_corners                # barycentric wrt original panel
    phi = phi_fn(bary[:, 1:])                # (q, nl)
    dens = phi @ coeffs_loc                  # (q,)
    area2 = np.linalg.norm(np.cross(corners[1] - corners[0],
                                    corners[2] - corners[0]))
    diff = points[:, None, :] - yq[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    eikr = np.exp(1j * k * r)
    if kind == "single":
        kern = eikr / (_4PI * r)
    elif kind == "double":
        dgdr = eikr * (1j * k * r - 1.0) / (_4PI * r * r)
        kern = -(diff @ normal) / r * dgdr
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    return area2 * np.einsum("pq,q,q->p", kern, w, dens)


def layer_potential(spaces, which, coeffs, points, k, kind="single",
                    order=6, eta=2.0, max_depth=6):
    """Evaluate a layer potential of a discrete density at off-surface points.

    which selects the density space ('w' or 'z'); kind selects the single
    or double layer potential.  Panels close to an evaluation point are
    recursively quadrisected until the rule is accurate (panel diameter
    below dist/eta) or max_depth is reached.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = spaces.degree if which == "z" else spaces.degree - 1
    elem = spaces.z_elem if which == "z" else spaces.w_elem

    def phi_fn(uv):
        return reference.eval_basis(2, p, uv)

    out = np.zeros(len(points), dtype=complex)
    surf = spaces.surface
    all_corners = surf.corners()
    eye = np.eye(3)
    for t in range(len(surf.triangles)):
        loc = np.asarray(coeffs)[elem[t]]
        if not np.any(loc):
            continue
        normal = surf.normals[t]
        stack = [(all_corners[t], eye, np.arange(len(points)), 0)]
        while stack:
            corners, bcs, idx, depth = stack.pop()
            cent = corners.mean(axis=0)
            diam = 2.0 * np.max(np.linalg.norm(corners - cent, axis=1))
            dist = np.linalg.norm(points[idx] - cent, axis=1)
            near = dist < eta * diam
            far_idx = idx[~near]
            if len(far_idx):
                out[far_idx] += _panel_contrib(
                    points[far_idx], corners, bcs, normal, phi_fn, loc,
                    k, order, kind)
            near_idx = idx[near]
            if len(near_idx):
                if depth >= max_depth:
                    out[near_idx] += _panel_contrib(
                        points[near_idx], corners, bcs, normal, phi_fn, loc,
                        k, order + 4, kind)
                else:
                    m01 = 0.5 * (corners[0] + corners[1])
                    m12 = 0.5 * (corners[1] + corners[2])
                    m02 = 0.5 * (corners[0] + corners[2])
                    b01 = 0.5 * (bcs[0] + bcs[1])
                    b12 = 0.5 * (bcs[1] + bcs[2])
                    b02 = 0.5 * (bcs[0] + bcs[2])
                    subs = (
                        (np.array([corners[0], m01, m02]),
                         np.array([bcs[0], b01, b02])),
                        (np.array([m01, corners[1], m12]),
                         np.array([b01, bcs[1], b12])),
                        (np.array([m02, m12, corners[2]]),
                         np.array([b02, b12, bcs[2]])),
                        (np.array([m01, m12, m02]),
                         np.array([b01, b12, b02])),
                    )
                    for c_sub, b_sub in subs:
                        stack.append((c_sub, b_sub, near_idx, depth + 1))
    return out


def calderon_residual(spaces, ops, psi, phi):
    """Riesz norms of the two interior Calderon identity residuals.

    For an interior Helmholtz solution with Dirichlet trace psi (in Z_h)
    and Neumann trace phi (in W_h):

        r1 = V phi - (1/2 + K) psi        tested against W_h,
        r2 = W psi + (-1/2 + K') phi      tested against Z_h.

    Returns (|r1|, |r2|) measured in the mass-inverse (dual) norms.
    """
    Mwz = mass_matrix(spaces, "w", "z").toarray()
    Mzw = mass_matrix(spaces, "z", "w").toarray()
    Mww = mass_matrix(spaces, "w", "w").toarray()
    Mzz = mass_matrix(spaces, "z", "z").toarray()
    r1 = ops["V_ww"] @ phi - (0.5 * Mwz + ops["K_wz"]) @ psi
    r2 = ops["W_zz"] @ psi + (-0.5 * Mzw + ops["Kp_zw"]) @ phi
    n1 = np.sqrt(abs(np.vdot(r1, sla.solve(Mww, r1))))
    n2 = np.sqrt(abs(np.vdot(r2, sla.solve(Mzz, r2))))
    return n1, n2


def convention_audit(spaces, ops, rtol=1e-3):
    """Cheap sign-convention checks at k = 0; returns a dict of residuals.

    * Galerkin double layer applied to the constant: K_0 1 = -1/2.
    * hypersingular operator annihilates constants: W_0 1 = 0.
    * adjoint identity K'_0 = K_0^T in the (z, w) pairing.
    """
    Mwz = mass_matrix(spaces, "w", "z").toarray()
    one = np.ones(spaces.nz)
    k1 = np.linalg.norm(ops["K_wz"] @ one + 0.5 * (Mwz @ one))
    k1 /= np.linalg.norm(0.5 * (Mwz @ one))
    w1 = np.linalg.norm(ops["W_zz"] @ one) / np.linalg.norm(ops["W_zz"])
    kp = (np.linalg.norm(ops["Kp_zw"] - ops["K_wz"].T)
          / np.linalg.norm(ops["K_wz"]))
    return {"double_layer_constant": k1, "hypersingular_constant": w1,
            "adjoint_transpose": kp, "passed": max(k1, w1, kp) <= rtol}
