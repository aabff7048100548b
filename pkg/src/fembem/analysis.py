"""Error norms, convergence rates and the k = 0 energy identity probe."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log

import numpy as np

from . import reference
from .quadrature import tet_rule, triangle_rule

ERROR_FIELDS = ("rel_L2_omega", "rel_H1semi_omega",
                "scaled_rel_L2_m", "scaled_rel_L2_uext")


@dataclass(frozen=True)
class ErrorReport:
    """The four displayed relative errors of one solve.

    The mortar error carries a factor h^{1/2} and the exterior-trace error
    a factor h^{-1/2}; both then scale like the corresponding H^{-1/2} and
    H^{1/2} relative errors.
    """

    h: float
    p: int
    k: float
    rel_L2_omega: float
    rel_H1semi_omega: float
    scaled_rel_L2_m: float
    scaled_rel_L2_uext: float
    dofs: tuple
    solver: str = ""
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        for name in ERROR_FIELDS:
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0.0):
                raise ValueError(f"error field {name} is not finite: {v}")


def _relative(err2, ref2):
    """Relative error from squared norms; absolute if the reference field
    is (numerically) zero, as for cases with an identically zero trace."""
    err = np.sqrt(err2)
    ref = np.sqrt(ref2)
    return err / ref if ref > 1e-14 else err


def compute_errors(solution, case, system, quad_order=None):
    """ErrorReport for a SolutionTriple against the case's closed forms.

    Exact-field norms are computed by per-element quadrature of the closed
    forms (order >= 2p + 2), never by interpolation into the discrete space.
    """
    fes, spaces = system.fespace, system.spaces
    p = fes.degree
    order = quad_order if quad_order is not None else 2 * p + 2
    if order < 2 * p + 2:
        raise ValueError("error quadrature order must be >= 2p + 2")

    # volume quantities
    pts, wts = tet_rule(order)
    phi = reference.eval_basis(3, p, pts)
    dphi = reference.eval_basis_grad(3, p, pts)
    _, invJT, detJ = fes.geometry()
    xq = fes.map_points(pts)
    nt, q, _ = xq.shape
    uh = np.einsum("ql,tl->tq", phi, solution.u[fes.element_dofs])
    uex = np.asarray(case.u_int(xq.reshape(-1, 3))).reshape(nt, q)
    grad = np.einsum("txy,qly->tqlx", invJT, dphi)
    guh = np.einsum("tqlx,tl->tqx", grad, solution.u[fes.element_dofs])
    gex = np.asarray(case.grad_u_int(xq.reshape(-1, 3))).reshape(nt, q, 3)
    wdet = wts[None, :] * detJ[:, None]
    l2_err = np.sum(wdet * np.abs(uh - uex) ** 2)
    l2_ref = np.sum(wdet * np.abs(uex) ** 2)
    h1_err = np.sum(wdet * np.sum(np.abs(guh - gex) ** 2, axis=2))
    h1_ref = np.sum(wdet * np.sum(np.abs(gex) ** 2, axis=2))

    # surface quantities
    spts, swts = triangle_rule(order)
    lam = np.column_stack([1.0 - spts.sum(axis=1), spts])
    corners = spaces.surface.corners()
    sq = np.einsum("qi,tix->tqx", lam, corners)
    nts, qs, _ = sq.shape
    areas2 = 2.0 * spaces.surface.areas()
    swq = areas2[:, None] * swts[None, :]
    nrm = np.repeat(spaces.surface.normals, qs, axis=0)

    phi_w = reference.eval_basis(2, p - 1, spts)
    mh = np.einsum("ql,tl->tq", phi_w, solution.m[spaces.w_elem])
    mex = np.asarray(case.mortar_exact(sq.reshape(-1, 3), nrm)).reshape(nts, qs)
    m_err = np.sum(swq * np.abs(mh - mex) ** 2)
    m_ref = np.sum(swq * np.abs(mex) ** 2)

    phi_z = reference.eval_basis(2, p, spts)
    zh = np.einsum("ql,tl->tq", phi_z, solution.uext[spaces.z_elem])
    zex = np.asarray(case.u_ext_trace(sq.reshape(-1, 3))).reshape(nts, qs)
    z_err = np.sum(swq * np.abs(zh - zex) ** 2)
    z_ref = np.sum(swq * np.abs(zex) ** 2)

    from .meshes import mesh_size
    h = mesh_size(fes.mesh)
    return ErrorReport(
        h=h, p=p, k=float(np.real(system.k)),
        rel_L2_omega=_relative(l2_err, l2_ref),
        rel_H1semi_omega=_relative(h1_err, h1_ref),
        scaled_rel_L2_m=np.sqrt(h) * _relative(m_err, m_ref),
        scaled_rel_L2_uext=_relative(z_err, z_ref) / np.sqrt(h),
        dofs=(fes.ndofs, spaces.nw, spaces.nz),
        solver=solution.method, residual=solution.residual,
        iterations=solution.iterations)


def convergence_rates(reports):
    """Pairwise and least-squares rates per error quantity.

    Returns {field: {"pairwise": [...], "lsq": value}}; h must be strictly
    decreasing across the reports.
    """
    if len(reports) < 2:
        raise ValueError("need at least two refinement levels for rates")
    hs = np.array([r.h for r in reports])
    if not np.all(np.diff(hs) < 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    out = {}
    logh = np.log(hs)
    for name in ERROR_FIELDS:
        es = np.array([getattr(r, name) for r in reports])
        pw = [log(es[i] / es[i + 1]) / log(hs[i] / hs[i + 1])
              for i in range(len(es) - 1)]
        slope = np.polyfit(logh, np.log(np.maximum(es, 1e-300)), 1)[0]
        out[name] = {"pairwise": pw, "lsq": float(slope)}
    return out


def energy_identity_probe(T, S, V_ww, W_zz, trials=50, seed=1234):
    """Max relative discrepancy of the k = 0 three-field energy identity.

    For real coefficient triples x = (u, m, z) the quadratic form of the
    sign-adjusted k = 0 system matrix T equals

        x^T T x = u^T S u + m^T V_0 m + z^T W_0 z,

    i.e. the sum of the interior Dirichlet energy and the single-layer and
    hypersingular boundary energies.  For complex triples an imaginary
    cross term remains, so the probe draws real triples and additionally
    checks Re(x^H T x) >= 0 for complex ones.
    """
    if trials <= 0:
        raise ValueError("no trials requested")
    nV = S.shape[0]
    nw = V_ww.shape[0]
    nz = W_zz.shape[0]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(nV)
        m = rng.standard_normal(nw)
        z = rng.standard_normal(nz)
        x = np.concatenate([u, m, z])
        lhs = np.real(x @ (T @ x))
        rhs = np.real(u @ (S @ u) + m @ (V_ww @ m) + z @ (W_zz @ z))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
        xc = x + 1j * rng.standard_normal(len(x))
        if np.real(np.vdot(xc, T @ xc)) < -1e-10 * abs(rhs):
            raise AssertionError("k=0 quadratic form has negative real part")
    return worst
