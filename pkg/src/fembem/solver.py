"""Solvers for the coupled block system.

Three paths share one contract: a SolutionTriple whose residual is always
recomputed from an independent full-system matrix-vector product, never
taken from the factorization.

  * schur_solve: eliminates the interior field through the sparse impedance
    block and solves the dense reduced system over (m, uext) by LU.
  * direct_solve: monolithic dense LU (oracle path, dimension-capped).
  * gmres_solve: GMRES on the reduced system (defaults tol 1e-8 / 2000
    iterations), cross-checked against LU in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla


class SingularSystemError(RuntimeError):
    """Raised when a factorization meets a numerically singular pivot."""


@dataclass(frozen=True)
class SolutionTriple:
    """Discrete solution (u, m, uext) with solver metadata."""

    u: np.ndarray
    m: np.ndarray
    uext: np.ndarray
    residual: float
    method: str
    iterations: int = 0

    def __post_init__(self):
        if not np.isfinite(self.residual):
            raise ValueError("solver produced a non-finite residual")


def _checked_lu(A, context):
    """Dense LU with explicit singularity detection on the U diagonal."""
    lu, piv = sla.lu_factor(A)
    diag = np.abs(np.diag(lu))
    row_norms = np.maximum(np.abs(A).sum(axis=1), 1e-300)
    bad = diag < 1e-13 * row_norms
    if bad.any():
        worst = (diag / row_norms).min()
        raise SingularSystemError(
            f"{context}: near-singular pivot (min |U_ii|/||row|| = {worst:.2e})")
    return lu, piv


def _residual(system, u, m, z):
    r1, r2, r3 = system.matvec(u, m, z)
    b1, b2, b3 = system.rhs()
    num = np.sqrt(np.linalg.norm(r1 - b1) ** 2 + np.linalg.norm(r2 - b2) ** 2
                  + np.linalg.norm(r3 - b3) ** 2)
    den = np.sqrt(np.linalg.norm(b1) ** 2 + np.linalg.norm(b2) ** 2
                  + np.linalg.norm(b3) ** 2)
    return num / den if den > 0 else num


def _reduced_system(system):
    """Schur elimination of u: returns (R, rhs, lu_A) with unknowns (m, z)."""
    nV, nw, nz = system.shape
    try:
        lu_A = spla.splu(system.A_blk)
    except RuntimeError as exc:  # pragma: no cover - resonances avoided
        raise SingularSystemError(f"interior block factorization: {exc}")
    AinvB1 = lu_A.solve(system.B1.toarray())
    Ainvf = lu_A.solve(system.rhs_u)
    R = np.zeros((nw + nz, nw + nz), dtype=complex)
    R[:nw, :nw] = system.B5 - system.B4 @ AinvB1
    R[:nw, nw:] = system.B6
    R[nw:, :nw] = system.B2
    R[nw:, nw:] = system.B3
    rhs = np.concatenate([system.rhs_w - system.B4 @ Ainvf, system.rhs_z])
    return R, rhs, lu_A, AinvB1, Ainvf


def schur_solve(system):
    """Eliminate u, dense-LU the reduced (m, uext) system, back-substitute."""
    nV, nw, nz = system.shape
    R, rhs, lu_A, AinvB1, Ainvf = _reduced_system(system)
    lu, piv = _checked_lu(R, "reduced boundary system")
    mz = sla.lu_solve((lu, piv), rhs)
    m, z = mz[:nw], mz[nw:]
    u = Ainvf - AinvB1 @ m
    return SolutionTriple(u, m, z, _residual(system, u, m, z), "schur")


def direct_solve(system, cap=20000):
    """Monolithic dense LU of the full block matrix."""
    nV, nw, nz = system.shape
    n = nV + nw + nz
    if n > cap:
        raise ValueError(f"system dimension {n} exceeds direct-solve cap {cap}")
    A = system.dense_matrix()
    lu, piv = _checked_lu(A, "monolithic system")
    x = sla.lu_solve((lu, piv), system.dense_rhs())
    u, m, z = x[:nV], x[nV:nV + nw], x[nV + nw:]
    return SolutionTriple(u, m, z, _residual(system, u, m, z), "direct")


def gmres_solve(system, tol=1e-8, maxit=2000):
    """GMRES on the reduced system; errors out on non-convergence."""
    nV, nw, nz = system.shape
    R, rhs, lu_A, AinvB1, Ainvf = _reduced_system(system)
    count = [0]

    def cb(_):
        count[0] += 1

    mz, info = spla.gmres(R, rhs, rtol=tol, maxiter=maxit, restart=200,
                          callback=cb, callback_type="pr_norm")
    if info != 0:
        res = np.linalg.norm(R @ mz - rhs) / np.linalg.norm(rhs)
        raise RuntimeError(
            f"GMRES did not converge in {maxit} iterations "
            f"(final relative residual {res:.2e})")
    m, z = mz[:nw], mz[nw:]
    u = Ainvf - AinvB1 @ m
    return SolutionTriple(u, m, z, _residual(system, u, m, z), "gmres",
                          iterations=count[0])


SOLVERS = {"schur": schur_solve, "direct": direct_solve, "gmres": gmres_solve}


def solve(system, method="schur", **kwargs):
    if method not in SOLVERS:
        raise ValueError(f"unknown solver {method!r}; expected one of "
                         f"{sorted(SOLVERS)}")
    return SOLVERS[method](system, **kwargs)
