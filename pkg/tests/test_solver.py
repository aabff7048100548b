import numpy as np
import pytest

from fembem.cases import get_case
from fembem.coupling import build_system
from fembem.meshes import cube_mesh
from fembem.solver import (SingularSystemError, direct_solve, gmres_solve,
                           schur_solve, solve)


@pytest.fixture(scope="module")
def system2():
    return build_system(cube_mesh(1.0, 2), get_case("tc1", 1.0), 1)


def test_schur_residual_small(system2):
    sol = schur_solve(system2)
    assert sol.residual < 1e-12
    assert sol.method == "schur"


def test_direct_matches_schur(system2):
    a = schur_solve(system2)
    b = direct_solve(system2)
    for x, y in ((a.u, b.u), (a.m, b.m), (a.uext, b.uext)):
        assert np.abs(x - y).max() < 1e-8 * max(np.abs(y).max(), 1.0)
    assert b.residual < 1e-12


def test_gmres_matches_direct(system2):
    a = direct_solve(system2)
    g = gmres_solve(system2)
    assert g.iterations > 0
    for x, y in ((a.u, g.u), (a.m, g.m), (a.uext, g.uext)):
        assert np.abs(x - y).max() < 1e-6 * max(np.abs(y).max(), 1.0)


def test_zero_rhs_gives_zero_solution(system2):
    import dataclasses
    zsys = dataclasses.replace(
        system2, rhs_u=np.zeros_like(system2.rhs_u),
        rhs_z=np.zeros_like(system2.rhs_z),
        rhs_w=np.zeros_like(system2.rhs_w))
    sol = schur_solve(zsys)
    assert np.abs(sol.u).max() < 1e-12
    assert np.abs(sol.m).max() < 1e-12
    assert np.abs(sol.uext).max() < 1e-12


def test_direct_solve_cap(system2):
    with pytest.raises(ValueError, match="cap"):
        direct_solve(system2, cap=10)


def test_singular_system_detected(system2):
    import dataclasses
    bad = dataclasses.replace(
        system2, B5=np.zeros_like(system2.B5),
        B6=np.zeros_like(system2.B6),
        B4=(0 * system2.B4).tocsc())
    with pytest.raises(SingularSystemError):
        schur_solve(bad)


def test_solver_dispatch(system2):
    assert solve(system2, "direct").method == "direct"
    with pytest.raises(ValueError):
        solve(system2, "cholesky")


def test_gmres_nonconvergence_raises(system2):
    with pytest.raises(RuntimeError, match="GMRES"):
        gmres_solve(system2, tol=1e-30, maxit=5)
