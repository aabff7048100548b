import numpy as np
import pytest

from fembem.analysis import compute_errors
from fembem.cases import get_case, poly_exact, tc1, tc2
from fembem.coupling import build_system
from fembem.meshes import cube_mesh
from fembem.solver import solve


def _pde_residual(case, pts, h=1e-5):
    """f + div(A grad u) + k^2 n u at interior points, by finite differences
    (valid where the diffusion coefficient is locally constant)."""
    lap = -6.0 * case.u_int(pts) / h ** 2
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        lap += (case.u_int(pts + e) + case.u_int(pts - e)) / h ** 2
    A = case.diffusion(pts) if callable(case.diffusion) else case.diffusion
    nn = case.refraction(pts) if callable(case.refraction) else case.refraction
    return case.f(pts) + A * lap + case.k ** 2 * nn * case.u_int(pts)


def test_tc1_satisfies_pde():
    case = tc1(1.5)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.45, 0.45, size=(20, 3))
    res = _pde_residual(case, pts)
    assert np.abs(res).max() < 1e-2 * case.k ** 2   # FD truncation error


def test_tc1_gradient_consistent():
    case = tc1(1.5)
    pts = np.array([[0.1, -0.2, 0.3], [0.0, 0.25, -0.4]])
    h = 1e-6
    g = case.grad_u_int(pts)
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        fd = (case.u_int(pts + e) - case.u_int(pts - e)) / (2 * h)
        assert np.allclose(g[:, d], fd, atol=1e-6)


def test_tc1_exterior_field_radiating():
    case = tc1(1.5)
    pts = np.array([[2.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
    r = np.linalg.norm(pts, axis=1)
    u = case.u_ext(pts)
    assert np.allclose(np.abs(u), np.exp(-np.imag(case.k) * r) / r
                       if np.iscomplexobj(case.k) else 1.0 / r, atol=1e-12)


def test_tc2_coefficient_layout():
    case = tc2()
    inner = np.array([[0.0, 0.0, 0.0], [0.1, -0.1, 0.15]])
    outer = np.array([[0.4, 0.0, 0.0], [0.0, -0.45, 0.3]])
    assert np.allclose(case.diffusion(inner), 2.0)
    assert np.allclose(case.diffusion(outer), 1.0)
    assert case.mesh_divisor == 10
    assert case.k == pytest.approx(np.sqrt(3) * np.pi)


def test_tc2_satisfies_pde_both_regions():
    case = tc2()
    inner = np.array([[0.05, 0.03, -0.04], [0.1, -0.12, 0.08]])
    outer = np.array([[0.35, 0.1, -0.3], [-0.4, 0.42, 0.05]])
    for pts in (inner, outer):
        res = _pde_residual(case, pts, h=1e-5)
        assert np.abs(res).max() < 1e-2


def test_tc2_flux_continuous_across_interface():
    # A grad u . n is continuous because grad u vanishes on the interface
    case = tc2()
    pts = np.array([[0.2, 0.05, -0.1], [-0.2, 0.12, 0.03],
                    [0.07, 0.2, 0.0]])
    g = case.grad_u_int(pts)
    assert np.abs(g).max() < 1e-12


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_poly_exact_end_to_end(degree):
    """A degree p-1 interior polynomial with zero exterior field must be
    reproduced to factorization accuracy by the full coupled solver."""
    case = poly_exact(degree)
    system = build_system(cube_mesh(1.0, 2), case, degree)
    sol = solve(system, "schur")
    assert sol.residual < 1e-12
    rep = compute_errors(sol, case, system)
    assert rep.rel_L2_omega < 1e-10
    assert rep.rel_H1semi_omega < 1e-9
    assert rep.scaled_rel_L2_m < 1e-8
    assert rep.scaled_rel_L2_uext < 1e-9


def test_get_case_dispatch():
    assert get_case("tc1", 3.0).k == pytest.approx(3 * np.sqrt(3) * np.pi)
    assert get_case("tc2").name == "tc2"
    assert get_case("poly-exact", degree=2).name.startswith("poly")
    with pytest.raises(ValueError):
        get_case("nope")
