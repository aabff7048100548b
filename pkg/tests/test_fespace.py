import numpy as np
import pytest

from fembem.fespace import FESpace, assemble_interior, assemble_load
from fembem.meshes import cube_mesh


@pytest.fixture(scope="module")
def fes2():
    return FESpace(cube_mesh(1.0, 2), 1)


def test_interpolation_of_affine_is_exact(fes2):
    coeffs = fes2.interpolate(lambda x: 2 * x[:, 0] - x[:, 1] + 0.5)
    pts = np.array([[0.25, 0.5, 0.1], [0.1, 0.2, 0.3]])
    xq = fes2.map_points(pts)
    from fembem import reference
    phi = reference.eval_basis(3, 1, pts)
    vals = np.einsum("ql,tl->tq", phi, coeffs[fes2.element_dofs])
    exact = 2 * xq[..., 0] - xq[..., 1] + 0.5
    assert np.allclose(vals, exact, atol=1e-12)


def test_stiffness_energy_of_linear(fes2):
    S, _ = assemble_interior(fes2, 0.0, 1.0, 1.0)
    u = fes2.interpolate(lambda x: x[:, 0])
    # int |grad x|^2 over the unit cube = 1
    assert u @ (S @ u) == pytest.approx(1.0, abs=1e-12)
    # M carries the k^2 n factor: at k = 1, mass of 1 = volume
    _, M = assemble_interior(fes2, 1.0, 1.0, 1.0)
    one = np.ones(fes2.ndofs)
    assert one @ (M @ one) == pytest.approx(1.0, abs=1e-12)


def test_mass_scaling_with_refraction():
    fes = FESpace(cube_mesh(1.0, 2), 1)
    _, M1 = assemble_interior(fes, 1.0, 1.0, 1.0)
    _, M4 = assemble_interior(fes, 2.0, 1.0, 1.0)
    # M carries the k^2 n factor
    assert np.allclose((M4 - 4 * M1).toarray(), 0.0, atol=1e-12)


def test_variable_diffusion_coefficient():
    fes = FESpace(cube_mesh(1.0, 2), 1)
    S2, _ = assemble_interior(fes, 0.0, 2.0, 1.0)
    Sfn, _ = assemble_interior(fes, 0.0, lambda x: np.full(len(x), 2.0), 1.0)
    assert np.allclose((S2 - Sfn).toarray(), 0.0, atol=1e-12)


def test_quadratic_energy_exact():
    fes = FESpace(cube_mesh(1.0, 2), 2)
    S, _ = assemble_interior(fes, 0.0, 1.0, 1.0)
    u = fes.interpolate(lambda x: x[:, 0] ** 2)
    # int |2x|^2 over (-1/2, 1/2)^3 = 4 * 1/12 = 1/3
    assert u @ (S @ u) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_load_vector_total(fes2):
    b = assemble_load(fes2, lambda x: np.ones(len(x)))
    # sum of load against the partition of unity = int 1 = volume
    assert b.sum() == pytest.approx(1.0, abs=1e-12)
