import numpy as np
import pytest

from fembem import reference
from fembem.meshes import cube_mesh


@pytest.mark.parametrize("dim,p", [(2, 0), (2, 1), (2, 2), (2, 3),
                                   (3, 1), (3, 2), (3, 3)])
def test_partition_of_unity_and_delta(dim, p):
    rng = np.random.default_rng(7)
    pts = rng.dirichlet(np.ones(dim + 1), size=20)[:, 1:]
    phi = reference.eval_basis(dim, p, pts)
    assert np.allclose(phi.sum(axis=1), 1.0, atol=1e-12)
    if p >= 1:
        alphas = np.array(reference.lattice_multiindices(dim, p), dtype=float)
        nodes = alphas[:, 1:] / p
        vals = reference.eval_basis(dim, p, nodes)
        assert np.allclose(vals, np.eye(len(nodes)), atol=1e-10)


@pytest.mark.parametrize("dim,p", [(2, 1), (2, 2), (3, 1), (3, 3)])
def test_gradient_matches_finite_differences(dim, p):
    rng = np.random.default_rng(3)
    pts = rng.dirichlet(np.ones(dim + 1), size=5)[:, 1:]
    grad = reference.eval_basis_grad(dim, p, pts)
    eps = 1e-6
    for d in range(dim):
        shift = np.zeros(dim)
        shift[d] = eps
        fd = (reference.eval_basis(dim, p, pts + shift)
              - reference.eval_basis(dim, p, pts - shift)) / (2 * eps)
        assert np.allclose(grad[:, :, d], fd, atol=1e-7)


@pytest.mark.parametrize("p,expected", [(1, 27), (2, 125), (3, 343)])
def test_dof_map_counts_cube(p, expected):
    mesh = cube_mesh(1.0, 2)
    ndofs, elem, keys, info = reference.build_dof_map(mesh.tets, p, 3)
    assert ndofs == expected           # (p n + 1)^3 lattice on the cube
    nloc = len(reference.lattice_multiindices(3, p))
    assert elem.shape == (len(mesh.tets), nloc)
    assert len(keys) == ndofs
    assert elem.min() == 0 and elem.max() == ndofs - 1


def test_dof_map_shared_entity_consistency():
    # two tets sharing a face must agree on the face/edge/vertex dofs
    cells = np.array([[0, 1, 2, 3], [1, 2, 3, 4]])
    for p in (1, 2, 3):
        ndofs, elem, keys, info = reference.build_dof_map(cells, p, 3)
        nloc = len(reference.lattice_multiindices(3, p))
        # total dofs = 2 cells' worth minus the shared-face duplicates
        nface = len(reference.lattice_multiindices(2, p))
        assert ndofs == 2 * nloc - nface
        assert len(set(elem[0]) & set(elem[1])) == nface


def test_dof_coordinates_interpolation():
    mesh = cube_mesh(1.0, 2)
    for p in (1, 2):
        ndofs, elem, keys, info = reference.build_dof_map(mesh.tets, p, 3)
        coords = reference.dof_coordinates(mesh.vertices, mesh.tets, info, p)
        assert coords.shape == (ndofs, 3)
        # nodal interpolation of an affine function is exact
        vals = coords @ np.array([1.0, 2.0, -0.5]) + 0.25
        pts = np.array([[0.3, 0.2, 0.1], [0.1, 0.1, 0.7]])
        phi = reference.eval_basis(3, p, pts)
        for t in range(0, len(mesh.tets), 7):
            corners = mesh.vertices[mesh.tets[t]]
            xq = (1 - pts.sum(1))[:, None] * corners[0] + pts @ corners[1:]
            uh = phi @ vals[elem[t]]
            assert np.allclose(uh, xq @ [1.0, 2.0, -0.5] + 0.25, atol=1e-11)
