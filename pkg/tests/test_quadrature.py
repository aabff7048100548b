import numpy as np
import pytest

from fembem.quadrature import (PAIR_EDGE, PAIR_FAR, PAIR_IDENTICAL,
                               PAIR_VERTEX, gauss01, simplex_monomial_integral,
                               singular_pair_rule, tet_rule, triangle_rule)


def test_gauss01_polynomial_exactness():
    for n in (1, 2, 4, 6):
        x, w = gauss01(n)
        for d in range(2 * n):
            assert np.dot(w, x ** d) == pytest.approx(1.0 / (d + 1), abs=1e-14)


@pytest.mark.parametrize("order", [1, 2, 3, 5, 8])
def test_triangle_rule_exactness(order):
    pts, wts = triangle_rule(order)
    assert wts.sum() == pytest.approx(0.5, abs=1e-14)
    for i in range(order + 1):
        for j in range(order + 1 - i):
            val = np.dot(wts, pts[:, 0] ** i * pts[:, 1] ** j)
            assert val == pytest.approx(
                simplex_monomial_integral((i, j)), abs=1e-13)


@pytest.mark.parametrize("order", [1, 2, 3, 5])
def test_tet_rule_exactness(order):
    pts, wts = tet_rule(order)
    assert wts.sum() == pytest.approx(1.0 / 6.0, abs=1e-14)
    for i in range(order + 1):
        for j in range(order + 1 - i):
            for l in range(order + 1 - i - j):
                val = np.dot(wts, pts[:, 0] ** i * pts[:, 1] ** j
                             * pts[:, 2] ** l)
                assert val == pytest.approx(
                    simplex_monomial_integral((i, j, l)), abs=1e-13)


@pytest.mark.parametrize("pair_class",
                         [PAIR_IDENTICAL, PAIR_EDGE, PAIR_VERTEX])
def test_singular_pair_rule_weight_sum(pair_class):
    # the rules integrate over the product of two unit reference triangles
    xq, yq, wq = singular_pair_rule(pair_class, 4)
    assert wq.sum() == pytest.approx(0.25, abs=1e-13)
    assert (wq > 0).all()
    for pts in (xq, yq):
        assert (pts >= -1e-14).all()
        assert (pts.sum(axis=1) <= 1 + 1e-14).all()


def test_singular_pair_rule_converges_on_1_over_r():
    # shared-edge pair in 3D: x-triangle (0,0,0),(1,0,0),(0,1,0) and
    # y-triangle (0,0,0),(1,0,0),(0,-1,0); kernel 1/|x-y| is integrable
    ax = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    ay = np.array([[0.0, 0, 0], [1, 0, 0], [0, -1, 0]])

    def integrate(order):
        xq, yq, wq = singular_pair_rule(PAIR_EDGE, order)
        X = (1 - xq.sum(1))[:, None] * ax[0] + xq @ ax[1:]
        Y = (1 - yq.sum(1))[:, None] * ay[0] + yq @ ay[1:]
        r = np.linalg.norm(X - Y, axis=1)
        return np.dot(wq, 1.0 / r)

    vals = [integrate(o) for o in (3, 6, 10)]
    errs = [abs(v - vals[-1]) for v in vals[:-1]]
    assert errs[1] < errs[0]
    assert errs[1] < 1e-5 * abs(vals[-1])


def test_singular_pair_rule_rejects_far_class():
    with pytest.raises(ValueError):
        singular_pair_rule(PAIR_FAR, 4)
    with pytest.raises(ValueError):
        singular_pair_rule(PAIR_EDGE, 0)
