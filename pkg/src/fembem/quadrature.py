"""Quadrature rules on reference simplices and regularizing panel-pair rules.

Reference cells:
  * triangle  T2 = {(u, v): u >= 0, v >= 0, u + v <= 1}, area 1/2
  * tetrahedron T3 = {(x, y, z): x, y, z >= 0, x + y + z <= 1}, volume 1/6

Volume and surface rules are conical (collapsed Gauss-Jacobi) products, so
arbitrary polynomial exactness is available with positive weights.

Panel-pair rules for weakly singular kernels follow the relative-coordinate
regularizing transforms for coincident, edge-adjacent and vertex-adjacent
triangle pairs; separated pairs use a tensor product of triangle rules.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


def gauss01(n):
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _jacobi01(n, alpha):
    """n-point Gauss-Jacobi rule on [0, 1] with weight (1-t)**alpha."""
    x, w = roots_jacobi(n, alpha, 0.0)
    # map from [-1, 1] with weight (1-s)^alpha: s = 2t - 1
    return 0.5 * (x + 1.0), w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def triangle_rule(order):
    """Conical product rule on T2, exact for polynomials of degree <= order.

    Returns (points (q, 2), weights (q,)); weights sum to 1/2.
    """
    if order < 0:
        raise ValueError("quadrature order must be nonnegative")
    n = order // 2 + 1
    ta, wa = _jacobi01(n, 1.0)   # absorbs the Jacobian factor (1-u)
    tb, wb = gauss01(n)
    u = np.repeat(ta, n)
    v = np.tile(tb, n) * (1.0 - u)
    w = np.outer(wa, wb).ravel()
    pts = np.column_stack([u, v])
    pts.flags.writeable = False
    w.flags.writeable = False
    return pts, w


@lru_cache(maxsize=None)
def tet_rule(order):
    """Conical product rule on T3, exact for degree <= order; weights sum to 1/6."""
    if order < 0:
        raise ValueError("quadrature order must be nonnegative")
    if order > 14:
        raise ValueError("tet quadrature supported up to order 14")
    n = order // 2 + 1
    ta, wa = _jacobi01(n, 2.0)
    tb, wb = _jacobi01(n, 1.0)
    tc, wc = gauss01(n)
    x = np.repeat(ta, n * n)
    y = np.tile(np.repeat(tb, n), n) * (1.0 - x)
    z = np.tile(tc, n * n) * (1.0 - x - y)
    w = (wa[:, None, None] * wb[None, :, None] * wc[None, None, :]).ravel()
    pts = np.column_stack([x, y, z])
    pts.flags.writeable = False
    w.flags.writeable = False
    return pts, w


def simplex_monomial_integral(alpha):
    """Exact integral of x^a * y^b * z^c (or x^a * y^b in 2D) over T3 / T2.

    Uses a! b! c! d / (|alpha| + d)! with d the simplex dimension factorials.
    """
    from math import factorial

    d = len(alpha)
    num = 1
    for a in alpha:
        num *= factorial(a)
    return num / factorial(sum(alpha) + d)


# ---------------------------------------------------------------------------
# Sauter-Schwab style regularizing transforms for singular panel pairs.
#
# Triangle parametrization used by the transforms: for 0 <= r2 <= r1 <= 1,
#     x(r1, r2) = (1 - r1) p0 + (r1 - r2) p1 + r2 p2,
# i.e. barycentric coordinates (1 - r1, r1 - r2, r2).  The returned points
# are stored as (u, v) = (r1 - r2, r2) on the standard reference triangle.
# ---------------------------------------------------------------------------

PAIR_FAR = 0
PAIR_VERTEX = 1
PAIR_EDGE = 2
PAIR_IDENTICAL = 3


def _to_uv(r1, r2):
    return np.column_stack([r1 - r2, r2])


@lru_cache(maxsize=None)
def singular_pair_rule(pair_class, order):
    """Quadrature for a weakly singular triangle-pair integral.

    Returns (uv_x (q, 2), uv_y (q, 2), w (q,)) such that

        int_Tx int_Ty F(x, y) ds(y) ds(x)
            ~= (2 Ax) (2 Ay) * sum_q w_q F(x(uv_x[q]), y(uv_y[q]))

    for the canonically aligned pair: identical panels share all vertices,
    edge-adjacent pairs share local vertices (0, 1) in the same order, and
    vertex-adjacent pairs share local vertex 0.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    t, w1 = gauss01(order)
    xsi, e1, e2, e3 = [a.ravel() for a in np.meshgrid(t, t, t, t, indexing="ij")]
    w = (w1[:, None, None, None] * w1[None, :, None, None]
         * w1[None, None, :, None] * w1[None, None, None, :]).ravel()

    ux, uy, ww = [], [], []

    def add(r1x, r2x, r1y, r2y, jac):
        ux.append(_to_uv(r1x, r2x))
        uy.append(_to_uv(r1y, r2y))
        ww.append(w * jac)

    if pair_class == PAIR_IDENTICAL:
        jac = xsi ** 3 * e1 ** 2 * e2
        regions = [
            (xsi, xsi * (1 - e1 + e1 * e2), xsi * (1 - e1 * e2 * e3), xsi * (1 - e1)),
            (xsi * (1 - e1 * e2 * e3), xsi * (1 - e1), xsi, xsi * (1 - e1 + e1 * e2)),
            (xsi, xsi * e1 * (1 - e2 + e2 * e3), xsi * (1 - e1 * e2), xsi * e1 * (1 - e2)),
            (xsi * (1 - e1 * e2), xsi * e1 * (1 - e2), xsi, xsi * e1 * (1 - e2 + e2 * e3)),
            (xsi * (1 - e1 * e2 * e3), xsi * e1 * (1 - e2 * e3), xsi, xsi * e1 * (1 - e2)),
            (xsi, xsi * e1 * (1 - e2), xsi * (1 - e1 * e2 * e3), xsi * e1 * (1 - e2 * e3)),
        ]
        for r1x, r2x, r1y, r2y in regions:
            add(r1x, r2x, r1y, r2y, jac)
    elif pair_class == PAIR_EDGE:
        # five subdomains; w-vector layout (r1x, r1y - r1x, r2y, r2x)
        specs = [
            ((xsi, -xsi * e1 * e2, xsi * e1 * (1 - e2), xsi * e1 * e3),
             xsi ** 3 * e1 ** 2),
            ((xsi, -xsi * e1 * e2 * e3, xsi * e1 * e2 * (1 - e3), xsi * e1),
             xsi ** 3 * e1 ** 2 * e2),
            ((xsi * (1 - e1 * e2), xsi * e1 * e2, xsi * e1 * e2 * e3, xsi * e1 * (1 - e2)),
             xsi ** 3 * e1 ** 2 * e2),
            ((xsi * (1 - e1 * e2 * e3), xsi * e1 * e2 * e3, xsi * e1, xsi * e1 * e2 * (1 - e3)),
             xsi ** 3 * e1 ** 2 * e2),
            ((xsi * (1 - e1 * e2 * e3), xsi * e1 * e2 * e3, xsi * e1 * e2, xsi * e1 * (1 - e2 * e3)),
             xsi ** 3 * e1 ** 2 * e2),
        ]
        for (w0, w1_, w2_, w3_), jac in specs:
            r1x, r2x = w0, w3_
            r1y, r2y = w0 + w1_, w2_
            add(r1x, r2x, r1y, r2y, jac)
    elif pair_class == PAIR_VERTEX:
        jac = xsi ** 3 * e2
        add(xsi, xsi * e1, xsi * e2, xsi * e2 * e3, jac)
        add(xsi * e2, xsi * e2 * e3, xsi, xsi * e1, jac)
    else:
        raise ValueError(f"unsupported pair class {pair_class}")

    uv_x = np.vstack(ux)
    uv_y = np.vstack(uy)
    wq = np.concatenate(ww)
    for a in (uv_x, uv_y, wq):
        a.flags.writeable = False
    return uv_x, uv_y, wq
