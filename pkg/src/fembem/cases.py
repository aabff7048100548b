"""Manufactured solutions for the coupled interior/exterior problem.

Each case supplies closed-form interior and exterior fields together with
the volume source and the interface jump data they induce.  The exterior
field is always radiating; the interior field solves

    -div(A grad u) - (k n)^2 u = f     in Omega,

with A and n the diffusion and refraction coefficients.  The mortar datum
is m = dnu + i k u (interior traces) and the exterior unknown is the
exterior Dirichlet trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ROOT3PI = np.sqrt(3.0) * np.pi


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form fields of one verification problem."""

    name: str
    k: float
    u_int: Callable                 # points (n,3) -> (n,) complex
    grad_u_int: Callable            # points (n,3) -> (n,3) complex
    f: Callable                     # volume source
    u_ext: Optional[Callable]       # None encodes an identically zero field
    grad_u_ext: Optional[Callable]
    diffusion: object = 1.0         # scalar or callable on points
    refraction: object = 1.0
    mesh_divisor: int = 1           # cube resolution must be a multiple

    def mortar_exact(self, pts, normals):
        """m = dnu_int + i k u_int at surface points with given normals."""
        g = self.grad_u_int(pts)
        return (np.einsum("ix,ix->i", g, normals)
                + 1j * self.k * self.u_int(pts))

    def u_ext_trace(self, pts):
        if self.u_ext is None:
            return np.zeros(len(pts), dtype=complex)
        return self.u_ext(pts)

    def jump_g1(self, pts):
        """Dirichlet jump g1 = u_int - u_ext on the interface."""
        vals = self.u_int(pts).astype(complex)
        if self.u_ext is not None:
            vals = vals - self.u_ext(pts)
        return vals

    def jump_g2(self, pts, normals):
        """Neumann jump g2 = dn(u_int - u_ext) on the interface."""
        g = self.grad_u_int(pts).astype(complex)
        if self.grad_u_ext is not None:
            g = g - self.grad_u_ext(pts)
        return np.einsum("ix,ix->i", g, normals)


def _radiating_point_source(k):
    """u = e^{ikr}/r with r = |x|, radiating from the interior origin."""

    def u(pts):
        r = np.linalg.norm(pts, axis=1)
        return np.exp(1j * k * r) / r

    def grad(pts):
        r = np.linalg.norm(pts, axis=1)
        fac = np.exp(1j * k * r) * (1j * k * r - 1.0) / r ** 3
        return pts * fac[:, None]

    return u, grad


def tc1(k_multiplier=1.5):
    """Smooth transmission problem with constant coefficients.

    Interior field sin(kx)cos(ky) driven by the source f = k^2 u; exterior
    field is the radiating point source e^{ikr}/r.
    """
    k = k_multiplier * ROOT3PI

    def u_int(pts):
        return np.sin(k * pts[:, 0]) * np.cos(k * pts[:, 1])

    def grad_u_int(pts):
        gx = k * np.cos(k * pts[:, 0]) * np.cos(k * pts[:, 1])
        gy = -k * np.sin(k * pts[:, 0]) * np.sin(k * pts[:, 1])
        return np.column_stack([gx, gy, np.zeros(len(pts))])

    def f(pts):
        return k * k * u_int(pts)

    u_ext, grad_u_ext = _radiating_point_source(k)
    return ManufacturedCase("tc1", k, u_int, grad_u_int, f,
                            u_ext, grad_u_ext)


_TC2_HALF = 0.2     # A = 2 on (-0.2, 0.2)^3, A = 1 elsewhere


def _tc2_g(t):
    """1D profile cos^2(2.5 pi t): its derivative vanishes at t = +-0.2."""
    return np.cos(2.5 * np.pi * t) ** 2


def _tc2_dg(t):
    return -2.5 * np.pi * np.sin(5.0 * np.pi * t)


def _tc2_ddg(t):
    return -12.5 * np.pi ** 2 * np.cos(5.0 * np.pi * t)


def tc2():
    """Piecewise diffusion coefficient at k = sqrt(3) pi.

    A = 2 on the inner cube (-0.2, 0.2)^3 and 1 elsewhere; the interior
    field g(x)g(y)g(z) has vanishing normal derivative on the coefficient
    interface, so the flux A grad(u) . n is continuous and the manufactured
    source stays a plain function.  Meshes must resolve the interface
    (cube resolution divisible by 10).
    """
    k = ROOT3PI

    def diffusion(pts):
        inner = np.all(np.abs(pts) < _TC2_HALF, axis=1)
        return np.where(inner, 2.0, 1.0)

    def u_int(pts):
        return _tc2_g(pts[:, 0]) * _tc2_g(pts[:, 1]) * _tc2_g(pts[:, 2])

    def grad_u_int(pts):
        gx, gy, gz = (_tc2_g(pts[:, i]) for i in range(3))
        dx, dy, dz = (_tc2_dg(pts[:, i]) for i in range(3))
        return np.column_stack([dx * gy * gz, gx * dy * gz, gx * gy * dz])

    def f(pts):
        gx, gy, gz = (_tc2_g(pts[:, i]) for i in range(3))
        ax, ay, az = (_tc2_ddg(pts[:, i]) for i in range(3))
        lap = ax * gy * gz + gx * ay * gz + gx * gy * az
        return -diffusion(pts) * lap - k * k * gx * gy * gz

    u_ext, grad_u_ext = _radiating_point_source(k)
    return ManufacturedCase("tc2", k, u_int, grad_u_int, f,
                            u_ext, grad_u_ext, diffusion=diffusion,
                            mesh_divisor=10)


_POLY_COEFFS = {
    1: lambda pts: 0.7 * np.ones(len(pts)),
    2: lambda pts: pts[:, 0] + 2.0 * pts[:, 1] - pts[:, 2] + 0.5,
    3: lambda pts: (pts[:, 0] ** 2 + pts[:, 0] * pts[:, 1]
                    - pts[:, 2] ** 2 + pts[:, 0] + 0.3),
}

_POLY_GRADS = {
    1: lambda pts: np.zeros((len(pts), 3)),
    2: lambda pts: np.tile([1.0, 2.0, -1.0], (len(pts), 1)),
    3: lambda pts: np.column_stack([2.0 * pts[:, 0] + pts[:, 1] + 1.0,
                                    pts[:, 0],
                                    -2.0 * pts[:, 2]]),
}

_POLY_LAPL = {1: 0.0, 2: 0.0, 3: 0.0}


def poly_exact(degree, k_multiplier=1.0):
    """Degree p-1 interior polynomial with zero exterior field.

    The exact triple (u, m, 0) lies in the discrete spaces, so the solver
    must reproduce it to factorization accuracy; used as an end-to-end
    exactness oracle.
    """
    if degree not in _POLY_COEFFS:
        raise ValueError(f"poly-exact defined for degrees 1-3, got {degree}")
    k = k_multiplier * ROOT3PI
    u = _POLY_COEFFS[degree]
    grad = _POLY_GRADS[degree]
    lap = _POLY_LAPL[degree]

    def f(pts):
        return -lap - k * k * u(pts)

    return ManufacturedCase(f"poly-exact-p{degree}", k, u, grad, f,
                            None, None)


def get_case(name, k_multiplier=1.5, degree=1):
    """Look up a case by CLI name: tc1, tc2 or poly-exact."""
    if name == "tc1":
        return tc1(k_multiplier)
    if name == "tc2":
        return tc2()
    if name == "poly-exact":
        return poly_exact(degree, k_multiplier)
    raise ValueError(f"unknown case {name!r}; expected tc1, tc2, poly-exact")
