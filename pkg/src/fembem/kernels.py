"""Panel-pair assembly of the boundary operator matrices.

This module prepares everything a backend needs to evaluate all Galerkin
boundary-operator matrices in a single sweep over panel pairs:

  * geometry tables (corners, normals, areas, tangent reciprocal vectors),
  * quadrature tables for the far / near / singular pair classes,
  * the pair classification map with canonical corner permutations for
    coincident, edge-adjacent and vertex-adjacent panels.

Two backends share this preparation: a compiled extension
(:mod:`fembem._kernels_cy`) and a pure NumPy fallback
(:mod:`fembem._kernels_py`).  The active backend is chosen at import time;
set ``FEMBEM_PURE_PY=1`` to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import reference
from .quadrature import (PAIR_EDGE, PAIR_IDENTICAL, PAIR_VERTEX,
                         singular_pair_rule, triangle_rule)

OPERATOR_NAMES = ("V_ww", "V_wz", "V_zw", "V_zz", "K_wz", "K_zz",
                  "Kp_zw", "Kp_zz", "W_zz")


def _load_backend():
    if os.environ.get("FEMBEM_PURE_PY", "").strip() not in ("", "0"):
        from . import _kernels_py
        return _kernels_py, "python"
    try:
        from . import _kernels_cy
        return _kernels_cy, "cython"
    except ImportError:
        from . import _kernels_py
        return _kernels_py, "python"


_BACKEND, BACKEND_NAME = _load_backend()


def get_backend(name=None):
    """Return (module, name) for 'cython', 'python' or the default."""
    if name in (None, "auto"):
        return _BACKEND, BACKEND_NAME
    if name == "python":
        from . import _kernels_py
        return _kernels_py, "python"
    if name == "cython":
        from . import _kernels_cy
        return _kernels_cy, "cython"
    raise ValueError(f"unknown kernel backend {name!r}")


# ---------------------------------------------------------------------------
# preparation
# ---------------------------------------------------------------------------

_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def _rule_tables(p, bary, side_perm=None):
    """Basis tables at barycentric points, optionally permuted.

    For a permuted panel (canonical corner j = original corner perm[j]) the
    original barycentric coordinates are lam_orig[perm[j]] = lam_canon[j].
    Returns (bary_orig (q,3), phi_w (q,nlw), phi_z (q,nlz), dphi_z (q,nlz,2)).
    """
    if side_perm is not None:
        orig = np.empty_like(bary)
        for j, pj in enumerate(side_perm):
            orig[:, pj] = bary[:, j]
        bary = orig
    uv = bary[:, 1:]
    phi_w = reference.eval_basis(2, p - 1, uv)
    phi_z = reference.eval_basis(2, p, uv)
    dphi_z = reference.eval_basis_grad(2, p, uv)
    return bary, phi_w, phi_z, dphi_z


def _uv_to_bary(uv):
    return np.column_stack([1.0 - uv.sum(axis=1), uv[:, 0], uv[:, 1]])


@dataclass
class SingularConfig:
    """One (pair class, corner permutations) combination with its tables."""

    pair_class: int
    perm_x: tuple
    perm_y: tuple
    weights: np.ndarray
    bary_x: np.ndarray
    bary_y: np.ndarray
    phi_w_x: np.ndarray
    phi_z_x: np.ndarray
    dphi_z_x: np.ndarray
    phi_w_y: np.ndarray
    phi_z_y: np.ndarray
    dphi_z_y: np.ndarray
    pairs: list


class BemPrep:
    """Geometry, quadrature and pair-classification tables for one surface."""

    def __init__(self, spaces, far_order=3, near_order=7, sing_order=4,
                 near_factor=2.0):
        surf = spaces.surface
        p = spaces.degree
        self.degree = p
        self.spaces = spaces
        self.corners = np.ascontiguousarray(surf.corners())
        self.normals = np.ascontiguousarray(surf.normals)
        self.areas = surf.areas()
        nt = len(surf.triangles)
        self.npanels = nt

        # tangent reciprocal vectors: grad_Gamma f = df_u * a1 + df_v * a2
        e1 = self.corners[:, 1] - self.corners[:, 0]
        e2 = self.corners[:, 2] - self.corners[:, 0]
        g11 = np.einsum("tx,tx->t", e1, e1)
        g12 = np.einsum("tx,tx->t", e1, e2)
        g22 = np.einsum("tx,tx->t", e2, e2)
        det = g11 * g22 - g12 * g12
        self.a1 = (g22[:, None] * e1 - g12[:, None] * e2) / det[:, None]
        self.a2 = (g11[:, None] * e2 - g12[:, None] * e1) / det[:, None]

        # regular rules: far and near tiers
        self.far = self._tensor_tier(far_order)
        self.near = self._tensor_tier(near_order)

        # classification
        diam = np.max(np.linalg.norm(
            self.corners - self.corners.mean(axis=1, keepdims=True),
            axis=2), axis=1)
        cent = self.corners.mean(axis=1)
        touching = self._touching_pairs(surf.triangles)
        # class map: 0 far, 1 near, >=2 encodes a singular config id + 2
        self.class_map = np.zeros((nt, nt), dtype=np.int32)
        dists = np.linalg.norm(cent[:, None] - cent[None, :], axis=2)
        self.class_map[dists < near_factor * (diam[:, None] + diam[None, :])] = 1

        self.configs = self._build_configs(touching, surf.triangles, sing_order)
        for ci, cfg in enumerate(self.configs):
            for (t, s) in cfg.pairs:
                self.class_map[t, s] = ci + 2

    def _tensor_tier(self, order):
        pts, w = triangle_rule(order)
        bary = _uv_to_bary(pts)
        _, phi_w, phi_z, dphi_z = _rule_tables(self.degree, bary)
        xq = np.einsum("qi,tix->tqx", bary, self.corners)
        wq = (2.0 * self.areas)[:, None] * w[None, :]
        # per-panel physical surface-curl vectors of the Z basis
        gvec = (dphi_z[None, :, :, 0:1] * self.a1[:, None, None, :]
                + dphi_z[None, :, :, 1:2] * self.a2[:, None, None, :])
        curl = np.cross(self.normals[:, None, None, :], gvec)
        return {"order": order, "bary": bary, "w": w, "xq": xq, "wq": wq,
                "phi_w": phi_w, "phi_z": phi_z, "dphi_z": dphi_z,
                "curl": np.ascontiguousarray(curl)}

    @staticmethod
    def _touching_pairs(triangles):
        """{(t, s): shared global vertex ids} for t != s sharing >= 1 vertex."""
        v2p = {}
        for ti, tri in enumerate(triangles):
            for v in tri:
                v2p.setdefault(int(v), []).append(ti)
        out = {}
        for v, panels in v2p.items():
            for i in panels:
                for j in panels:
                    if i != j:
                        out.setdefault((i, j), []).append(v)
        return out

    def _build_configs(self, touching, triangles, sing_order):
        configs = {}

        def add(pair_class, perm_x, perm_y, t, s):
            key = (pair_class, perm_x, perm_y)
            if key not in configs:
                uvx, uvy, w = singular_pair_rule(pair_class, sing_order)
                bx, pwx, pzx, dzx = _rule_tables(
                    self.degree, _uv_to_bary(uvx), perm_x)
                by, pwy, pzy, dzy = _rule_tables(
                    self.degree, _uv_to_bary(uvy), perm_y)
                configs[key] = SingularConfig(
                    pair_class, perm_x, perm_y, w, bx, by,
                    pwx, pzx, dzx, pwy, pzy, dzy, [])
            configs[key].pairs.append((t, s))

        for t in range(self.npanels):
            add(PAIR_IDENTICAL, (0, 1, 2), (0, 1, 2), t, t)
        for (t, s), shared in touching.items():
            tri_t = [int(v) for v in triangles[t]]
            tri_s = [int(v) for v in triangles[s]]
            shared = sorted(set(shared))
            if len(shared) == 2:
                ga, gb = shared
                ia, ib = tri_t.index(ga), tri_t.index(gb)
                ja, jb = tri_s.index(ga), tri_s.index(gb)
                perm_x = (ia, ib, 3 - ia - ib)
                perm_y = (ja, jb, 3 - ja - jb)
                add(PAIR_EDGE, perm_x, perm_y, t, s)
            elif len(shared) == 1:
                ia = tri_t.index(shared[0])
                ja = tri_s.index(shared[0])
                others_t = sorted(set((0, 1, 2)) - {ia})
                others_s = sorted(set((0, 1, 2)) - {ja})
                perm_x = (ia, others_t[0], others_t[1])
                perm_y = (ja, others_s[0], others_s[1])
                add(PAIR_VERTEX, perm_x, perm_y, t, s)
            else:  # pragma: no cover - conformity forbids duplicated panels
                raise ValueError("distinct panels share 3 vertices")
        return list(configs.values())


    def flat_singular(self):
        """Singular config tables stacked along the rule axis (for the
        compiled backend): dict of contiguous arrays plus config offsets."""
        if not hasattr(self, "_flat"):
            offs = [0]
            cols = {"w": [], "bx": [], "by": [], "pwx": [], "pwy": [],
                    "pzx": [], "pzy": [], "dzx": [], "dzy": []}
            for cfg in self.configs:
                offs.append(offs[-1] + len(cfg.weights))
                cols["w"].append(cfg.weights)
                cols["bx"].append(cfg.bary_x)
                cols["by"].append(cfg.bary_y)
                cols["pwx"].append(cfg.phi_w_x)
                cols["pwy"].append(cfg.phi_w_y)
                cols["pzx"].append(cfg.phi_z_x)
                cols["pzy"].append(cfg.phi_z_y)
                cols["dzx"].append(cfg.dphi_z_x)
                cols["dzy"].append(cfg.dphi_z_y)
            flat = {k_: np.ascontiguousarray(np.concatenate(v, axis=0))
                    for k_, v in cols.items()}
            flat["off"] = np.asarray(offs, dtype=np.int64)
            self._flat = flat
        return self._flat


def assemble_operators(spaces, k, far_order=3, near_order=7, sing_order=4,
                       near_factor=2.0, backend=None, threads=1, prep=None):
    """All nine Galerkin boundary-operator matrices at wavenumber k.

    Returns a dict keyed by OPERATOR_NAMES.  Matrix ``X_ab`` pairs test
    functions from space ``a`` with trial densities from space ``b``
    (``w`` = mortar space W_h, ``z`` = trace space Z_h):

        V_ab[i, j]  = <V_k  b_j, a_i>      (single layer)
        K_ab[i, j]  = <K_k  b_j, a_i>      (double layer, principal value)
        Kp_ab[i, j] = <K'_k b_j, a_i>      (adjoint double layer, p.v.)
        W_zz[i, j]  = <W_k  z_j, z_i>      (hypersingular, integrated by parts)
    """
    if prep is None:
        prep = BemPrep(spaces, far_order, near_order, sing_order, near_factor)
    mod, _ = get_backend(backend)
    mats = mod.assemble(prep, spaces, complex(k), int(threads))
    return dict(zip(OPERATOR_NAMES, mats))
