"""Pure NumPy backend for the panel-pair boundary-operator assembly.

Evaluates the Helmholtz kernel and its normal derivatives once per point
pair and feeds all nine operator matrices from the shared values.  Used as
the fallback when the compiled extension is unavailable and as the reference
implementation in backend-equivalence tests.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

_4PI = 4.0 * np.pi


def _kernel_values(diff, r, k):
    """(G, dG/dr) at distance r with difference vectors diff = x - y."""
    eikr = np.exp(1j * k * r)
    gv = eikr / (_4PI * r)
    dgdr = eikr * (1j * k * r - 1.0) / (_4PI * r * r)
    return gv, dgdr


def _col_scatter(z_elem, nz):
    """Sparse map from panel-local z columns (nt * nlz) to global z columns."""
    nt, nlz = z_elem.shape
    rows = np.arange(nt * nlz)
    return sp.csr_matrix((np.ones(nt * nlz), (rows, z_elem.ravel())),
                         shape=(nt * nlz, nz))


def assemble(prep, spaces, k, threads=1):
    """Nine dense operator matrices; see kernels.OPERATOR_NAMES for order."""
    del threads  # BLAS-level parallelism only in this backend
    nt = prep.npanels
    nw, nz = spaces.nw, spaces.nz
    w_elem, z_elem = spaces.w_elem, spaces.z_elem
    nlw, nlz = w_elem.shape[1], z_elem.shape[1]
    normals = prep.normals

    V_ww = np.zeros((nw, nw), dtype=complex)
    V_wz = np.zeros((nw, nz), dtype=complex)
    V_zw = np.zeros((nz, nw), dtype=complex)
    V_zz = np.zeros((nz, nz), dtype=complex)
    K_wz = np.zeros((nw, nz), dtype=complex)
    K_zz = np.zeros((nz, nz), dtype=complex)
    Kp_zw = np.zeros((nz, nw), dtype=complex)
    Kp_zz = np.zeros((nz, nz), dtype=complex)
    W_zz = np.zeros((nz, nz), dtype=complex)

    Pz = _col_scatter(z_elem, nz)

    # ---- regular tiers (far = class 0, near = class 1) -------------------
    for tier_id, tier in ((0, prep.far), (1, prep.near)):
        q = len(tier["w"])
        phi_w, phi_z, curl = tier["phi_w"], tier["phi_z"], tier["curl"]
        xq, wq = tier["xq"], tier["wq"]
        block = max(1, int(2.0e6 / (nt * q * q)))
        for t0 in range(0, nt, block):
            t1 = min(nt, t0 + block)
            B = slice(t0, t1)
            nb = t1 - t0
            mask = (prep.class_map[B] == tier_id)
            if not mask.any():
                continue
            diff = xq[B][:, :, None, None, :] - xq[None, None, :, :, :]
            r = np.linalg.norm(diff, axis=-1)
            np.maximum(r, 1e-30, out=r)
            gv, dgdr = _kernel_values(diff, r, k)
            wpair = (wq[B][:, :, None, None] * wq[None, None, :, :]
                     * mask[:, None, :, None])
            gvw = gv * wpair
            dn_y = -np.einsum("ty,bqtpy->bqtp", normals, diff) / r
            kdw = dn_y * dgdr * wpair
            dn_x = np.einsum("by,bqtpy->bqtp", normals[B], diff) / r
            kpdw = dn_x * dgdr * wpair
            del diff, r, gv, dgdr, dn_y, dn_x, wpair

            rows_w = slice(t0 * nlw, t1 * nlw)
            rows_z = z_elem[B].ravel()

            def acc(kern, phix, phiy):
                return np.einsum("bqtp,qi,pj->bitj", kern, phix, phiy,
                                 optimize=True)

            V_ww[rows_w] += acc(gvw, phi_w, phi_w).reshape(nb * nlw, nt * nlw)
            V_wz[rows_w] += acc(gvw, phi_w, phi_z).reshape(nb * nlw, -1) @ Pz
            K_wz[rows_w] += acc(kdw, phi_w, phi_z).reshape(nb * nlw, -1) @ Pz
            np.add.at(V_zw, rows_z,
                      acc(gvw, phi_z, phi_w).reshape(nb * nlz, nt * nlw))
            np.add.at(V_zz, rows_z,
                      acc(gvw, phi_z, phi_z).reshape(nb * nlz, -1) @ Pz)
            np.add.at(K_zz, rows_z,
                      acc(kdw, phi_z, phi_z).reshape(nb * nlz, -1) @ Pz)
            np.add.at(Kp_zw, rows_z,
                      acc(kpdw, phi_z, phi_w).reshape(nb * nlz, nt * nlw))
            np.add.at(Kp_zz, rows_z,
                      acc(kpdw, phi_z, phi_z).reshape(nb * nlz, -1) @ Pz)

            inner = np.einsum("bqtp,tpjx->bqtjx", gvw, curl, optimize=True)
            wblk = np.einsum("bqix,bqtjx->bitj", curl[B], inner, optimize=True)
            nn = normals[B] @ normals.T
            wblk -= k * k * np.einsum("bqtp,bt,qi,pj->bitj", gvw, nn,
                                      phi_z, phi_z, optimize=True)
            np.add.at(W_zz, rows_z, wblk.reshape(nb * nlz, -1) @ Pz)

    # ---- singular configurations ----------------------------------------
    for cfg in prep.configs:
        pairs = np.asarray(cfg.pairs, dtype=np.int64)
        wrule = cfg.weights
        for c0 in range(0, len(pairs), 256):
            tp = pairs[c0:c0 + 256]
            t_arr, s_arr = tp[:, 0], tp[:, 1]
            X = np.einsum("qi,mix->mqx", cfg.bary_x, prep.corners[t_arr])
            Y = np.einsum("qi,miy->mqy", cfg.bary_y, prep.corners[s_arr])
            diff = X - Y
            r = np.linalg.norm(diff, axis=-1)
            np.maximum(r, 1e-30, out=r)
            gv, dgdr = _kernel_values(diff, r, k)
            wm = ((2.0 * prep.areas[t_arr] * 2.0 * prep.areas[s_arr])[:, None]
                  * wrule[None, :])
            gvw = gv * wm
            n_t, n_s = normals[t_arr], normals[s_arr]
            kdw = -np.einsum("my,mqy->mq", n_s, diff) / r * dgdr * wm
            kpdw = np.einsum("mx,mqx->mq", n_t, diff) / r * dgdr * wm

            rw_t, rw_s = w_elem[t_arr], w_elem[s_arr]
            rz_t, rz_s = z_elem[t_arr], z_elem[s_arr]

            def pair_acc(M, kern, phix, phiy, rows, cols):
                blocks = np.einsum("mq,qi,qj->mij", kern, phix, phiy,
                                   optimize=True)
                np.add.at(M, (rows[:, :, None], cols[:, None, :]), blocks)

            pair_acc(V_ww, gvw, cfg.phi_w_x, cfg.phi_w_y, rw_t, rw_s)
            pair_acc(V_wz, gvw, cfg.phi_w_x, cfg.phi_z_y, rw_t, rz_s)
            pair_acc(V_zw, gvw, cfg.phi_z_x, cfg.phi_w_y, rz_t, rw_s)
            pair_acc(V_zz, gvw, cfg.phi_z_x, cfg.phi_z_y, rz_t, rz_s)
            pair_acc(K_wz, kdw, cfg.phi_w_x, cfg.phi_z_y, rw_t, rz_s)
            pair_acc(K_zz, kdw, cfg.phi_z_x, cfg.phi_z_y, rz_t, rz_s)
            pair_acc(Kp_zw, kpdw, cfg.phi_z_x, cfg.phi_w_y, rz_t, rw_s)
            pair_acc(Kp_zz, kpdw, cfg.phi_z_x, cfg.phi_z_y, rz_t, rz_s)

            def pair_curl(dphi, arr):
                gvec = (dphi[None, :, :, 0:1] * prep.a1[arr][:, None, None, :]
                        + dphi[None, :, :, 1:2] * prep.a2[arr][:, None, None, :])
                return np.cross(normals[arr][:, None, None, :], gvec)

            cx = pair_curl(cfg.dphi_z_x, t_arr)
            cy = pair_curl(cfg.dphi_z_y, s_arr)
            blocks = np.einsum("mq,mqix,mqjx->mij", gvw, cx, cy, optimize=True)
            nn = np.einsum("mx,mx->m", n_t, n_s)
            blocks -= k * k * np.einsum("mq,m,qi,qj->mij", gvw, nn,
                                        cfg.phi_z_x, cfg.phi_z_y,
                                        optimize=True)
            np.add.at(W_zz, (rz_t[:, :, None], rz_s[:, None, :]), blocks)

    return (V_ww, V_wz, V_zw, V_zz, K_wz, K_zz, Kp_zw, Kp_zz, W_zz)
