# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled backend for the panel-pair boundary-operator assembly.

Same contract as :mod:`fembem._kernels_py`: one sweep over panel pairs
feeding all nine operator matrices.  Work is partitioned by blocks of test
panels; each block accumulates into private buffers that are scattered into
the global matrices in a fixed order, so results are independent of the
thread count.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, exp

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)


cdef inline double complex _eikr(double complex k, double r) noexcept nogil:
    # exp(i k r); fast path for the common case of a real wavenumber
    if k.imag == 0.0:
        return cos(k.real * r) + 1j * sin(k.real * r)
    return cexp(1j * k * r)

cdef double PI4 = 12.566370614359172464


cdef void _accumulate_block(
        int t0, int t1, int nt, int nlw, int nlz, double complex k,
        const double[:, :, ::1] corners, const double[:, ::1] normals, const double[::1] areas,
        const double[:, ::1] a1, const double[:, ::1] a2,
        const int[:, ::1] class_map, const long[:, ::1] z_elem,
        # far tier
        const double[:, :, ::1] xq_f, const double[:, ::1] wq_f,
        const double[:, ::1] phiw_f, const double[:, ::1] phiz_f,
        const double[:, :, :, ::1] curl_f,
        # near tier
        const double[:, :, ::1] xq_n, const double[:, ::1] wq_n,
        const double[:, ::1] phiw_n, const double[:, ::1] phiz_n,
        const double[:, :, :, ::1] curl_n,
        # flattened singular configs
        const long[::1] cfg_off, const double[::1] sw,
        const double[:, ::1] sbx, const double[:, ::1] sby,
        const double[:, ::1] spwx, const double[:, ::1] spwy,
        const double[:, ::1] spzx, const double[:, ::1] spzy,
        const double[:, :, ::1] sdzx, const double[:, :, ::1] sdzy,
        # chunk-local outputs
        double complex[:, ::1] bVww, double complex[:, ::1] bVwz,
        double complex[:, ::1] bKwz, double complex[:, ::1] bVzw,
        double complex[:, ::1] bVzz, double complex[:, ::1] bKzz,
        double complex[:, ::1] bKpzw, double complex[:, ::1] bKpzz,
        double complex[:, ::1] bWzz) noexcept nogil:

    cdef int t, s, qx, qy, i, j, cls, rw, rz, cw, iq, q0, q1, qf, qn
    cdef double xx, xy, xz, yx, yy, yz, dx, dy, dz, r, wpair, wsc
    cdef double ntx, nty, ntz, nsx, nsy, nsz, nn, dn_y, dn_x
    cdef double a1x, a1y, a1z, a2x, a2y, a2z
    cdef double gxu, gxv, gx0, gx1, gx2
    cdef double complex eikr, gv, dgdr, gw, kdw, kpdw, k2, ai
    cdef double cxl[10][3]
    cdef double cyl[10][3]

    qf = xq_f.shape[1]
    qn = xq_n.shape[1]
    k2 = k * k

    for t in range(t0, t1):
        rw = (t - t0) * nlw
        rz = (t - t0) * nlz
        ntx = normals[t, 0]; nty = normals[t, 1]; ntz = normals[t, 2]
        for s in range(nt):
            cls = class_map[t, s]
            nsx = normals[s, 0]; nsy = normals[s, 1]; nsz = normals[s, 2]
            nn = ntx * nsx + nty * nsy + ntz * nsz
            cw = s * nlw
            if cls <= 1:
                # regular tensor rule (far or near tier)
                for qx in range(qf if cls == 0 else qn):
                    if cls == 0:
                        xx = xq_f[t, qx, 0]; xy = xq_f[t, qx, 1]
                        xz = xq_f[t, qx, 2]; wsc = wq_f[t, qx]
                    else:
                        xx = xq_n[t, qx, 0]; xy = xq_n[t, qx, 1]
                        xz = xq_n[t, qx, 2]; wsc = wq_n[t, qx]
                    for qy in range(qf if cls == 0 else qn):
                        if cls == 0:
                            yx = xq_f[s, qy, 0]; yy = xq_f[s, qy, 1]
                            yz = xq_f[s, qy, 2]
                            wpair = wsc * wq_f[s, qy]
                        else:
                            yx = xq_n[s, qy, 0]; yy = xq_n[s, qy, 1]
                            yz = xq_n[s, qy, 2]
                            wpair = wsc * wq_n[s, qy]
                        dx = xx - yx; dy = xy - yy; dz = xz - yz
                        r = sqrt(dx * dx + dy * dy + dz * dz)
                        eikr = _eikr(k, r)
                        gv = eikr / (PI4 * r)
                        dgdr = eikr * (1j * k * r - 1.0) / (PI4 * r * r)
                        gw = gv * wpair
                        dn_y = -(nsx * dx + nsy * dy + nsz * dz) / r
                        dn_x = (ntx * dx + nty * dy + ntz * dz) / r
                        kdw = dn_y * dgdr * wpair
                        kpdw = dn_x * dgdr * wpair
                        if cls == 0:
                            for i in range(nlw):
                                ai = gw * phiw_f[qx, i]
                                for j in range(nlw):
                                    bVww[rw + i, cw + j] = bVww[rw + i, cw + j] + ai * phiw_f[qy, j]
                                ai = gw * phiw_f[qx, i]
                                for j in range(nlz):
                                    bVwz[rw + i, z_elem[s, j]] = bVwz[rw + i, z_elem[s, j]] + ai * phiz_f[qy, j]
                                ai = kdw * phiw_f[qx, i]
                                for j in range(nlz):
                                    bKwz[rw + i, z_elem[s, j]] = bKwz[rw + i, z_elem[s, j]] + ai * phiz_f[qy, j]
                            for i in range(nlz):
                                ai = gw * phiz_f[qx, i]
                                for j in range(nlw):
                                    bVzw[rz + i, cw + j] = bVzw[rz + i, cw + j] + ai * phiw_f[qy, j]
                                for j in range(nlz):
                                    bVzz[rz + i, z_elem[s, j]] = bVzz[rz + i, z_elem[s, j]] + ai * phiz_f[qy, j]
                                ai = kdw * phiz_f[qx, i]
                                for j in range(nlz):
                                    bKzz[rz + i, z_elem[s, j]] = bKzz[rz + i, z_elem[s, j]] + ai * phiz_f[qy, j]
                                ai = kpdw * phiz_f[qx, i]
                                for j in range(nlw):
                                    bKpzw[rz + i, cw + j] = bKpzw[rz + i, cw + j] + ai * phiw_f[qy, j]
                                for j in range(nlz):
                                    bKpzz[rz + i, z_elem[s, j]] = bKpzz[rz + i, z_elem[s, j]] + ai * phiz_f[qy, j]
                                for j in range(nlz):
                                    bWzz[rz + i, z_elem[s, j]] = bWzz[rz + i, z_elem[s, j]] + gw * (
                                        curl_f[t, qx, i, 0] * curl_f[s, qy, j, 0]
                                        + curl_f[t, qx, i, 1] * curl_f[s, qy, j, 1]
                                        + curl_f[t, qx, i, 2] * curl_f[s, qy, j, 2]
                                        - k2 * nn * phiz_f[qx, i] * phiz_f[qy, j])
                        else:
                            for i in range(nlw):
                                ai = gw * phiw_n[qx, i]
                                for j in range(nlw):
                                    bVww[rw + i, cw + j] = bVww[rw + i, cw + j] + ai * phiw_n[qy, j]
                                for j in range(nlz):
                                    bVwz[rw + i, z_elem[s, j]] = bVwz[rw + i, z_elem[s, j]] + ai * phiz_n[qy, j]
                                ai = kdw * phiw_n[qx, i]
                                for j in range(nlz):
                                    bKwz[rw + i, z_elem[s, j]] = bKwz[rw + i, z_elem[s, j]] + ai * phiz_n[qy, j]
                            for i in range(nlz):
                                ai = gw * phiz_n[qx, i]
                                for j in range(nlw):
                                    bVzw[rz + i, cw + j] = bVzw[rz + i, cw + j] + ai * phiw_n[qy, j]
                                for j in range(nlz):
                                    bVzz[rz + i, z_elem[s, j]] = bVzz[rz + i, z_elem[s, j]] + ai * phiz_n[qy, j]
                                ai = kdw * phiz_n[qx, i]
                                for j in range(nlz):
                                    bKzz[rz + i, z_elem[s, j]] = bKzz[rz + i, z_elem[s, j]] + ai * phiz_n[qy, j]
                                ai = kpdw * phiz_n[qx, i]
                                for j in range(nlw):
                                    bKpzw[rz + i, cw + j] = bKpzw[rz + i, cw + j] + ai * phiw_n[qy, j]
                                for j in range(nlz):
                                    bKpzz[rz + i, z_elem[s, j]] = bKpzz[rz + i, z_elem[s, j]] + ai * phiz_n[qy, j]
                                for j in range(nlz):
                                    bWzz[rz + i, z_elem[s, j]] = bWzz[rz + i, z_elem[s, j]] + gw * (
                                        curl_n[t, qx, i, 0] * curl_n[s, qy, j, 0]
                                        + curl_n[t, qx, i, 1] * curl_n[s, qy, j, 1]
                                        + curl_n[t, qx, i, 2] * curl_n[s, qy, j, 2]
                                        - k2 * nn * phiz_n[qx, i] * phiz_n[qy, j])
            else:
                # singular configuration cls - 2
                q0 = cfg_off[cls - 2]
                q1 = cfg_off[cls - 1]
                wsc = 4.0 * areas[t] * areas[s]
                a1x = a1[t, 0]; a1y = a1[t, 1]; a1z = a1[t, 2]
                a2x = a2[t, 0]; a2y = a2[t, 1]; a2z = a2[t, 2]
                for iq in range(q0, q1):
                    # curl tables for this rule point
                    for i in range(nlz):
                        gxu = sdzx[iq, i, 0]; gxv = sdzx[iq, i, 1]
                        gx0 = gxu * a1x + gxv * a2x
                        gx1 = gxu * a1y + gxv * a2y
                        gx2 = gxu * a1z + gxv * a2z
                        cxl[i][0] = nty * gx2 - ntz * gx1
                        cxl[i][1] = ntz * gx0 - ntx * gx2
                        cxl[i][2] = ntx * gx1 - nty * gx0
                        gxu = sdzy[iq, i, 0]; gxv = sdzy[iq, i, 1]
                        gx0 = gxu * a1[s, 0] + gxv * a2[s, 0]
                        gx1 = gxu * a1[s, 1] + gxv * a2[s, 1]
                        gx2 = gxu * a1[s, 2] + gxv * a2[s, 2]
                        cyl[i][0] = nsy * gx2 - nsz * gx1
                        cyl[i][1] = nsz * gx0 - nsx * gx2
                        cyl[i][2] = nsx * gx1 - nsy * gx0
                    xx = (sbx[iq, 0] * corners[t, 0, 0] + sbx[iq, 1] * corners[t, 1, 0]
                          + sbx[iq, 2] * corners[t, 2, 0])
                    xy = (sbx[iq, 0] * corners[t, 0, 1] + sbx[iq, 1] * corners[t, 1, 1]
                          + sbx[iq, 2] * corners[t, 2, 1])
                    xz = (sbx[iq, 0] * corners[t, 0, 2] + sbx[iq, 1] * corners[t, 1, 2]
                          + sbx[iq, 2] * corners[t, 2, 2])
                    yx = (sby[iq, 0] * corners[s, 0, 0] + sby[iq, 1] * corners[s, 1, 0]
                          + sby[iq, 2] * corners[s, 2, 0])
                    yy = (sby[iq, 0] * corners[s, 0, 1] + sby[iq, 1] * corners[s, 1, 1]
                          + sby[iq, 2] * corners[s, 2, 1])
                    yz = (sby[iq, 0] * corners[s, 0, 2] + sby[iq, 1] * corners[s, 1, 2]
                          + sby[iq, 2] * corners[s, 2, 2])
                    dx = xx - yx; dy = xy - yy; dz = xz - yz
                    r = sqrt(dx * dx + dy * dy + dz * dz)
                    if r < 1e-30:
                        r = 1e-30
                    wpair = sw[iq] * wsc
                    eikr = _eikr(k, r)
                    gv = eikr / (PI4 * r)
                    dgdr = eikr * (1j * k * r - 1.0) / (PI4 * r * r)
                    gw = gv * wpair
                    dn_y = -(nsx * dx + nsy * dy + nsz * dz) / r
                    dn_x = (ntx * dx + nty * dy + ntz * dz) / r
                    kdw = dn_y * dgdr * wpair
                    kpdw = dn_x * dgdr * wpair
                    for i in range(nlw):
                        ai = gw * spwx[iq, i]
                        for j in range(nlw):
                            bVww[rw + i, cw + j] = bVww[rw + i, cw + j] + ai * spwy[iq, j]
                        for j in range(nlz):
                            bVwz[rw + i, z_elem[s, j]] = bVwz[rw + i, z_elem[s, j]] + ai * spzy[iq, j]
                        ai = kdw * spwx[iq, i]
                        for j in range(nlz):
                            bKwz[rw + i, z_elem[s, j]] = bKwz[rw + i, z_elem[s, j]] + ai * spzy[iq, j]
                    for i in range(nlz):
                        ai = gw * spzx[iq, i]
                        for j in range(nlw):
                            bVzw[rz + i, cw + j] = bVzw[rz + i, cw + j] + ai * spwy[iq, j]
                        for j in range(nlz):
                            bVzz[rz + i, z_elem[s, j]] = bVzz[rz + i, z_elem[s, j]] + ai * spzy[iq, j]
                        ai = kdw * spzx[iq, i]
                        for j in range(nlz):
                            bKzz[rz + i, z_elem[s, j]] = bKzz[rz + i, z_elem[s, j]] + ai * spzy[iq, j]
                        ai = kpdw * spzx[iq, i]
                        for j in range(nlw):
                            bKpzw[rz + i, cw + j] = bKpzw[rz + i, cw + j] + ai * spwy[iq, j]
                        for j in range(nlz):
                            bKpzz[rz + i, z_elem[s, j]] = bKpzz[rz + i, z_elem[s, j]] + ai * spzy[iq, j]
                        for j in range(nlz):
                            bWzz[rz + i, z_elem[s, j]] = bWzz[rz + i, z_elem[s, j]] + gw * (
                                cxl[i][0] * cyl[j][0] + cxl[i][1] * cyl[j][1]
                                + cxl[i][2] * cyl[j][2]
                                - k2 * nn * spzx[iq, i] * spzy[iq, j])


def assemble(prep, spaces, k, threads=1):
    """Nine dense operator matrices; see kernels.OPERATOR_NAMES for order."""
    nt = prep.npanels
    nw, nz = spaces.nw, spaces.nz
    nlw = spaces.w_elem.shape[1]
    nlz = spaces.z_elem.shape[1]
    if nlz > 10:
        raise ValueError("compiled backend supports at most 10 local dofs")
    k = complex(k)
    threads = max(1, int(threads))

    corners = np.ascontiguousarray(prep.corners)
    normals = np.ascontiguousarray(prep.normals)
    areas = np.ascontiguousarray(prep.areas)
    a1 = np.ascontiguousarray(prep.a1)
    a2 = np.ascontiguousarray(prep.a2)
    class_map = np.ascontiguousarray(prep.class_map, dtype=np.int32)
    z_elem = np.ascontiguousarray(spaces.z_elem, dtype=np.int64)
    far, near = prep.far, prep.near
    flat = prep.flat_singular()

    mats = [np.zeros((nw, nw), dtype=complex), np.zeros((nw, nz), dtype=complex),
            np.zeros((nz, nw), dtype=complex), np.zeros((nz, nz), dtype=complex),
            np.zeros((nw, nz), dtype=complex), np.zeros((nz, nz), dtype=complex),
            np.zeros((nz, nw), dtype=complex), np.zeros((nz, nz), dtype=complex),
            np.zeros((nz, nz), dtype=complex)]
    (V_ww, V_wz, V_zw, V_zz, K_wz, K_zz, Kp_zw, Kp_zz, W_zz) = mats

    chunk = 64
    ranges = [(t0, min(nt, t0 + chunk)) for t0 in range(0, nt, chunk)]

    def run_chunk(rng):
        t0, t1 = rng
        nb = t1 - t0
        bufs = [np.zeros((nb * nlw, nw), dtype=complex),
                np.zeros((nb * nlw, nz), dtype=complex),
                np.zeros((nb * nlw, nz), dtype=complex),
                np.zeros((nb * nlz, nw), dtype=complex),
                np.zeros((nb * nlz, nz), dtype=complex),
                np.zeros((nb * nlz, nz), dtype=complex),
                np.zeros((nb * nlz, nw), dtype=complex),
                np.zeros((nb * nlz, nz), dtype=complex),
                np.zeros((nb * nlz, nz), dtype=complex)]
        _accumulate_block(
            t0, t1, nt, nlw, nlz, k, corners, normals, areas, a1, a2,
            class_map, z_elem,
            far["xq"], far["wq"], far["phi_w"], far["phi_z"], far["curl"],
            near["xq"], near["wq"], near["phi_w"], near["phi_z"], near["curl"],
            flat["off"], flat["w"], flat["bx"], flat["by"],
            flat["pwx"], flat["pwy"], flat["pzx"], flat["pzy"],
            flat["dzx"], flat["dzy"],
            bufs[0], bufs[1], bufs[2], bufs[3], bufs[4], bufs[5],
            bufs[6], bufs[7], bufs[8])
        return bufs

    def scatter(rng, bufs):
        t0, t1 = rng
        (bVww, bVwz, bKwz, bVzw, bVzz, bKzz, bKpzw, bKpzz, bWzz) = bufs
        V_ww[t0 * nlw:t1 * nlw] += bVww
        V_wz[t0 * nlw:t1 * nlw] += bVwz
        K_wz[t0 * nlw:t1 * nlw] += bKwz
        rows_z = z_elem[t0:t1].ravel()
        np.add.at(V_zw, rows_z, bVzw)
        np.add.at(V_zz, rows_z, bVzz)
        np.add.at(K_zz, rows_z, bKzz)
        np.add.at(Kp_zw, rows_z, bKpzw)
        np.add.at(Kp_zz, rows_z, bKpzz)
        np.add.at(W_zz, rows_z, bWzz)

    if threads == 1:
        for rng in ranges:
            scatter(rng, run_chunk(rng))
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_chunk, rng) for rng in ranges]
            # scatter in submission order: results independent of thread count
            for rng, fut in zip(ranges, futures):
                scatter(rng, fut.result())

    return tuple(mats)
