# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; operation order mirrors ``_pykernels`` exactly."""

import numpy as np
from libc.math cimport sqrt, floor

BACKEND = "cython"

# must match _pykernels.CONTACT_TOL
CONTACT_TOL = 1e-13
cdef double _CONTACT_TOL = 1e-13


def project_constraints(double[:, ::1] pos, const double[::1] inv_mass, const long long[:, ::1] pairs,
                        const double[::1] rest, const double[::1] stiffness, int passes):
    cdef Py_ssize_t m = rest.shape[0]
    cdef Py_ssize_t c, a, b
    cdef int it, axis
    cdef double wa, wb, wsum, dx, dy, dz, dist, r, nx, ny, nz, s, sa, sb
    if m == 0 or passes <= 0:
        return
    with nogil:
        for it in range(passes):
            for c in range(m):
                a = pairs[c, 0]
                b = pairs[c, 1]
                wa = inv_mass[a]
                wb = inv_mass[b]
                wsum = wa + wb
                if wsum == 0.0:
                    continue
                dx = pos[a, 0] - pos[b, 0]
                dy = pos[a, 1] - pos[b, 1]
                dz = pos[a, 2] - pos[b, 2]
                dist = sqrt(dx * dx + dy * dy + dz * dz)
                r = rest[c]
                if dist == 0.0:
                    if r == 0.0:
                        continue
                    axis = <int>((a + b) % 3)
                    nx = 1.0 if axis == 0 else 0.0
                    ny = 1.0 if axis == 1 else 0.0
                    nz = 1.0 if axis == 2 else 0.0
                else:
                    nx = dx / dist
                    ny = dy / dist
                    nz = dz / dist
                s = stiffness[c] * (dist - r) / wsum
                sa = s * wa
                sb = s * wb
                pos[a, 0] -= sa * nx
                pos[a, 1] -= sa * ny
                pos[a, 2] -= sa * nz
                pos[b, 0] += sb * nx
                pos[b, 1] += sb * ny
                pos[b, 2] += sb * nz


cdef inline void _closest(double px, double py, double pz, const double[:, ::1] C, Py_ssize_t k,
                          double* qx, double* qy, double* qz) noexcept nogil:
    cdef double ax = C[k, 0], ay = C[k, 1], az = C[k, 2]
    cdef double ex = C[k, 3] - ax, ey = C[k, 4] - ay, ez = C[k, 5] - az
    cdef double ee = ex * ex + ey * ey + ez * ez
    cdef double t = 0.0
    if ee > 0.0:
        t = ((px - ax) * ex + (py - ay) * ey + (pz - az) * ez) / ee
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    qx[0] = ax + t * ex
    qy[0] = ay + t * ey
    qz[0] = az + t * ez


def collide(double[:, ::1] pos, const double[::1] inv_mass, const double[:, ::1] capsules,
            double margin, int max_rounds):
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t nc = capsules.shape[0]
    cdef Py_ssize_t i, k, best
    cdef int rnd
    cdef long count = 0
    cdef double px, py, pz, qx, qy, qz, dx, dy, dz, dist, depth, best_depth
    cdef double bqx, bqy, bqz, bdist, target, f
    if n == 0 or nc == 0:
        return 0
    with nogil:
        for i in range(n):
            if inv_mass[i] == 0.0:
                continue
            px = pos[i, 0]
            py = pos[i, 1]
            pz = pos[i, 2]
            for rnd in range(max_rounds):
                best = -1
                best_depth = _CONTACT_TOL
                bqx = 0.0
                bqy = 0.0
                bqz = 0.0
                bdist = 0.0
                for k in range(nc):
                    _closest(px, py, pz, capsules, k, &qx, &qy, &qz)
                    dx = px - qx
                    dy = py - qy
                    dz = pz - qz
                    dist = sqrt(dx * dx + dy * dy + dz * dz)
                    depth = (capsules[k, 6] + margin) - dist
                    if depth > best_depth:
                        best = k
                        best_depth = depth
                        bqx = qx
                        bqy = qy
                        bqz = qz
                        bdist = dist
                if best < 0:
                    break
                target = capsules[best, 6] + margin
                if bdist > 0.0:
                    f = target / bdist
                    px = bqx + (px - bqx) * f
                    py = bqy + (py - bqy) * f
                    pz = bqz + (pz - bqz) * f
                else:
                    px = bqx
                    py = bqy + target
                    pz = bqz
                count += 1
                pos[i, 0] = px
                pos[i, 1] = py
                pos[i, 2] = pz
    return count


cdef inline Py_ssize_t _cell(double v, double o, double cell, Py_ssize_t dim) noexcept nogil:
    cdef double f = floor((v - o) / cell)
    if f < 0.0:
        return 0
    if f > <double>(dim - 1):
        return dim - 1
    return <Py_ssize_t>f


def nn_distances(const double[:, ::1] queries, const double[:, ::1] points, origin, double cell, dims,
                 const long long[::1] cell_start, const long long[::1] order):
    cdef Py_ssize_t nq = queries.shape[0]
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef Py_ssize_t gx = dims[0], gy = dims[1], gz = dims[2]
    cdef Py_ssize_t maxr = max(gx, max(gy, gz))
    out_arr = np.empty(nq, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t qi, cx, cy, cz, r, ix, iy, iz, cid, s, j, zstep
    cdef double qx, qy, qz, best, dx, dy, dz, d2, rc
    cdef bint edge_x, full
    with nogil:
        for qi in range(nq):
            qx = queries[qi, 0]
            qy = queries[qi, 1]
            qz = queries[qi, 2]
            cx = _cell(qx, ox, cell, gx)
            cy = _cell(qy, oy, cell, gy)
            cz = _cell(qz, oz, cell, gz)
            best = -1.0
            r = 0
            while r <= maxr:
                for ix in range(cx - r, cx + r + 1):
                    if ix < 0 or ix >= gx:
                        continue
                    edge_x = ix == cx - r or ix == cx + r
                    for iy in range(cy - r, cy + r + 1):
                        if iy < 0 or iy >= gy:
                            continue
                        full = edge_x or iy == cy - r or iy == cy + r
                        if full or r == 0:
                            zstep = 1
                        else:
                            zstep = 2 * r
                        iz = cz - r
                        while iz <= cz + r:
                            if iz >= 0 and iz < gz:
                                cid = (ix * gy + iy) * gz + iz
                                for s in range(cell_start[cid], cell_start[cid + 1]):
                                    j = order[s]
                                    dx = qx - points[j, 0]
                                    dy = qy - points[j, 1]
                                    dz = qz - points[j, 2]
                                    d2 = dx * dx + dy * dy + dz * dz
                                    if best < 0.0 or d2 < best:
                                        best = d2
                            iz += zstep
                rc = r * cell
                if best >= 0.0 and best <= rc * rc:
                    break
                r += 1
            out[qi] = sqrt(best)
    return out_arr
