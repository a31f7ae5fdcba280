"""Pure-Python reference kernels.

Same signatures and the same floating-point operation order as the compiled
``_ckernels`` module, so both backends produce bit-identical results. Arrays
are converted to lists once per call because element access on numpy arrays
is slow from Python.
"""

from __future__ import annotations

from math import floor, sqrt

import numpy as np

BACKEND = "python"

# penetrations shallower than this count as contact, not overlap
CONTACT_TOL = 1e-13


def project_constraints(pos, inv_mass, pairs, rest, stiffness, passes):
    """Gauss-Seidel distance-constraint projection, in place on ``pos`` (n, 3).

    Constraints are visited in index order ``passes`` times. A coincident pair
    with positive rest length is separated along axis ``(a + b) % 3``.
    """
    m = len(rest)
    if m == 0 or passes <= 0:
        return
    P = pos.ravel().tolist()
    W = inv_mass.tolist()
    A = pairs[:, 0].tolist()
    B = pairs[:, 1].tolist()
    R = rest.tolist()
    K = stiffness.tolist()
    for _ in range(passes):
        for c in range(m):
            a = A[c]
            b = B[c]
            wa = W[a]
            wb = W[b]
            wsum = wa + wb
            if wsum == 0.0:
                continue
            ia = 3 * a
            ib = 3 * b
            dx = P[ia] - P[ib]
            dy = P[ia + 1] - P[ib + 1]
            dz = P[ia + 2] - P[ib + 2]
            dist = sqrt(dx * dx + dy * dy + dz * dz)
            r = R[c]
            if dist == 0.0:
                if r == 0.0:
                    continue
                axis = (a + b) % 3
                nx = 1.0 if axis == 0 else 0.0
                ny = 1.0 if axis == 1 else 0.0
                nz = 1.0 if axis == 2 else 0.0
            else:
                nx = dx / dist
                ny = dy / dist
                nz = dz / dist
            s = K[c] * (dist - r) / wsum
            sa = s * wa
            sb = s * wb
            P[ia] -= sa * nx
            P[ia + 1] -= sa * ny
            P[ia + 2] -= sa * nz
            P[ib] += sb * nx
            P[ib + 1] += sb * ny
            P[ib + 2] += sb * nz
    pos[:] = np.asarray(P).reshape(-1, 3)


def _closest_on_segment(px, py, pz, c):
    ax, ay, az, bx, by, bz = c[0], c[1], c[2], c[3], c[4], c[5]
    ex = bx - ax
    ey = by - ay
    ez = bz - az
    ee = ex * ex + ey * ey + ez * ez
    t = 0.0
    if ee > 0.0:
        t = ((px - ax) * ex + (py - ay) * ey + (pz - az) * ez) / ee
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    return ax + t * ex, ay + t * ey, az + t * ez


def collide(pos, inv_mass, capsules, margin, max_rounds):
    """Push movable particles out of capsules (rows ``p0, p1, radius``), in place.

    Each round projects a particle radially out of its most deeply penetrated
    capsule; rounds repeat until the particle is clear (to within
    ``CONTACT_TOL``) or ``max_rounds`` is reached. A particle exactly on an axis is pushed along +y. Returns the
    number of projections applied.
    """
    n = len(pos)
    nc = len(capsules)
    if n == 0 or nc == 0:
        return 0
    P = pos.ravel().tolist()
    W = inv_mass.tolist()
    C = capsules.tolist()
    count = 0
    for i in range(n):
        if W[i] == 0.0:
            continue
        i3 = 3 * i
        px = P[i3]
        py = P[i3 + 1]
        pz = P[i3 + 2]
        moved = False
        for _ in range(max_rounds):
            best = -1
            best_depth = CONTACT_TOL
            bqx = bqy = bqz = bdist = 0.0
            for k in range(nc):
                qx, qy, qz = _closest_on_segment(px, py, pz, C[k])
                dx = px - qx
                dy = py - qy
                dz = pz - qz
                dist = sqrt(dx * dx + dy * dy + dz * dz)
                depth = (C[k][6] + margin) - dist
                if depth > best_depth:
                    best = k
                    best_depth = depth
                    bqx = qx
                    bqy = qy
                    bqz = qz
                    bdist = dist
            if best < 0:
                break
            target = C[best][6] + margin
            if bdist > 0.0:
                f = target / bdist
                px = bqx + (px - bqx) * f
                py = bqy + (py - bqy) * f
                pz = bqz + (pz - bqz) * f
            else:
                px = bqx
                py = bqy + target
                pz = bqz
            moved = True
            count += 1
        if moved:
            P[i3] = px
            P[i3 + 1] = py
            P[i3 + 2] = pz
    if count:
        pos[:] = np.asarray(P).reshape(-1, 3)
    return count


def nn_distances(queries, points, origin, cell, dims, cell_start, order):
    """Exact nearest-neighbour distances from ``queries`` to a gridded point set.

    ``order`` lists point indices sorted by linear cell id and
    ``cell_start[c]:cell_start[c + 1]`` is the slice of ``order`` in cell ``c``.
    Rings of cells are scanned outward until no unvisited cell can hold a
    closer point.
    """
    Q = queries.tolist()
    X = points.tolist()
    S = cell_start.tolist()
    O = order.tolist()
    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])
    gx, gy, gz = int(dims[0]), int(dims[1]), int(dims[2])
    maxr = max(gx, gy, gz)
    out = [0.0] * len(Q)
    for qi, (qx, qy, qz) in enumerate(Q):
        cx = min(max(int(floor((qx - ox) / cell)), 0), gx - 1)
        cy = min(max(int(floor((qy - oy) / cell)), 0), gy - 1)
        cz = min(max(int(floor((qz - oz) / cell)), 0), gz - 1)
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
                    if edge_x or iy == cy - r or iy == cy + r:
                        zs = range(cz - r, cz + r + 1)
                    elif r == 0:
                        zs = (cz,)
                    else:
                        zs = (cz - r, cz + r)
                    for iz in zs:
                        if iz < 0 or iz >= gz:
                            continue
                        cid = (ix * gy + iy) * gz + iz
                        for s in range(S[cid], S[cid + 1]):
                            p = X[O[s]]
                            dx = qx - p[0]
                            dy = qy - p[1]
                            dz = qz - p[2]
                            d2 = dx * dx + dy * dy + dz * dz
                            if best < 0.0 or d2 < best:
                                best = d2
            if best >= 0.0 and best <= (r * cell) * (r * cell):
                break
            r += 1
        out[qi] = sqrt(best)
    return np.asarray(out, dtype=float)
