# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _pure.py.

Same operations in the same order as the pure kernels; built with
-ffp-contract=off so results stay bit-identical across backends. Any change
to _pure.py must be mirrored here.
"""

from libc.math cimport fabs, floor, sqrt

from .constants import BAUMGARTE as _BAUMGARTE
from .constants import K_AGENT as _K_AGENT
from .constants import K_DANGER as _K_DANGER
from .constants import K_FENCE as _K_FENCE
from .constants import K_RAMP as _K_RAMP
from .constants import S_BOX as _S_BOX
from .constants import S_CIRCLE as _S_CIRCLE
from .constants import SLOP as _SLOP

cdef double BAUMGARTE = _BAUMGARTE
cdef double SLOP = _SLOP
cdef long K_AGENT = _K_AGENT
cdef long K_DANGER = _K_DANGER
cdef long K_FENCE = _K_FENCE
cdef long K_RAMP = _K_RAMP
cdef long S_BOX = _S_BOX
cdef long S_CIRCLE = _S_CIRCLE


def substep_kernel(
    long[:] kind,
    long[:] shape,
    double[:] radius,
    double[:] hx,
    double[:] hy,
    double[:] inv_mass,
    double[:] restitution,
    double[:] drag,
    long[:] uphill,
    long[:] ramp_idx,
    long agent_idx,
    double[:] px,
    double[:] py,
    double[:] vx,
    double[:] vy,
    double[:] elev,
    long force_idx,
    double fx,
    double fy,
    double dt,
    double half_extent,
    double fence_height,
    double ramp_gain,
    long[:] ev_a,
    long[:] ev_b,
    double[:] ev_j,
):
    cdef Py_ssize_t n = kind.shape[0]
    cdef Py_ssize_t i, j, k, r, c, b
    cdef double w, vxi, vyi, damp
    cdef double e_new, ax, ay, ar, cx, cy, qx, qy, dx, dy, u_t, cand
    cdef long u
    cdef double agent_elev, wi, wj, d2, d, nx, ny, pen, rs
    cdef double ox, oy, mx, my, sgn, rx, ry, rc
    cdef double w_sum, vrx, vry, vn, jimp, e, ix, iy, depth, corr
    cdef long ki, kj, si, sj
    cdef Py_ssize_t n_ev = 0

    # 1. semi-implicit Euler with linear drag
    for i in range(n):
        w = inv_mass[i]
        if w <= 0.0:
            continue
        vxi = vx[i]
        vyi = vy[i]
        if i == force_idx:
            vxi = vxi + fx * w * dt
            vyi = vyi + fy * w * dt
        damp = 1.0 - drag[i] * dt
        if damp < 0.0:
            damp = 0.0
        vxi = vxi * damp
        vyi = vyi * damp
        px[i] = px[i] + vxi * dt
        py[i] = py[i] + vyi * dt
        vx[i] = vxi
        vy[i] = vyi

    # 2. agent elevation from ramp overlap
    e_new = 0.0
    ax = px[agent_idx]
    ay = py[agent_idx]
    ar = radius[agent_idx]
    for k in range(ramp_idx.shape[0]):
        r = ramp_idx[k]
        cx = ax - px[r]
        cy = ay - py[r]
        qx = cx
        if qx < -hx[r]:
            qx = -hx[r]
        elif qx > hx[r]:
            qx = hx[r]
        qy = cy
        if qy < -hy[r]:
            qy = -hy[r]
        elif qy > hy[r]:
            qy = hy[r]
        dx = cx - qx
        dy = cy - qy
        if dx * dx + dy * dy >= ar * ar:
            continue
        u = uphill[r]
        if u == 0:
            u_t = (cx + hx[r]) / (2.0 * hx[r])
        elif u == 1:
            u_t = (hx[r] - cx) / (2.0 * hx[r])
        elif u == 2:
            u_t = (cy + hy[r]) / (2.0 * hy[r])
        else:
            u_t = (hy[r] - cy) / (2.0 * hy[r])
        if u_t < 0.0:
            u_t = 0.0
        elif u_t > 1.0:
            u_t = 1.0
        cand = ramp_gain * u_t
        if cand > e_new:
            e_new = cand
    elev[agent_idx] = e_new

    # 3. narrow phase + impulses + positional projection
    agent_elev = elev[agent_idx]
    for i in range(n - 1):
        wi = inv_mass[i]
        ki = kind[i]
        for j in range(i + 1, n):
            wj = inv_mass[j]
            if wi == 0.0 and wj == 0.0:
                continue
            kj = kind[j]
            if ki == K_DANGER or kj == K_DANGER:
                continue
            if ki == K_RAMP and kj == K_AGENT:
                continue
            if kj == K_RAMP and ki == K_AGENT:
                continue
            if ki == K_FENCE and kj == K_AGENT:
                if agent_elev >= fence_height:
                    continue
                if fabs(px[j] - px[i]) < hx[i] and fabs(py[j] - py[i]) < hy[i]:
                    continue
            elif kj == K_FENCE and ki == K_AGENT:
                if agent_elev >= fence_height:
                    continue
                if fabs(px[i] - px[j]) < hx[j] and fabs(py[i] - py[j]) < hy[j]:
                    continue

            si = shape[i]
            sj = shape[j]
            if si == S_CIRCLE and sj == S_CIRCLE:
                dx = px[j] - px[i]
                dy = py[j] - py[i]
                rs = radius[i] + radius[j]
                d2 = dx * dx + dy * dy
                if d2 >= rs * rs:
                    continue
                d = sqrt(d2)
                if d > 1e-12:
                    nx = dx / d
                    ny = dy / d
                else:
                    nx = 1.0
                    ny = 0.0
                pen = rs - d
            elif si == S_BOX and sj == S_BOX:
                dx = px[j] - px[i]
                ox = hx[i] + hx[j] - fabs(dx)
                if ox <= 0.0:
                    continue
                dy = py[j] - py[i]
                oy = hy[i] + hy[j] - fabs(dy)
                if oy <= 0.0:
                    continue
                if ox < oy:
                    nx = 1.0 if dx >= 0.0 else -1.0
                    ny = 0.0
                    pen = ox
                else:
                    nx = 0.0
                    ny = 1.0 if dy >= 0.0 else -1.0
                    pen = oy
            else:
                if si == S_CIRCLE:
                    c = i
                    b = j
                    sgn = -1.0
                else:
                    c = j
                    b = i
                    sgn = 1.0
                rx = px[c] - px[b]
                ry = py[c] - py[b]
                qx = rx
                if qx < -hx[b]:
                    qx = -hx[b]
                elif qx > hx[b]:
                    qx = hx[b]
                qy = ry
                if qy < -hy[b]:
                    qy = -hy[b]
                elif qy > hy[b]:
                    qy = hy[b]
                if qx == rx and qy == ry:
                    ox = hx[b] - fabs(rx)
                    oy = hy[b] - fabs(ry)
                    if ox < oy:
                        mx = 1.0 if rx >= 0.0 else -1.0
                        my = 0.0
                        pen = radius[c] + ox
                    else:
                        mx = 0.0
                        my = 1.0 if ry >= 0.0 else -1.0
                        pen = radius[c] + oy
                else:
                    dx = rx - qx
                    dy = ry - qy
                    d2 = dx * dx + dy * dy
                    rc = radius[c]
                    if d2 >= rc * rc:
                        continue
                    d = sqrt(d2)
                    mx = dx / d
                    my = dy / d
                    pen = rc - d
                nx = mx * sgn
                ny = my * sgn

            w_sum = wi + wj
            vrx = vx[j] - vx[i]
            vry = vy[j] - vy[i]
            vn = vrx * nx + vry * ny
            jimp = 0.0
            if vn < 0.0:
                e = restitution[i] if restitution[i] > restitution[j] else restitution[j]
                jimp = -(1.0 + e) * vn / w_sum
                ix = jimp * nx
                iy = jimp * ny
                vx[i] = vx[i] - ix * wi
                vy[i] = vy[i] - iy * wi
                vx[j] = vx[j] + ix * wj
                vy[j] = vy[j] + iy * wj
            depth = pen - SLOP
            if depth > 0.0:
                corr = BAUMGARTE * depth / w_sum
                px[i] = px[i] - corr * nx * wi
                py[i] = py[i] - corr * ny * wi
                px[j] = px[j] + corr * nx * wj
                py[j] = py[j] + corr * ny * wj
            ev_a[n_ev] = i
            ev_b[n_ev] = j
            ev_j[n_ev] = jimp
            n_ev += 1

    # 4. containment belt
    for i in range(n):
        if inv_mass[i] > 0.0:
            if px[i] < -half_extent:
                px[i] = -half_extent
            elif px[i] > half_extent:
                px[i] = half_extent
            if py[i] < -half_extent:
                py[i] = -half_extent
            elif py[i] > half_extent:
                py[i] = half_extent

    return n_ev


def raster_kernel(
    long[:] draw_idx,
    long[:] shape,
    double[:] radius,
    double[:] hx,
    double[:] hy,
    double[:] px,
    double[:] py,
    unsigned char[:, :] colors,
    double half_extent,
    unsigned char[:, :, :] out,
):
    cdef Py_ssize_t size = out.shape[0]
    cdef double step = (2.0 * half_extent) / size
    cdef Py_ssize_t k, i, c, r, c_lo, c_hi, r_lo, r_hi
    cdef double bx, by, ex, ey, rr, xx, yy, dx, dy, dx2, dy2
    cdef unsigned char col0, col1, col2
    cdef bint circle

    for k in range(draw_idx.shape[0]):
        i = draw_idx[k]
        bx = px[i]
        by = py[i]
        circle = shape[i] == S_CIRCLE
        if circle:
            ex = radius[i]
            ey = radius[i]
        else:
            ex = hx[i]
            ey = hy[i]
        c_lo = <Py_ssize_t> floor((bx - ex + half_extent) / step) - 1
        if c_lo < 0:
            c_lo = 0
        c_hi = <Py_ssize_t> floor((bx + ex + half_extent) / step) + 1
        if c_hi > size - 1:
            c_hi = size - 1
        r_lo = <Py_ssize_t> floor((half_extent - (by + ey)) / step) - 1
        if r_lo < 0:
            r_lo = 0
        r_hi = <Py_ssize_t> floor((half_extent - (by - ey)) / step) + 1
        if r_hi > size - 1:
            r_hi = size - 1
        if c_lo > c_hi or r_lo > r_hi:
            continue
        col0 = colors[k, 0]
        col1 = colors[k, 1]
        col2 = colors[k, 2]
        rr = radius[i] * radius[i]
        for r in range(r_lo, r_hi + 1):
            yy = half_extent - (r + 0.5) * step
            dy = yy - by
            dy2 = dy * dy
            for c in range(c_lo, c_hi + 1):
                xx = (c + 0.5) * step - half_extent
                dx = xx - bx
                if circle:
                    dx2 = dx * dx
                    if dy2 + dx2 <= rr:
                        out[r, c, 0] = col0
                        out[r, c, 1] = col1
                        out[r, c, 2] = col2
                else:
                    if fabs(dy) <= ey and fabs(dx) <= ex:
                        out[r, c, 0] = col0
                        out[r, c, 1] = col1
                        out[r, c, 2] = col2
