"""Pure-Python fallback kernels for the hot loops.

Two kernels live here: the physics substep and the observation rasterizer.
The compiled extension `_speed` mirrors both operation for operation, and the
two backends must stay bit-identical (the extension is compiled with
-ffp-contract=off for exactly this reason). Any change here has to be ported
to `_speed.pyx` with the same arithmetic in the same order.
"""

import math

import numpy as np

from .constants import (
    BAUMGARTE,
    K_AGENT,
    K_DANGER,
    K_FENCE,
    K_RAMP,
    S_BOX,
    S_CIRCLE,
    SLOP,
)


def substep_kernel(
    kind,
    shape,
    radius,
    hx,
    hy,
    inv_mass,
    restitution,
    drag,
    uphill,
    ramp_idx,
    agent_idx,
    px,
    py,
    vx,
    vy,
    elev,
    force_idx,
    fx,
    fy,
    dt,
    half_extent,
    fence_height,
    ramp_gain,
    ev_a,
    ev_b,
    ev_j,
):
    """One physics substep; mutates px/py/vx/vy/elev in place.

    Returns the number of contact events written into ev_a/ev_b/ev_j
    (body indices and normal impulse magnitude, iteration order).
    """
    n = kind.shape[0]

    # 1. semi-implicit Euler with linear drag: v' = (v + F/m dt) * (1 - c dt)
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

    # 2. agent elevation from ramp overlap. The agent counts as "on the ramp"
    # while its circle overlaps the ramp footprint; progress is the center's
    # position along the uphill axis, clamped to [0, 1].
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
            t = (cx + hx[r]) / (2.0 * hx[r])
        elif u == 1:
            t = (hx[r] - cx) / (2.0 * hx[r])
        elif u == 2:
            t = (cy + hy[r]) / (2.0 * hy[r])
        else:
            t = (hy[r] - cy) / (2.0 * hy[r])
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cand = ramp_gain * t
        if cand > e_new:
            e_new = cand
    elev[agent_idx] = e_new

    # 3. narrow phase + sequential impulses (one pass) + positional projection
    n_ev = 0
    agent_elev = elev[agent_idx]
    for i in range(n - 1):
        wi = inv_mass[i]
        ki = kind[i]
        for j in range(i + 1, n):
            wj = inv_mass[j]
            if wi == 0.0 and wj == 0.0:
                continue
            kj = kind[j]
            # danger regions are sensors, ramps are walkable for the agent
            if ki == K_DANGER or kj == K_DANGER:
                continue
            if ki == K_RAMP and kj == K_AGENT:
                continue
            if kj == K_RAMP and ki == K_AGENT:
                continue
            # an elevated agent passes over fences; so does one whose center
            # is already inside the fence box (mid-crossing after the ramp)
            if ki == K_FENCE and kj == K_AGENT:
                if agent_elev >= fence_height:
                    continue
                if abs(px[j] - px[i]) < hx[i] and abs(py[j] - py[i]) < hy[i]:
                    continue
            elif kj == K_FENCE and ki == K_AGENT:
                if agent_elev >= fence_height:
                    continue
                if abs(px[i] - px[j]) < hx[j] and abs(py[i] - py[j]) < hy[j]:
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
                d = math.sqrt(d2)
                if d > 1e-12:
                    nx = dx / d
                    ny = dy / d
                else:
                    nx = 1.0
                    ny = 0.0
                pen = rs - d
            elif si == S_BOX and sj == S_BOX:
                dx = px[j] - px[i]
                ox = hx[i] + hx[j] - abs(dx)
                if ox <= 0.0:
                    continue
                dy = py[j] - py[i]
                oy = hy[i] + hy[j] - abs(dy)
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
                    sgn = -1.0  # normal below points box->circle; i->j flips it
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
                    # circle center inside the box: least-overlap axis
                    ox = hx[b] - abs(rx)
                    oy = hy[b] - abs(ry)
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
                    d = math.sqrt(d2)
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

    # 4. containment belt: the walls already stop everything, this guarantees
    # the bound even if a future change breaks them
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


def raster_kernel(draw_idx, shape, radius, hx, hy, px, py, colors, half_extent, out):
    """Paint bodies onto a pre-filled square RGB byte buffer, painter order.

    draw_idx lists body indices back-to-front; colors[k] is the RGB for
    draw_idx[k]. A pixel is covered when its center lies inside the shape
    (boundary inclusive). The expressions below match _speed.pyx exactly.
    """
    size = out.shape[0]
    step = (2.0 * half_extent) / size
    cols = (np.arange(size, dtype=np.float64) + 0.5) * step - half_extent
    rows = half_extent - (np.arange(size, dtype=np.float64) + 0.5) * step
    for k in range(draw_idx.shape[0]):
        i = draw_idx[k]
        bx = px[i]
        by = py[i]
        if shape[i] == S_CIRCLE:
            ex = radius[i]
            ey = radius[i]
        else:
            ex = hx[i]
            ey = hy[i]
        c_lo = max(int(math.floor((bx - ex + half_extent) / step)) - 1, 0)
        c_hi = min(int(math.floor((bx + ex + half_extent) / step)) + 1, size - 1)
        r_lo = max(int(math.floor((half_extent - (by + ey)) / step)) - 1, 0)
        r_hi = min(int(math.floor((half_extent - (by - ey)) / step)) + 1, size - 1)
        if c_lo > c_hi or r_lo > r_hi:
            continue
        xs = cols[c_lo : c_hi + 1]
        ys = rows[r_lo : r_hi + 1]
        if shape[i] == S_CIRCLE:
            dx2 = (xs - bx) * (xs - bx)
            dy2 = (ys - by) * (ys - by)
            mask = dy2[:, None] + dx2[None, :] <= radius[i] * radius[i]
        else:
            mask = (np.abs(ys - by) <= ey)[:, None] & (np.abs(xs - bx) <= ex)[None, :]
        out[r_lo : r_hi + 1, c_lo : c_hi + 1][mask] = colors[k]
