"""Fused relaxation loop, JIT-compiled with numba.

Semantically identical to repeating (effective_field, residual check,
select_dt, chain_step) from the public modules; kept in one compiled
loop because relaxations routinely take 1e4-1e7 steps.  The pure-numpy
path in `equilibrium.relax` remains the reference implementation and
the two are equivalence-tested.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def relax_loop(m, M, K, J, dzz, hax, hay, haz, g, dt_factor, dt_cap, dt_max,
               tol, h_floor, max_steps):
    """Relax spins m (modified in place) until the torque residual
    max_i |m_i x H_i| / max(|H_i|, h_floor) drops to tol.

    dt_factor is 2*pi/steps_per_period; dt_cap is the stiffness-derived
    stability cap on the step.  Returns (steps, elapsed_time,
    final_residual, converged).
    """
    n = m.shape[0]
    H = np.empty((n, 3))
    elapsed = 0.0
    steps = 0
    while True:
        max_h = 0.0
        resid = 0.0
        for i in range(n):
            mi_x = m[i, 0]
            mi_y = m[i, 1]
            mi_z = m[i, 2]
            inv_m = 1.0 / M[i]
            hx = hax
            hy = hay
            hz = haz
            if i + 1 < n:
                c = J[i] * inv_m
                hx += c * (m[i + 1, 0] - mi_x)
                hy += c * (m[i + 1, 1] - mi_y)
                hz += c * (m[i + 1, 2] - mi_z)
            if i > 0:
                c = J[i - 1] * inv_m
                hx -= c * (mi_x - m[i - 1, 0])
                hy -= c * (mi_y - m[i - 1, 1])
                hz -= c * (mi_z - m[i - 1, 2])
            ck = 2.0 * K[i] * inv_m
            hy -= ck * mi_y
            hz -= ck * mi_z
            hz -= dzz * M[i] * mi_z
            H[i, 0] = hx
            H[i, 1] = hy
            H[i, 2] = hz
            hmag = math.sqrt(hx * hx + hy * hy + hz * hz)
            if hmag > max_h:
                max_h = hmag
            tx = mi_y * hz - mi_z * hy
            ty = mi_z * hx - mi_x * hz
            tz = mi_x * hy - mi_y * hx
            r = math.sqrt(tx * tx + ty * ty + tz * tz) / max(hmag, h_floor)
            if r > resid:
                resid = r
        if resid <= tol:
            return steps, elapsed, resid, True
        if steps >= max_steps:
            return steps, elapsed, resid, False
        dt = min(dt_factor / max_h, dt_cap) if max_h > 0.0 else dt_max
        for i in range(n):
            hx = H[i, 0]
            hy = H[i, 1]
            hz = H[i, 2]
            hmag = math.sqrt(hx * hx + hy * hy + hz * hz)
            if hmag == 0.0:
                continue
            hx /= hmag
            hy /= hmag
            hz /= hmag
            u = m[i, 0] * hx + m[i, 1] * hy + m[i, 2] * hz
            if u > 1.0:
                u = 1.0
            elif u < -1.0:
                u = -1.0
            vx = m[i, 0] - u * hx
            vy = m[i, 1] - u * hy
            vz = m[i, 2] - u * hz
            e = math.exp(-g * hmag * dt)
            t = e * e
            denom = (1.0 + u) + t * (1.0 - u)
            u_new = ((1.0 + u) - t * (1.0 - u)) / denom
            s = 2.0 * e / denom
            ang = hmag * dt
            ca = math.cos(ang)
            sa = math.sin(ang)
            cx = hy * vz - hz * vy
            cy = hz * vx - hx * vz
            cz = hx * vy - hy * vx
            ox = u_new * hx + s * (ca * vx + sa * cx)
            oy = u_new * hy + s * (ca * vy + sa * cy)
            oz = u_new * hz + s * (ca * vz + sa * cz)
            inv_norm = 1.0 / math.sqrt(ox * ox + oy * oy + oz * oz)
            m[i, 0] = ox * inv_norm
            m[i, 1] = oy * inv_norm
            m[i, 2] = oz * inv_norm
        elapsed += dt
        steps += 1
