"""Compiled RK4 core for the polarization-resolved laser rate equations.

The hot loop lives here so the rest of the package can stay plain Python.
State is carried in the frame co-rotating with the injected field, which
makes the locked state a genuine fixed point and removes every per-step
trigonometric call: within one waveform segment the right-hand side is
autonomous.

Parameter vector layout (float64, length 10):
    0 gamma_a   1 gamma_p   2 gamma_N   3 gamma_s   4 kappa
    5 alpha     6 mu        7 k_inj     8 beta_sp   9 domega_x
"""

import numba
import numpy as np

#: steps integrated per kernel call; bounds the size of the pre-drawn
#: noise block (BLOCK x 4 float64 ~ 32 MB).
BLOCK_STEPS = 1 << 20

STATUS_OK = 0
STATUS_NONFINITE = 1


@numba.njit(cache=True)
def _rhs(ex, ey, cn, cs, a, cxl, cyl, kca, g_n, g_s, mu, k_inj):
    """Deterministic derivative in the co-rotating frame."""
    ix = ex.real * ex.real + ex.imag * ex.imag
    iy = ey.real * ey.real + ey.imag * ey.imag
    cross_im = (ey * np.conj(ex)).imag
    dex = cxl * ex + kca * (cn * ex + 1j * cs * ey) + k_inj * a
    dey = cyl * ey + kca * (cn * ey - 1j * cs * ex)
    dcn = -g_n * (cn * (1.0 + ix + iy) - mu - 2.0 * cs * cross_im)
    dcs = -g_s * cs - g_n * (cs * (ix + iy) - 2.0 * cn * cross_im)
    return dex, dey, dcn, dcs


@numba.njit(cache=True)
def rk4_block(ex, ey, cn, cs, gstep0, nsteps, dt, seg_t0, seg_amp, seg_idx,
              p, noise, rec_ix, rec_iy, rec_cn, rec_cs, sample_every):
    """Advance `nsteps` RK4 steps, recording every `sample_every`-th state.

    A sample is taken *before* the step whose global index is a multiple of
    `sample_every`; the caller records the final state itself.  Noise rows
    (4 standard normals per step) are consumed in step order, so chunked
    calls reproduce a single long call bit-for-bit.

    Returns (ex, ey, cn, cs, seg_idx, clamp_count, status, fail_step).
    """
    g_a = p[0]
    g_p = p[1]
    g_n = p[2]
    g_s = p[3]
    kap = p[4]
    alpha = p[5]
    mu = p[6]
    k_inj = p[7]
    beta_sp = p[8]
    domega = p[9]

    cxl = -(kap + g_a) - 1j * (kap * alpha + g_p) - 1j * domega
    cyl = -(kap - g_a) - 1j * (kap * alpha - g_p) - 1j * domega
    kca = kap * (1.0 + 1j * alpha)
    # complex unit-variance xi = (g1 + i g2)/sqrt(2), increment scaled by sqrt(dt)
    noise_amp = np.sqrt(beta_sp * g_n * 0.5 * dt) / np.sqrt(2.0)
    use_noise = beta_sp > 0.0 and noise.shape[0] > 0

    nseg = seg_t0.shape[0]
    nrec = rec_ix.shape[0]
    record_carriers = rec_cn.shape[0] > 0
    clamp_count = 0
    half = 0.5 * dt
    sixth = dt / 6.0

    for i in range(nsteps):
        g = gstep0 + i
        t = g * dt

        if g % sample_every == 0:
            idx = g // sample_every
            if idx < nrec:
                ix = ex.real * ex.real + ex.imag * ex.imag
                iy = ey.real * ey.real + ey.imag * ey.imag
                rec_ix[idx] = ix
                rec_iy[idx] = iy
                if record_carriers:
                    rec_cn[idx] = cn
                    rec_cs[idx] = cs
                if not (np.isfinite(ix) and np.isfinite(iy)
                        and np.isfinite(cn) and np.isfinite(cs)):
                    return ex, ey, cn, cs, seg_idx, clamp_count, STATUS_NONFINITE, g

        while seg_idx + 1 < nseg and t >= seg_t0[seg_idx + 1]:
            seg_idx += 1
        a0 = seg_amp[seg_idx]
        j = seg_idx
        th = t + half
        while j + 1 < nseg and th >= seg_t0[j + 1]:
            j += 1
        am = seg_amp[j]
        tf = t + dt
        while j + 1 < nseg and tf >= seg_t0[j + 1]:
            j += 1
        af = seg_amp[j]

        k1x, k1y, k1n, k1s = _rhs(ex, ey, cn, cs, a0,
                                  cxl, cyl, kca, g_n, g_s, mu, k_inj)
        k2x, k2y, k2n, k2s = _rhs(ex + half * k1x, ey + half * k1y,
                                  cn + half * k1n, cs + half * k1s, am,
                                  cxl, cyl, kca, g_n, g_s, mu, k_inj)
        k3x, k3y, k3n, k3s = _rhs(ex + half * k2x, ey + half * k2y,
                                  cn + half * k2n, cs + half * k2s, am,
                                  cxl, cyl, kca, g_n, g_s, mu, k_inj)
        k4x, k4y, k4n, k4s = _rhs(ex + dt * k3x, ey + dt * k3y,
                                  cn + dt * k3n, cs + dt * k3s, af,
                                  cxl, cyl, kca, g_n, g_s, mu, k_inj)

        # spontaneous-emission radicands use the pre-step carriers
        if use_noise:
            rp = cn + cs
            rm = cn - cs
            if rp < 0.0:
                rp = 0.0
                clamp_count += 1
            if rm < 0.0:
                rm = 0.0
                clamp_count += 1
            sp = np.sqrt(rp)
            sm = np.sqrt(rm)
            xi1 = complex(noise[i, 0], noise[i, 1])
            xi2 = complex(noise[i, 2], noise[i, 3])
            fx = noise_amp * (sp * xi1 + sm * xi2)
            fy = -1j * noise_amp * (sp * xi1 - sm * xi2)
        else:
            fx = 0.0 + 0.0j
            fy = 0.0 + 0.0j

        ex = ex + sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) + fx
        ey = ey + sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) + fy
        cn = cn + sixth * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
        cs = cs + sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)

    if not (np.isfinite(ex.real) and np.isfinite(ex.imag)
            and np.isfinite(ey.real) and np.isfinite(ey.imag)
            and np.isfinite(cn) and np.isfinite(cs)):
        return ex, ey, cn, cs, seg_idx, clamp_count, STATUS_NONFINITE, gstep0 + nsteps - 1

    return ex, ey, cn, cs, seg_idx, clamp_count, STATUS_OK, -1
