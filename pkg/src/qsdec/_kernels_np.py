"""Numpy fallback for the hot lattice kernel (same contract as _qskernels).

Phases are generated by repeated doubling of the per-step rotation instead of
dense `exp` calls, and the envelope window is read as a slice of one global
table whenever the per-row shear lands on the lattice (true for the preset
surfaces); otherwise it falls back to interpolation.
"""

from __future__ import annotations

import numpy as np


def _unit_powers(rot: complex, count: int) -> np.ndarray:
    """[1, rot, rot^2, ..., rot^(count-1)] by repeated doubling."""
    out = np.empty(count, dtype=np.complex128)
    if count == 0:
        return out
    out[0] = 1.0
    filled = 1
    while filled < count:
        take = min(filled, count - filled)
        out[filled : filled + take] = out[:take] * (out[filled - 1] * rot)
        filled += take
    return out


def _interp_clamped(tab: np.ndarray, tab_R: float, tab_du: float, u: np.ndarray):
    pos = np.clip((u + tab_R) / tab_du, 0, len(tab) - 1.001)
    idx = pos.astype(np.int64)
    frac = pos - idx
    vals = tab[idx] + frac * (tab[idx + 1] - tab[idx])
    return np.where(np.abs(u) < tab_R, vals, 0.0)


def rescaled_accum(rows, row_factor, j0, nj, h, delta, f1, f2, shear,
                   phi_tab, psi_tab, psi_p_tab, tab_R, tab_du, env_R,
                   p_half, w_coarse, w_i0, w_si, w_j0, w_sj,
                   den_stride, den_out, rowbuf=None, wrow_scratch=None):
    """Weighted lattice accumulation of |sum_k f_k|^p (returned) and the
    per-cap |f_k|^p sums (added into den_out), over the given x1 rows."""
    rows = np.asarray(rows, dtype=np.int64)
    nc = len(f1)
    step_u = delta * delta * h
    inv = 1.0 / tab_du

    # global envelope grids indexed by m with u = step_u * m, when the shears
    # are lattice-aligned (off = i * shear / delta integral)
    offs = np.multiply.outer(rows.astype(float), np.asarray(shear) / delta)
    aligned = np.allclose(offs, np.round(offs), atol=1e-9)
    if aligned:
        offs_i = np.round(offs).astype(np.int64)
        m_lo = j0 + int(offs_i.min()) - 1
        m_hi = j0 + nj + int(offs_i.max()) + 1
        m_grid = np.arange(m_lo, m_hi)
        u_grid = step_u * m_grid
        psi_grid = _interp_clamped(psi_tab, tab_R, tab_du, u_grid)
        psi_p_grid = _interp_clamped(psi_p_tab, tab_R, tab_du, u_grid)

    jcols = np.arange(nj)
    wpos = np.clip((jcols - w_j0) / w_sj, 0, w_coarse.shape[1] - 1.001)
    wlo = wpos.astype(np.int64)
    wfrac = wpos - wlo

    num = 0.0
    buf = np.empty(nj, dtype=np.complex128)
    for r, i in enumerate(rows):
        factor = row_factor[r]
        x1 = i * h
        phi1 = float(_interp_clamped(phi_tab, tab_R, tab_du, np.array([delta * x1]))[0])
        if abs(phi1) < 1e-14:
            continue
        # blended coarse weight row, then per-column interpolation
        ri = np.clip((i - w_i0) / w_si, 0, w_coarse.shape[0] - 1.001)
        rlo = min(int(ri), w_coarse.shape[0] - 2)
        rfrac = ri - rlo
        wrow_c = w_coarse[rlo] + rfrac * (w_coarse[rlo + 1] - w_coarse[rlo])
        wrow = wrow_c[wlo] + wfrac * (wrow_c[wlo + 1] - wrow_c[wlo])

        buf[:] = 0
        for k in range(nc):
            base_u = delta * x1 * shear[k] + step_u * j0
            ja = max(0, int(np.floor((-env_R - base_u) / step_u)) + 1)
            jb = min(nj, int(np.floor((env_R - base_u) / step_u)) + 1)
            if ja >= jb:
                continue
            W = jb - ja
            if aligned:
                base_m = int(offs_i[r, k]) + j0 + ja - m_lo
                psi_w = psi_grid[base_m : base_m + W]
                psi_p_w = psi_p_grid[base_m : base_m + W : den_stride]
            else:
                u = base_u + step_u * (ja + np.arange(W))
                psi_w = _interp_clamped(psi_tab, tab_R, tab_du, u)
                psi_p_w = _interp_clamped(psi_p_tab, tab_R, tab_du, u[::den_stride])
            th0 = 2 * np.pi * np.mod(f1[k] * x1 + f2[k] * (j0 + ja) * h, 1.0)
            rot = np.exp(2j * np.pi * f2[k] * h)
            phases = np.exp(1j * th0) * _unit_powers(rot, W)
            buf[ja:jb] += (phi1 * psi_w) * phases
            den_out[k] += (
                factor * phi1 ** (2 * p_half) * den_stride
                * float(np.dot(wrow[ja:jb:den_stride][: len(psi_p_w)], psi_p_w))
            )
        m = buf.real**2 + buf.imag**2
        num += factor * float(np.dot(wrow, m**p_half))
    return num
