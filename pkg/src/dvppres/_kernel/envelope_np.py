"""NumPy backend for the worst-case envelope kernel.

Implements the identical algorithm as the Cython extension: per (H, D)
cell, range extrema of the unit step response are answered from two prefix
structures built once per cell,

  * the complete list of interior stationary points (analytic, geometric
    recurrence along the damped oscillation), and
  * a segment-local dense sweep table with a fixed step (safety net),

so every per-segment query is O(1) instead of a fresh dense evaluation.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "numpy"

_BIG = 1e300


def _cell_constants(h0, d0, r, t_sg, h_dvpp, d_dvpp):
    """Second-order constants for one cell; None when overdamped."""
    H = h0 + h_dvpp
    D = d0 + d_dvpp
    zeta = (2.0 * H + D * t_sg) / (2.0 * math.sqrt(2.0 * t_sg * H * (r + D)))
    wn = math.sqrt((D + r) / (2.0 * H * t_sg))
    if zeta >= 1.0:
        return None
    decay = zeta * wn
    wd = wn * math.sqrt(1.0 - zeta * zeta)
    b = (t_sg * wn * wn - decay) / wd
    eta = math.sqrt(1.0 + b * b)
    phi = math.atan2(-1.0, b)
    gain = 1.0 / (D + r)
    return H, decay, wd, eta, phi, gain


def _prefix_structures(decay, wd, eta, phi, gain, lmax, sweep_h):
    """Stationary-point and sweep prefix max/min tables for one cell."""
    # interior stationary points s_m = s0 + m*pi/wd, values follow a
    # geometric sign-alternating recurrence
    theta = math.atan2(wd, decay)
    delta = math.pi / wd
    raw = (theta - phi) / wd
    s0 = raw - math.floor(raw / delta) * delta
    if s0 <= 0.0:
        s0 += delta
    a0 = eta * math.exp(-decay * s0) * math.sin(wd * s0 + phi)
    q = math.exp(-decay * delta)
    M = int(math.floor((lmax - s0) / delta)) + 1 if lmax >= s0 else 0
    if M > 0:
        powers = np.cumprod(np.full(M, -q))            # (-q)^1 .. (-q)^M
        vals = gain * (1.0 + a0 * np.concatenate(([1.0], powers[:-1])))
        pmax = np.concatenate(([-_BIG], np.maximum.accumulate(vals)))
        pmin = np.concatenate(([_BIG], np.minimum.accumulate(vals)))
    else:
        pmax = np.array([-_BIG])
        pmin = np.array([_BIG])

    # dense sweep table on the segment-local lattice j*sweep_h
    J = int(math.floor(lmax / sweep_h + 1e-9))
    w = complex(math.cos(wd * sweep_h), math.sin(wd * sweep_h)) * math.exp(-decay * sweep_h)
    z = np.empty(J + 1, dtype=complex)
    z[0] = complex(math.cos(phi), math.sin(phi))
    if J > 0:
        z[1:] = z[0] * np.cumprod(np.full(J, w))
    tab = gain * (1.0 + eta * z.imag)
    smax = np.maximum.accumulate(tab)
    smin = np.minimum.accumulate(tab)
    return s0, delta, M, pmax, pmin, J, smax, smin


def _cell_scenarios(consts, batch_arrays, sweep_h):
    """Per-scenario (rocof, nadir, ss) in model units for one cell."""
    H, decay, wd, eta, phi, gain = consts
    seg_len, mag, gmax, lmax = batch_arrays
    s0, delta, M, pmax, pmin, J, smax, smin = _prefix_structures(
        decay, wd, eta, phi, gain, lmax, sweep_h)

    F1L = gain * (1.0 + eta * np.exp(-decay * seg_len) * np.sin(wd * seg_len + phi))
    kcnt = np.where(seg_len < s0, 0,
                    np.minimum(M, np.floor((seg_len - s0) / delta).astype(np.int64) + 1))
    jidx = np.clip(np.floor(seg_len / sweep_h + 1e-9).astype(np.int64), 0, J)
    hi = np.maximum(np.maximum(0.0, F1L), np.maximum(pmax[kcnt], smax[jidx]))
    lo = np.minimum(np.minimum(0.0, F1L), np.minimum(pmin[kcnt], smin[jidx]))

    kf = mag * F1L
    csum = np.cumsum(kf, axis=1)
    c_before = np.concatenate([np.zeros((kf.shape[0], 1)), csum[:, :-1]], axis=1)
    cand = np.maximum(np.abs(c_before + mag * hi), np.abs(c_before + mag * lo))
    nadir_s = cand.max(axis=1)
    ss_s = np.abs(csum).max(axis=1)
    rocof_s = gmax / (2.0 * H)
    return rocof_s, nadir_s, ss_s


def point_metrics(h0, d0, r, t_sg, h_dvpp, d_dvpp,
                  seg_len, mag, gcount, gmax, sweep_h, lmax, horizon):
    """Per-scenario metrics (model units) at one (H, D) point.

    Returns (rocof_s, nadir_s, ss_s) or None when the point is overdamped.
    """
    consts = _cell_constants(h0, d0, r, t_sg, h_dvpp, d_dvpp)
    if consts is None:
        return None
    return _cell_scenarios(consts, (seg_len, mag, gmax, lmax), sweep_h)


def scan_rows(h0, d0, r, t_sg, h_vals, d_vals,
              seg_len, mag, gcount, gmax, sweep_h, lmax, horizon,
              rocof_lim, nadir_lim, ss_lim,
              out_rocof, out_nadir, out_ss, out_cause, i0, i1):
    """Fill rows [i0, i1) of the region matrices (h index is the row)."""
    for i in range(i0, i1):
        for j in range(len(d_vals)):
            consts = _cell_constants(h0, d0, r, t_sg, h_vals[i], d_vals[j])
            if consts is None:
                out_rocof[i, j] = np.nan
                out_nadir[i, j] = np.nan
                out_ss[i, j] = np.nan
                out_cause[i, j] = 4
                continue
            rocof_s, nadir_s, ss_s = _cell_scenarios(
                consts, (seg_len, mag, gmax, lmax), sweep_h)
            mr = rocof_s.max() if len(rocof_s) else 0.0
            mn = nadir_s.max() if len(nadir_s) else 0.0
            ms = ss_s.max() if len(ss_s) else 0.0
            out_rocof[i, j] = mr
            out_nadir[i, j] = mn
            out_ss[i, j] = ms
            if mr > rocof_lim:
                out_cause[i, j] = 1
            elif mn > nadir_lim:
                out_cause[i, j] = 2
            elif ms > ss_lim:
                out_cause[i, j] = 3
            else:
                out_cause[i, j] = 0
