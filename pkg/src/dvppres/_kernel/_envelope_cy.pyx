# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython backend for the worst-case envelope kernel.

Same algorithm as envelope_np: per-cell prefix structures (analytic
stationary points + segment-local sweep table) answer every per-segment
range-extremum query in O(1).  The scan loop runs without the GIL so the
Python layer can spread row chunks over threads.
"""
from libc.math cimport atan2, cos, exp, fabs, floor, sin, sqrt, M_PI, NAN
from libc.stdlib cimport free, malloc

BACKEND_NAME = "cython"

DEF BIG = 1e300


cdef struct CellConsts:
    double H
    double decay
    double wd
    double eta
    double phi
    double gain
    int ok


cdef CellConsts _cell_constants(double h0, double d0, double r, double t_sg,
                                double h_dvpp, double d_dvpp) nogil:
    cdef CellConsts c
    cdef double H = h0 + h_dvpp
    cdef double D = d0 + d_dvpp
    cdef double zeta = (2.0 * H + D * t_sg) / (2.0 * sqrt(2.0 * t_sg * H * (r + D)))
    cdef double wn = sqrt((D + r) / (2.0 * H * t_sg))
    cdef double b
    c.ok = 0
    if zeta >= 1.0:
        return c
    c.H = H
    c.decay = zeta * wn
    c.wd = wn * sqrt(1.0 - zeta * zeta)
    b = (t_sg * wn * wn - c.decay) / c.wd
    c.eta = sqrt(1.0 + b * b)
    c.phi = atan2(-1.0, b)
    c.gain = 1.0 / (D + r)
    c.ok = 1
    return c


cdef int _cell_envelope(CellConsts cc, double[:, ::1] seg_len, double[:, ::1] mag,
                        int[::1] gcount, double[::1] gmax,
                        double sweep_h, double lmax,
                        double* pmax, double* pmin, double* smax, double* smin,
                        double* out, double* rocof_s, double* nadir_s, double* ss_s) nogil:
    """Envelope maxima (and optional per-scenario rows) for one cell.

    pmax/pmin sized M+1, smax/smin sized J+1 by the caller.  ``out`` gets
    (rocof, nadir, ss).  rocof_s/nadir_s/ss_s may be NULL.
    """
    cdef double theta = atan2(cc.wd, cc.decay)
    cdef double delta = M_PI / cc.wd
    cdef double raw = (theta - cc.phi) / cc.wd
    cdef double s0 = raw - floor(raw / delta) * delta
    cdef double a0, q, v, w_re, w_im, z_re, z_im, tmp
    cdef Py_ssize_t M, J, m, jj, si, gi
    cdef double L, K, F1L, hi, lo, c_base, cand1, cand2, nad, ssm
    cdef Py_ssize_t kcnt, jdx
    cdef double env_r = 0.0, env_n = 0.0, env_s = 0.0
    cdef double mr

    if s0 <= 0.0:
        s0 += delta
    a0 = cc.eta * exp(-cc.decay * s0) * sin(cc.wd * s0 + cc.phi)
    q = exp(-cc.decay * delta)
    if lmax >= s0:
        M = <Py_ssize_t>floor((lmax - s0) / delta) + 1
    else:
        M = 0
    pmax[0] = -BIG
    pmin[0] = BIG
    v = a0
    for m in range(1, M + 1):
        tmp = cc.gain * (1.0 + v)
        pmax[m] = tmp if tmp > pmax[m - 1] else pmax[m - 1]
        pmin[m] = tmp if tmp < pmin[m - 1] else pmin[m - 1]
        v = v * (-q)

    J = <Py_ssize_t>floor(lmax / sweep_h + 1e-9)
    w_re = exp(-cc.decay * sweep_h) * cos(cc.wd * sweep_h)
    w_im = exp(-cc.decay * sweep_h) * sin(cc.wd * sweep_h)
    z_re = cos(cc.phi)
    z_im = sin(cc.phi)
    tmp = cc.gain * (1.0 + cc.eta * z_im)
    smax[0] = tmp
    smin[0] = tmp
    for jj in range(1, J + 1):
        tmp = z_re * w_re - z_im * w_im
        z_im = z_re * w_im + z_im * w_re
        z_re = tmp
        tmp = cc.gain * (1.0 + cc.eta * z_im)
        smax[jj] = tmp if tmp > smax[jj - 1] else smax[jj - 1]
        smin[jj] = tmp if tmp < smin[jj - 1] else smin[jj - 1]

    for si in range(seg_len.shape[0]):
        c_base = 0.0
        nad = 0.0
        ssm = 0.0
        for gi in range(gcount[si]):
            L = seg_len[si, gi]
            K = mag[si, gi]
            F1L = cc.gain * (1.0 + cc.eta * exp(-cc.decay * L) * sin(cc.wd * L + cc.phi))
            if L < s0:
                kcnt = 0
            else:
                kcnt = <Py_ssize_t>floor((L - s0) / delta) + 1
                if kcnt > M:
                    kcnt = M
            jdx = <Py_ssize_t>floor(L / sweep_h + 1e-9)
            if jdx > J:
                jdx = J
            hi = 0.0
            if F1L > hi:
                hi = F1L
            if pmax[kcnt] > hi:
                hi = pmax[kcnt]
            if smax[jdx] > hi:
                hi = smax[jdx]
            lo = 0.0
            if F1L < lo:
                lo = F1L
            if pmin[kcnt] < lo:
                lo = pmin[kcnt]
            if smin[jdx] < lo:
                lo = smin[jdx]
            cand1 = fabs(c_base + K * hi)
            cand2 = fabs(c_base + K * lo)
            if cand1 > nad:
                nad = cand1
            if cand2 > nad:
                nad = cand2
            c_base = c_base + K * F1L
            if fabs(c_base) > ssm:
                ssm = fabs(c_base)
        mr = gmax[si] / (2.0 * cc.H)
        if rocof_s != NULL:
            rocof_s[si] = mr
            nadir_s[si] = nad
            ss_s[si] = ssm
        if mr > env_r:
            env_r = mr
        if nad > env_n:
            env_n = nad
        if ssm > env_s:
            env_s = ssm
    out[0] = env_r
    out[1] = env_n
    out[2] = env_s
    return 0


cdef Py_ssize_t _workspace_sizes(double h0, double d0, double r, double t_sg,
                                 double[::1] h_vals, double[::1] d_vals,
                                 double sweep_h, double lmax) nogil:
    """Upper bound on stationary-point count over all cells (wd is largest
    at the smallest H and largest D of the scan)."""
    cdef double wd_max = 0.0
    cdef CellConsts cc
    cdef Py_ssize_t i, j
    for i in range(h_vals.shape[0]):
        for j in range(d_vals.shape[0]):
            cc = _cell_constants(h0, d0, r, t_sg, h_vals[i], d_vals[j])
            if cc.ok and cc.wd > wd_max:
                wd_max = cc.wd
    if wd_max <= 0.0:
        return 4
    return <Py_ssize_t>floor(lmax * wd_max / M_PI) + 4


def point_metrics(double h0, double d0, double r, double t_sg,
                  double h_dvpp, double d_dvpp,
                  double[:, ::1] seg_len, double[:, ::1] mag,
                  int[::1] gcount, double[::1] gmax,
                  double sweep_h, double lmax, double horizon):
    """Per-scenario metrics at one point; None when overdamped."""
    import numpy as np
    cdef CellConsts cc = _cell_constants(h0, d0, r, t_sg, h_dvpp, d_dvpp)
    if not cc.ok:
        return None
    cdef Py_ssize_t M = <Py_ssize_t>floor(lmax * cc.wd / M_PI) + 4
    cdef Py_ssize_t J = <Py_ssize_t>floor(lmax / sweep_h + 1e-9) + 2
    cdef Py_ssize_t S = seg_len.shape[0]
    rocof = np.empty(S)
    nadir = np.empty(S)
    ss = np.empty(S)
    cdef double[::1] rocof_v = rocof
    cdef double[::1] nadir_v = nadir
    cdef double[::1] ss_v = ss
    cdef double out[3]
    cdef double* pmax = <double*>malloc((M + 2) * sizeof(double))
    cdef double* pmin = <double*>malloc((M + 2) * sizeof(double))
    cdef double* smax = <double*>malloc((J + 2) * sizeof(double))
    cdef double* smin = <double*>malloc((J + 2) * sizeof(double))
    if pmax == NULL or pmin == NULL or smax == NULL or smin == NULL:
        free(pmax); free(pmin); free(smax); free(smin)
        raise MemoryError()
    try:
        with nogil:
            _cell_envelope(cc, seg_len, mag, gcount, gmax, sweep_h, lmax,
                           pmax, pmin, smax, smin, out,
                           &rocof_v[0] if S else NULL,
                           &nadir_v[0] if S else NULL,
                           &ss_v[0] if S else NULL)
    finally:
        free(pmax); free(pmin); free(smax); free(smin)
    return rocof, nadir, ss


def scan_rows(double h0, double d0, double r, double t_sg,
              double[::1] h_vals, double[::1] d_vals,
              double[:, ::1] seg_len, double[:, ::1] mag,
              int[::1] gcount, double[::1] gmax,
              double sweep_h, double lmax, double horizon,
              double rocof_lim, double nadir_lim, double ss_lim,
              double[:, ::1] out_rocof, double[:, ::1] out_nadir,
              double[:, ::1] out_ss, signed char[:, ::1] out_cause,
              Py_ssize_t i0, Py_ssize_t i1):
    """Fill rows [i0, i1) of the region matrices."""
    cdef Py_ssize_t M_cap, J_cap, i, j
    cdef CellConsts cc
    cdef double out[3]
    cdef double* pmax
    cdef double* pmin
    cdef double* smax
    cdef double* smin
    with nogil:
        M_cap = _workspace_sizes(h0, d0, r, t_sg, h_vals, d_vals, sweep_h, lmax)
        J_cap = <Py_ssize_t>floor(lmax / sweep_h + 1e-9) + 2
    pmax = <double*>malloc((M_cap + 2) * sizeof(double))
    pmin = <double*>malloc((M_cap + 2) * sizeof(double))
    smax = <double*>malloc((J_cap + 2) * sizeof(double))
    smin = <double*>malloc((J_cap + 2) * sizeof(double))
    if pmax == NULL or pmin == NULL or smax == NULL or smin == NULL:
        free(pmax); free(pmin); free(smax); free(smin)
        raise MemoryError()
    try:
        with nogil:
            for i in range(i0, i1):
                for j in range(d_vals.shape[0]):
                    cc = _cell_constants(h0, d0, r, t_sg, h_vals[i], d_vals[j])
                    if not cc.ok:
                        out_rocof[i, j] = NAN
                        out_nadir[i, j] = NAN
                        out_ss[i, j] = NAN
                        out_cause[i, j] = 4
                        continue
                    _cell_envelope(cc, seg_len, mag, gcount, gmax, sweep_h,
                                   lmax, pmax, pmin, smax, smin, out,
                                   NULL, NULL, NULL)
                    out_rocof[i, j] = out[0]
                    out_nadir[i, j] = out[1]
                    out_ss[i, j] = out[2]
                    if out[0] > rocof_lim:
                        out_cause[i, j] = 1
                    elif out[1] > nadir_lim:
                        out_cause[i, j] = 2
                    elif out[2] > ss_lim:
                        out_cause[i, j] = 3
                    else:
                        out_cause[i, j] = 0
    finally:
        free(pmax); free(pmin); free(smax); free(smin)
