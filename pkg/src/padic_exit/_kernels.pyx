# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled path kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int8_t, int64_t, uint8_t

cnp.import_array()

RADIUS_ZERO = -(1 << 62)
RADIUS_OVER = 1 << 62
cdef int64_t _ZERO = -(1 << 62)
cdef int64_t _OVER = 1 << 62


def _powers(p, W):
    # Python ints: C-level ``**`` would go through floating point
    return np.array([int(p) ** i for i in range(int(W) + 1)], dtype=np.int64)


cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


cdef inline int64_t _tz(int64_t x, int64_t p) nogil:
    cdef int64_t t = 0
    if p == 2:
        return __builtin_ctzll(<unsigned long long>x)
    while x % p == 0:
        x = x // p
        t += 1
    return t


cdef inline int64_t _tz_pw(int64_t x, int64_t p, const int64_t* pw, int64_t W) nogil:
    # trailing base-p zeros of a nonzero x < p**W by binary lifting
    cdef int64_t t = 0, step = 1
    if p == 2:
        return __builtin_ctzll(<unsigned long long>x)
    while step * 2 <= W:
        step *= 2
    while step >= 1:
        if x % pw[step] == 0:
            x = x // pw[step]
            t += step
        step //= 2
    return t


cdef inline int64_t _radius(int64_t x, int64_t p, int64_t L) nogil:
    if x == 0:
        return _ZERO
    return -(L + _tz(x, p))


def trailing_zeros(x, int64_t p, int64_t W):
    cdef int64_t[::1] xv = np.ascontiguousarray(x, dtype=np.int64).ravel()
    out = np.zeros(xv.shape[0], dtype=np.int64)
    cdef int64_t[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            if xv[i] != 0:
                ov[i] = _tz(xv[i], p)
    return out.reshape(np.shape(x))


def radius_exp(x, int64_t p, int64_t L, int64_t W):
    cdef int64_t[::1] xv = np.ascontiguousarray(x, dtype=np.int64).ravel()
    out = np.empty(xv.shape[0], dtype=np.int64)
    cdef int64_t[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = _radius(xv[i], p, L)
    return out.reshape(np.shape(x))


def free_increments(u, lead, rest, cdf, int64_t r_lo, int64_t p, int64_t L, int64_t W, int64_t depth):
    cdef double[:, ::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef int64_t[:, ::1] lv = np.ascontiguousarray(lead, dtype=np.int64)
    cdef int64_t[:, ::1] rv = np.ascontiguousarray(rest, dtype=np.int64)
    cdef const double[::1] cv = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0], m = uv.shape[1], K = cv.shape[0]
    incr = np.zeros((n, m), dtype=np.int64)
    over = np.zeros((n, m), dtype=np.uint8)
    cdef int64_t[:, ::1] iv = incr
    cdef uint8_t[:, ::1] ovr = over
    pw_arr = _powers(p, W)
    cdef int64_t[::1] pw = pw_arr
    cdef Py_ssize_t i, j, lo, hi, mid
    cdef int64_t shift, k
    cdef double x
    with nogil:
        for i in range(n):
            for j in range(m):
                x = uv[i, j]
                # searchsorted(cdf, x, side="right")
                lo = 0
                hi = K
                while lo < hi:
                    mid = (lo + hi) // 2
                    if cv[mid] <= x:
                        lo = mid + 1
                    else:
                        hi = mid
                if lo > K - 1:
                    lo = K - 1
                shift = -(r_lo + lo) - L
                if shift < 0:
                    ovr[i, j] = 1
                elif shift < W:
                    k = depth - 1
                    if W - shift - 1 < k:
                        k = W - shift - 1
                    iv[i, j] = (lv[i, j] + p * (rv[i, j] % pw[k])) * pw[shift]
    return incr, over


def walk(incr, over, start, int64_t center, int64_t p, int64_t L, int64_t W, int64_t a):
    # sup |x_j - c| = max(|x_0 - c|, max_j |incr_j|) in an ultrametric space, so
    # only a running minimum of trailing zeros is needed (one modulo per step)
    cdef int64_t[:, ::1] iv = np.ascontiguousarray(incr, dtype=np.int64)
    cdef uint8_t[:, ::1] ovr = np.ascontiguousarray(over, dtype=np.uint8)
    cdef int64_t[::1] st = np.ascontiguousarray(start, dtype=np.int64)
    cdef Py_ssize_t n = iv.shape[0], m = iv.shape[1]
    pw_arr = _powers(p, W)
    cdef int64_t[::1] pw = pw_arr
    cdef int64_t M = pw_arr[W]
    cdef int64_t exit_tz = -a - L
    sup = np.empty(n, dtype=np.int64)
    first = np.empty(n, dtype=np.int64)
    final = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] sv = sup, fv = first, pv = final
    cdef Py_ssize_t i, j
    cdef int64_t pos, d, x, tz, f
    cdef bint dead
    with nogil:
        for i in range(n):
            pos = st[i]
            d = (pos - center) % M
            if d < 0:
                d += M
            tz = W if d == 0 else _tz_pw(d, p, &pw[0], W)
            f = 0 if tz < exit_tz else -1
            dead = False
            for j in range(m):
                x = iv[i, j]
                pos = (pos + x) % M
                if dead:
                    continue
                if ovr[i, j]:
                    dead = True
                    if f < 0:
                        f = j + 1
                    continue
                if tz > 0 and x % pw[tz] != 0:
                    tz = _tz_pw(x, p, &pw[0], W)
                    if f < 0 and tz < exit_tz:
                        f = j + 1
            if dead:
                sv[i] = _OVER
            elif tz >= W:
                sv[i] = _ZERO
            else:
                sv[i] = -(L + tz)
            fv[i] = f
            pv[i] = pos
    return sup, first, final


def bridge_deltas(w, u, lead, rest, split, off, kind, rad, cdf,
                  int64_t p, int64_t L, int64_t W, int64_t depth):
    cdef const int64_t[::1] wv = np.ascontiguousarray(w, dtype=np.int64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const int64_t[::1] lv = np.ascontiguousarray(lead, dtype=np.int64)
    cdef const int64_t[::1] rv = np.ascontiguousarray(rest, dtype=np.int64)
    cdef const int64_t[::1] sv = np.ascontiguousarray(split, dtype=np.int64)
    cdef const int64_t[::1] ov = np.ascontiguousarray(off, dtype=np.int64)
    cdef const int8_t[::1] kv = np.ascontiguousarray(kind, dtype=np.int8)
    cdef const int64_t[::1] radv = np.ascontiguousarray(rad, dtype=np.int64)
    cdef const double[::1] cv = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0]
    pw_arr = _powers(p, W)
    cdef int64_t[::1] pw = pw_arr
    cdef int64_t M = pw_arr[W]
    delta = np.zeros(n, dtype=np.int64)
    over = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] dv = delta
    cdef uint8_t[::1] ovr = over
    cdef Py_ssize_t i, lo, hi, mid, seg_lo, seg_hi
    cdef int64_t x, e_idx, shift, k, tail, circ, wd, d
    cdef int8_t kd
    with nogil:
        for i in range(n):
            x = wv[i]
            # table index: W - tz for nonzero w (radius -(L + tz)), 0 for w = 0
            e_idx = 0 if x == 0 else W - _tz_pw(x, p, &pw[0], W)
            seg_lo = ov[e_idx]
            seg_hi = ov[e_idx + 1]
            lo = seg_lo
            hi = seg_hi
            while lo < hi:
                mid = (lo + hi) // 2
                if cv[mid] <= uv[i]:
                    lo = mid + 1
                else:
                    hi = mid
            if lo > seg_hi - 1:
                lo = seg_hi - 1
            kd = kv[lo]
            if kd == 5:
                ovr[i] = 1
                continue
            if kd == 3:
                continue
            if kd == 4:
                dv[i] = x
                continue
            shift = -radv[lo] - L
            if shift < 0:
                shift = 0
            if shift > W - 1:
                shift = W - 1
            k = depth - 1
            if W - shift - 1 < k:
                k = W - shift - 1
            tail = p * (rv[i] % pw[k])
            if kd == 1:
                wd = (x // pw[shift]) % p
                d = 1 + sv[i]
                if d >= wd:
                    d += 1
                dv[i] = (d + tail) * pw[shift]
                continue
            circ = (lv[i] + tail) * pw[shift]
            if kd == 2:
                circ = (x - circ) % M
                if circ < 0:
                    circ += M
            dv[i] = circ
    return delta, over
