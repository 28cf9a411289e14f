"""Numpy implementation of the path kernels (used when the compiled module is absent).

Window integers: a p-adic value is stored as ``N = sum_k d_k p^(k - L)`` over
positions ``L <= k < L + W``; addition is addition mod ``p**W``.  Digits above
the window are tiny and dropped, digits below it are flagged as overflow.
"""
import numpy as np

RADIUS_ZERO = -(1 << 62)
RADIUS_OVER = 1 << 62


def _powers(p, W):
    return np.array([p ** i for i in range(W + 1)], dtype=np.int64)


def trailing_zeros(x, p, W):
    """Number of trailing base-p zeros of nonzero entries (garbage for zeros)."""
    x = np.array(x, dtype=np.int64, copy=True)
    tz = np.zeros(x.shape, dtype=np.int64)
    live = x != 0
    step = 1
    while step * 2 <= W:
        step *= 2
    while step >= 1:
        pk = np.int64(p ** step)
        hit = live & (x % pk == 0)
        x[hit] //= pk
        tz[hit] += step
        step //= 2
    return tz


def radius_exp(x, p, L, W):
    x = np.asarray(x, dtype=np.int64)
    out = -(L + trailing_zeros(x, p, W))
    out[x == 0] = RADIUS_ZERO
    return out


def free_increments(u, lead, rest, cdf, r_lo, p, L, W, depth):
    pw = _powers(p, W)
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, len(cdf) - 1, out=idx)
    shift = -(r_lo + idx) - L
    over = (shift < 0).astype(np.uint8)
    inside = (shift >= 0) & (shift < W)
    s = np.where(inside, shift, 0)
    k = np.minimum(depth - 1, W - s - 1)
    body = lead + p * (rest % pw[k])
    incr = np.where(inside, body * pw[s], 0).astype(np.int64)
    return incr, over


def walk(incr, over, start, center, p, L, W, a):
    """Cumulative positions; per path the sup radius about ``center`` over all
    grid points (start included), the first index leaving ``B_a(center)``
    (-1 if none) and the final position.

    Uses ``sup_j |x_j - c| = max(|x_0 - c|, max_j |x_j - x_(j-1)|)``, valid in
    any ultrametric space.
    """
    M = np.int64(p ** W)
    incr = np.asarray(incr, dtype=np.int64)
    n, m = incr.shape
    start = np.asarray(start, dtype=np.int64)
    final = start.copy()
    for j in range(m):
        final = (final + incr[:, j]) % M
    tz0 = np.where((start - center) % M == 0, W, trailing_zeros((start - center) % M, p, W))
    tz = np.where(incr == 0, W, trailing_zeros(incr, p, W))
    dead = np.cumsum(np.asarray(over, dtype=np.int64), axis=1) > 0
    tz = np.where(dead, -(1 << 40), tz)
    run = np.minimum.accumulate(np.concatenate([tz0[:, None], tz], axis=1), axis=1)
    tzmin = run[:, -1]
    sup = np.where(tzmin >= W, RADIUS_ZERO, -(L + tzmin))
    sup = np.where(dead[:, -1] if m else False, RADIUS_OVER, sup)
    exited = run < (-a - L)
    first = np.where(exited.any(axis=1), exited.argmax(axis=1), -1).astype(np.int64)
    return sup.astype(np.int64), first, final


def bridge_deltas(w, u, lead, rest, split, off, kind, rad, cdf, p, L, W, depth):
    """One bridge step per entry of ``w``; tables are flattened per ``|w|`` class
    (segment ``off[i]:off[i+1]``; class 0 is ``w = 0``, class ``W - tz`` otherwise)."""
    w = np.asarray(w, dtype=np.int64)
    n = w.shape[0]
    pw = _powers(p, W)
    M = np.int64(p ** W)
    e_idx = np.where(w == 0, 0, W - trailing_zeros(w, p, W))
    pick = np.empty(n, dtype=np.int64)
    for e in np.unique(e_idx):
        sel = e_idx == e
        lo, hi = off[e], off[e + 1]
        j = np.searchsorted(cdf[lo:hi], u[sel], side="right")
        pick[sel] = lo + np.minimum(j, hi - lo - 1)
    kd = kind[pick]
    shift = np.clip(-rad[pick] - L, 0, W - 1)
    k = np.minimum(depth - 1, W - shift - 1)
    tail = p * (rest % pw[k])
    circ = (lead + tail) * pw[shift]
    wd = (w // pw[shift]) % p
    d = 1 + split
    d = d + (d >= wd)
    delta = np.zeros(n, dtype=np.int64)
    delta = np.where(kd == 0, circ, delta)
    delta = np.where(kd == 1, (d + tail) * pw[shift], delta)
    delta = np.where(kd == 2, (w - circ) % M, delta)
    delta = np.where(kd == 4, w, delta)
    return delta.astype(np.int64), (kd == 5).astype(np.uint8)
