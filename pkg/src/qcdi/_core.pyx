# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the numerical kernels.

Mirrors the signatures and semantics of ``qcdi._purepy``; see that module
for the contracts.  Row-level work (cell location, posterior updates, the
one-step expected-value accumulation) runs in tight C loops.
"""

import numpy as np

from libc.math cimport floor
from libc.stdint cimport int64_t


cdef inline int64_t _rank_comp(const int64_t* k, int m_hyp, int64_t G,
                               const int64_t[:, ::1] binom) nogil:
    cdef int64_t out = 0
    cdef int64_t rem = G
    cdef int i, m
    for i in range(m_hyp):
        m = m_hyp - i
        out += binom[rem + m, m] - binom[rem - k[i] + m, m]
        rem -= k[i]
    return out


cdef inline int64_t _rank_cum(const int64_t* v, int m_hyp, int64_t G,
                              const int64_t[:, ::1] binom) nogil:
    # v holds nondecreasing cumulative coordinates of length m_hyp.
    cdef int64_t out = 0
    cdef int64_t rem = G
    cdef int64_t k
    cdef int i, m
    for i in range(m_hyp):
        m = m_hyp - i
        k = v[i] if i == 0 else v[i] - v[i - 1]
        out += binom[rem + m, m] - binom[rem - k + m, m]
        rem -= k
    return out


cdef inline void _locate_row(const double* pt, int m_hyp, int64_t G,
                             const int64_t[:, ::1] binom,
                             double* fs, int64_t* vs, int* order,
                             int64_t* out_idx, double* out_wgt) nogil:
    """Cell vertices and weights for one nonnegative row with positive sum."""
    cdef double s = 0.0
    cdef double cum = 0.0
    cdef double w, f
    cdef double g = <double> G
    cdef int j, t, a, b, key
    cdef int64_t u
    for j in range(m_hyp + 1):
        s += pt[j]
    cdef double inv = g / s
    for j in range(m_hyp):
        cum += pt[j]
        w = cum * inv
        if w < 0.0:
            w = 0.0
        elif w > g:
            w = g
        u = <int64_t> floor(w)
        if u > G - 1:
            u = G - 1
        fs[j] = w - u
        vs[j] = u
        order[j] = j
    # Insertion sort: fractional parts descending, ties toward higher index.
    for a in range(1, m_hyp):
        key = order[a]
        b = a - 1
        while b >= 0 and (
            fs[key] > fs[order[b]]
            or (fs[key] == fs[order[b]] and key > order[b])
        ):
            order[b + 1] = order[b]
            b -= 1
        order[b + 1] = key
    out_wgt[0] = 1.0 - fs[order[0]]
    for t in range(1, m_hyp):
        out_wgt[t] = fs[order[t - 1]] - fs[order[t]]
    out_wgt[m_hyp] = fs[order[m_hyp - 1]]
    out_idx[0] = _rank_cum(vs, m_hyp, G, binom)
    for t in range(m_hyp):
        vs[order[t]] += 1
        out_idx[t + 1] = _rank_cum(vs, m_hyp, G, binom)


def rank(ks, G, binom):
    ks = np.ascontiguousarray(ks, dtype=np.int64)
    cdef const int64_t[:, ::1] kv = ks
    cdef const int64_t[:, ::1] bt = binom
    cdef Py_ssize_t n = kv.shape[0]
    cdef int m_hyp = kv.shape[1] - 1
    cdef int64_t g = G
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] ov = out
    cdef Py_ssize_t i
    for i in range(n):
        ov[i] = _rank_comp(&kv[i, 0], m_hyp, g, bt)
    return out


def locate(points, G, binom):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] pv = pts
    cdef const int64_t[:, ::1] bt = binom
    cdef Py_ssize_t n = pv.shape[0]
    cdef int m_hyp = pv.shape[1] - 1
    cdef int64_t g = G
    idx = np.empty((n, m_hyp + 1), dtype=np.int64)
    wgt = np.empty((n, m_hyp + 1), dtype=np.float64)
    fs_arr = np.empty(m_hyp, dtype=np.float64)
    vs_arr = np.empty(m_hyp, dtype=np.int64)
    ord_arr = np.empty(m_hyp, dtype=np.intc)
    cdef int64_t[:, ::1] iv = idx
    cdef double[:, ::1] wv = wgt
    cdef double[::1] fs = fs_arr
    cdef int64_t[::1] vs = vs_arr
    cdef int[::1] ordv = ord_arr
    cdef Py_ssize_t i
    for i in range(n):
        _locate_row(&pv[i, 0], m_hyp, g, bt, &fs[0], &vs[0], &ordv[0],
                    &iv[i, 0], &wv[i, 0])
    return idx, wgt


def nearest(points, G, binom):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] pv = pts
    cdef const int64_t[:, ::1] bt = binom
    cdef Py_ssize_t n = pv.shape[0]
    cdef int mp1 = pv.shape[1]
    cdef int64_t g = G
    out = np.empty(n, dtype=np.int64)
    base_arr = np.empty(mp1, dtype=np.int64)
    rem_arr = np.empty(mp1, dtype=np.float64)
    cdef int64_t[::1] ov = out
    cdef int64_t[::1] base = base_arr
    cdef double[::1] rem = rem_arr
    cdef Py_ssize_t i
    cdef int j, t, pick
    cdef int64_t deficit
    cdef double s, y, best
    for i in range(n):
        s = 0.0
        for j in range(mp1):
            s += pv[i, j]
        deficit = g
        for j in range(mp1):
            y = pv[i, j] * (g / s)
            base[j] = <int64_t> floor(y)
            rem[j] = y - base[j]
            deficit -= base[j]
        for t in range(deficit):
            pick = 0
            best = -1.0
            for j in range(mp1):
                if rem[j] > best:
                    best = rem[j]
                    pick = j
            base[pick] += 1
            rem[pick] = -2.0
        ov[i] = _rank_comp(&base[0], mp1 - 1, g, bt)
    return out


def update_batch(beliefs, symbols, fmat, double p, nu):
    b = np.ascontiguousarray(beliefs, dtype=np.float64)
    x = np.ascontiguousarray(symbols, dtype=np.int64)
    f = np.ascontiguousarray(fmat, dtype=np.float64)
    nv = np.ascontiguousarray(nu, dtype=np.float64)
    cdef const double[:, ::1] bv = b
    cdef const int64_t[::1] xv = x
    cdef const double[:, ::1] fv = f
    cdef const double[::1] nuv = nv
    cdef Py_ssize_t n = bv.shape[0]
    cdef int mp1 = bv.shape[1]
    out = np.empty((n, mp1), dtype=np.float64)
    tot = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double[::1] tv = tot
    cdef Py_ssize_t i
    cdef int j
    cdef int64_t sym
    cdef double b0, d, t
    for i in range(n):
        sym = xv[i]
        b0 = bv[i, 0]
        d = (1.0 - p) * b0 * fv[0, sym]
        ov[i, 0] = d
        t = d
        for j in range(1, mp1):
            d = (bv[i, j] + b0 * p * nuv[j - 1]) * fv[j, sym]
            ov[i, j] = d
            t += d
        tv[i] = t
        if t > 0.0:
            # true division: bit-identical to the numpy fallback, so a
            # simulation replays the same no matter the backend
            for j in range(mp1):
                ov[i, j] /= t
        else:
            for j in range(mp1):
                ov[i, j] = 0.0
    return out, tot


def expected_next_value(beliefs, values, fmat, double p, nu, G, binom):
    b = np.ascontiguousarray(beliefs, dtype=np.float64)
    vals = np.ascontiguousarray(values, dtype=np.float64)
    f = np.ascontiguousarray(fmat, dtype=np.float64)
    nv = np.ascontiguousarray(nu, dtype=np.float64)
    cdef const double[:, ::1] bv = b
    cdef const double[::1] vv = vals
    cdef const double[:, ::1] fv = f
    cdef const double[::1] nuv = nv
    cdef const int64_t[:, ::1] bt = binom
    cdef Py_ssize_t n = bv.shape[0]
    cdef int mp1 = bv.shape[1]
    cdef int m_hyp = mp1 - 1
    cdef int n_sym = fv.shape[1]
    cdef int64_t g = G
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    mix_arr = np.empty(mp1, dtype=np.float64)
    dx_arr = np.empty(mp1, dtype=np.float64)
    fs_arr = np.empty(m_hyp, dtype=np.float64)
    vs_arr = np.empty(m_hyp, dtype=np.int64)
    ord_arr = np.empty(m_hyp, dtype=np.intc)
    idx_arr = np.empty(mp1, dtype=np.int64)
    wgt_arr = np.empty(mp1, dtype=np.float64)
    cdef double[::1] mix = mix_arr
    cdef double[::1] dx = dx_arr
    cdef double[::1] fs = fs_arr
    cdef int64_t[::1] vs = vs_arr
    cdef int[::1] ordv = ord_arr
    cdef int64_t[::1] iv = idx_arr
    cdef double[::1] wv = wgt_arr
    cdef Py_ssize_t i
    cdef int j, sym, t
    cdef double b0, acc, tot, val, d
    for i in range(n):
        b0 = bv[i, 0]
        mix[0] = (1.0 - p) * b0
        for j in range(1, mp1):
            mix[j] = bv[i, j] + b0 * p * nuv[j - 1]
        acc = 0.0
        for sym in range(n_sym):
            tot = 0.0
            for j in range(mp1):
                d = mix[j] * fv[j, sym]
                dx[j] = d
                tot += d
            if tot <= 0.0:
                continue
            # locate renormalizes internally, so dx can stay unnormalized
            _locate_row(&dx[0], m_hyp, g, bt, &fs[0], &vs[0], &ordv[0],
                        &iv[0], &wv[0])
            val = 0.0
            for t in range(mp1):
                val += wv[t] * vv[iv[t]]
            acc += tot * val
        ov[i] = acc
    return out
