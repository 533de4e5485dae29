"""Numpy implementations of the numerical kernels.

Signature-compatible with the compiled extension ``qcdi._core``; the active
backend is chosen in ``qcdi.kernels``.  All kernels take the Pascal table
``binom`` produced by ``qcdi.grid.binom_table`` with ``binom[n, r] = C(n, r)``.

Grid points of resolution ``G`` on the simplex with ``M+1`` coordinates are
integer compositions ``k`` of ``G`` kept in lexicographic order; ``rank``
maps a composition to its position in that order.
"""

from __future__ import annotations

import numpy as np


def rank(ks, G, binom):
    """Lexicographic position of each composition row of ``ks``."""
    ks = np.asarray(ks, dtype=np.int64)
    n, mp1 = ks.shape
    m_hyp = mp1 - 1
    out = np.zeros(n, dtype=np.int64)
    rem = np.full(n, int(G), dtype=np.int64)
    # Count compositions that precede ks: at slot i every smaller k_i value
    # contributes a full block of suffix compositions (hockey-stick sum).
    for i in range(m_hyp):
        m = m_hyp - i
        out += binom[rem + m, m] - binom[rem - ks[:, i] + m, m]
        rem -= ks[:, i]
    return out


def _rank_from_cumulative(v, G, binom):
    # v holds nondecreasing cumulative coordinates (n, M); convert to the
    # composition (first differences, last entry G - v[-1]) and rank it.
    n, m_hyp = v.shape
    ks = np.empty((n, m_hyp + 1), dtype=np.int64)
    ks[:, 0] = v[:, 0]
    if m_hyp > 1:
        ks[:, 1:m_hyp] = v[:, 1:] - v[:, :-1]
    ks[:, m_hyp] = G - v[:, -1]
    return rank(ks, G, binom)


def locate(points, G, binom):
    """Vertices and barycentric weights of each point's grid cell.

    Rows of ``points`` are nonnegative with positive sum; they are
    renormalized internally, so unnormalized posterior weights can be passed
    directly.  Returns ``(idx, wgt)`` with shapes (n, M+1): ``idx`` ranks of
    the cell vertices, ``wgt`` the matching convex weights.  The cell chain
    lives in cumulative coordinates ``w_j = G * (pi_0 + .. + pi_{j-1})``,
    where the simplex maps to the nondecreasing lattice paths; fractional
    parts are inserted largest first, ties toward the higher index, which
    keeps every chain vertex a valid path.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, mp1 = pts.shape
    m_hyp = mp1 - 1
    g = float(G)
    s = pts.sum(axis=1)
    w = np.cumsum(pts[:, :m_hyp], axis=1) * (g / s)[:, None]
    np.clip(w, 0.0, g, out=w)
    u = np.floor(w)
    np.minimum(u, g - 1.0, out=u)
    f = w - u
    jidx = np.broadcast_to(np.arange(m_hyp), f.shape)
    order = np.lexsort((jidx, f), axis=1)[:, ::-1]
    fs = np.take_along_axis(f, order, axis=1)

    wgt = np.empty((n, mp1), dtype=np.float64)
    wgt[:, 0] = 1.0 - fs[:, 0]
    if m_hyp > 1:
        wgt[:, 1:m_hyp] = fs[:, : m_hyp - 1] - fs[:, 1:]
    wgt[:, m_hyp] = fs[:, m_hyp - 1]

    idx = np.empty((n, mp1), dtype=np.int64)
    v = u.astype(np.int64)
    idx[:, 0] = _rank_from_cumulative(v, G, binom)
    rows = np.arange(n)
    for t in range(m_hyp):
        v[rows, order[:, t]] += 1
        idx[:, t + 1] = _rank_from_cumulative(v, G, binom)
    return idx, wgt


def nearest(points, G, binom):
    """Rank of the grid point nearest to each row (largest-remainder rounding).

    Scales each row to sum G, floors, then distributes the leftover units to
    the largest fractional remainders, ties toward the lower index.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, mp1 = pts.shape
    s = pts.sum(axis=1)
    y = pts * (float(G) / s)[:, None]
    base = np.floor(y).astype(np.int64)
    rem = y - base
    deficit = int(G) - base.sum(axis=1)
    jidx = np.broadcast_to(np.arange(mp1), rem.shape)
    order = np.lexsort((jidx, -rem), axis=1)
    inc_sorted = (np.arange(mp1)[None, :] < deficit[:, None]).astype(np.int64)
    inc = np.empty_like(base)
    np.put_along_axis(inc, order, inc_sorted, axis=1)
    return rank(base + inc, G, binom)


def update_batch(beliefs, symbols, fmat, p, nu):
    """One posterior update per row; returns (new_beliefs, totals).

    Rows whose predictive mass is zero are returned as all-zero with
    ``totals`` entry 0; the caller decides how to escalate.
    """
    b = np.asarray(beliefs, dtype=np.float64)
    x = np.asarray(symbols, dtype=np.int64)
    fx = fmat[:, x].T
    d = np.empty_like(b)
    d[:, 0] = (1.0 - p) * b[:, 0] * fx[:, 0]
    d[:, 1:] = (b[:, 1:] + np.outer(b[:, 0] * p, nu)) * fx[:, 1:]
    tot = d.sum(axis=1)
    new = np.divide(d, tot[:, None], out=np.zeros_like(d), where=tot[:, None] > 0.0)
    return new, tot


def expected_next_value(beliefs, values, fmat, p, nu, G, binom):
    """One-step expected interpolated value at each belief row.

    Computes sum_x D(pi, x) * v_grid(posterior(pi, x)) with v_grid the
    simplex interpolation of ``values``; symbols are accumulated in
    ascending order so results are reproducible bit-for-bit per backend.
    """
    b = np.asarray(beliefs, dtype=np.float64)
    n, mp1 = b.shape
    n_sym = fmat.shape[1]
    d0 = (1.0 - p) * b[:, 0]
    mix = b[:, 1:] + np.outer(b[:, 0] * p, nu)
    acc = np.zeros(n, dtype=np.float64)
    dx = np.empty((n, mp1), dtype=np.float64)
    for sym in range(n_sym):
        dx[:, 0] = d0 * fmat[0, sym]
        dx[:, 1:] = mix * fmat[1:, sym]
        tot = dx.sum(axis=1)
        live = tot > 0.0
        if live.all():
            idx, wgt = locate(dx, G, binom)
            acc += tot * np.einsum("ij,ij->i", values[idx], wgt)
        elif live.any():
            idx, wgt = locate(dx[live], G, binom)
            acc[live] += tot[live] * np.einsum("ij,ij->i", values[idx], wgt)
    return acc
