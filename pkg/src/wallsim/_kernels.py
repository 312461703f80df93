"""Event-processing kernels (numba).

All kernels consume a time-sorted schedule of (time, channel) pairs and
preallocated output logs; they return fill counts plus bookkeeping flags.
Channels are dense indices: label-array positions for label-keyed runs,
window offsets for site-keyed runs. Callers own the mapping to labels/sites.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ._rng import U64, KIND_LABEL, fill_stream, key_words

# particle removed from a clamped view (fell outside the region)
REMOVED = np.int64(1) << np.int64(62)
# "no hole tracked here" marker in the hole-label array
HNONE = -(np.int64(1) << np.int64(62))


@njit(cache=True, inline="always")
def _advance_piece(wt, wp, t):
    while wp + 1 < wt.shape[0] and wt[wp + 1] <= t:
        wp += 1
    return wp


@njit(cache=True, inline="always")
def _piece_at(wt, s):
    p = 0
    while p + 1 < wt.shape[0] and wt[p + 1] <= s:
        p += 1
    return p


@njit(cache=True)
def label_kernel(ev_t, ev_i, pos, wt, wc, wv, winf, contam_on,
                 jt, ji, st, si, bt, bi):
    """Label-keyed dynamics on positions pos (array index = label rank,
    ascending label value; index i is exclusion-blocked by index i-1).

    Logs: (jt, ji) jumps, (st, si) exclusion-suppressed attempts with the
    wall permitting, (bt, bi) wall-blocked attempts. With contam_on, a
    conservative contamination front starts at index 0 (its right neighbour
    is not simulated) and advances one index whenever the adjacent index
    rings. Returns (nj, ns, nb, cf_end).
    """
    nj = 0
    ns = 0
    nb = 0
    cf = 0 if contam_on else -1
    wp = 0
    nw = wt.shape[0]
    for e in range(ev_t.shape[0]):
        t = ev_t[e]
        i = ev_i[e]
        if cf >= 0 and i == cf + 1:
            cf += 1
        target = pos[i] + 1
        if nw > 0:
            wp = _advance_piece(wt, wp, t)
            if winf[wp] == 0 and float(target) > wc[wp] + wv[wp] * t:
                bt[nb] = t
                bi[nb] = i
                nb += 1
                continue
        if i > 0 and pos[i - 1] == target:
            st[ns] = t
            si[ns] = i
            ns += 1
        else:
            pos[i] = target
            jt[nj] = t
            ji[nj] = i
            nj += 1
    return nj, ns, nb, cf


@njit(cache=True)
def site_kernel(ev_t, ev_s, occ, plab, pos, hlab, site_lo,
                wt, wc, wv, winf,
                clamp_mode, line_a, line_b,
                track_holes, contam_on, F0,
                jt, ji, st, si, bt, bi, hjt, hji, hst, hsi):
    """Site-keyed dynamics on a window; offsets 0..W-1 may ring, cell W is
    padding that stays empty.

    clamp_mode 0: plain dynamics. 1: right view, the region is
    {s <= line_a + line_b*t} (offset coords); events outside are dropped and
    a particle jumping past the boundary is removed (pos set to REMOVED).
    2: left view, region {s >= line}; events below the line are dropped so
    outside density stays as initialized.

    With contam_on, occupancy at offsets >= F is untrusted (one-sided window
    cut); F retreats when the site just below it rings while occupied.
    Returns (nj, ns, nb, nhj, nhs, F_end, edge_hit).
    """
    nj = 0
    ns = 0
    nb = 0
    nhj = 0
    nhs = 0
    W = occ.shape[0] - 1
    F = F0 if contam_on else W + 10
    edge = 0
    wp = 0
    nw = wt.shape[0]
    for e in range(ev_t.shape[0]):
        t = ev_t[e]
        s = ev_s[e]
        if clamp_mode == 1:
            if float(s) > line_a + line_b * t:
                continue
        elif clamp_mode == 2:
            if float(s) < line_a + line_b * t:
                continue
        if occ[s] != 0:
            if s >= W - 1:
                edge = 1
            lab = plab[s]
            if clamp_mode == 1 and float(s + 1) > line_a + line_b * t:
                occ[s] = 0
                plab[s] = -1
                if lab >= 0:
                    pos[lab] = REMOVED
                continue
            if nw > 0:
                wp = _advance_piece(wt, wp, t)
                if winf[wp] == 0 and float(s + 1 + site_lo) > wc[wp] + wv[wp] * t:
                    bt[nb] = t
                    bi[nb] = lab
                    nb += 1
                    continue
            if contam_on and s == F - 1:
                # decision reads occupancy at F, which is untrusted
                F -= 1
            if occ[s + 1] != 0:
                st[ns] = t
                si[ns] = lab
                ns += 1
            else:
                occ[s] = 0
                occ[s + 1] = 1
                plab[s + 1] = lab
                plab[s] = -1
                if lab >= 0:
                    pos[lab] += 1
                jt[nj] = t
                ji[nj] = lab
                nj += 1
                if track_holes:
                    hl = hlab[s + 1]
                    hlab[s] = hl
                    hlab[s + 1] = HNONE
                    if hl != HNONE:
                        hjt[nhj] = t
                        hji[nhj] = hl
                        nhj += 1
                if s + 1 >= W - 1:
                    edge = 1
        else:
            if track_holes and occ[s + 1] == 0:
                hl = hlab[s + 1]
                if hl != HNONE:
                    hst[nhs] = t
                    hsi[nhs] = hl
                    nhs += 1
    return nj, ns, nb, nhj, nhs, F, edge


@njit(cache=True)
def backwards_scan(sup_t, sup_i, m, start, out_t):
    """Scan the first m suppressed-log entries newest-first; every entry
    belonging to the current index steps it down by one. Fills out_t with
    the step times (newest first) and returns the step count."""
    idx = start
    k = 0
    for j in range(m - 1, -1, -1):
        if sup_i[j] == idx:
            out_t[k] = sup_t[j]
            idx -= 1
            k += 1
    return k


@njit(cache=True)
def crossing_ok(x0, jn, J, ms, T, wt, wc, wv, winf, S):
    """Exact indicator of {path(t) > S - floor(f(T-t)) for all t in [0, T]}.

    Wall dynamics live on the lattice, so the barrier acts through its
    integer part; for an integer path and integer S the condition is
    path(t) + f(T-t) >= S + 1. The path starts at x0 and steps +1 at
    jn[0:J] (ascending); ms holds the wall seam times mapped through
    t -> T - t, ascending, inside (0, T). f is nondecreasing, so on each
    breakpoint interval the infimum of f(T-t) is its right-continuous
    value at the mapped endpoint, and (un)attainedness does not change
    the comparison.
    """
    jp = 0
    sp = 0
    nm = ms.shape[0]
    while True:
        v = T
        if jp < J and jn[jp] < v:
            v = jn[jp]
        if sp < nm and ms[sp] < v:
            v = ms[sp]
        X = float(x0 + jp)
        sstar = T - v
        p = _piece_at(wt, sstar)
        if winf[p] == 0:
            fv = wc[p] + wv[p] * sstar
            if not (X + fv >= float(S) + 1.0):
                return False
        if v >= T:
            return True
        while jp < J and jn[jp] == v:
            jp += 1
        while sp < nm and ms[sp] == v:
            sp += 1


@njit(cache=True, nogil=True)
def prop31_wall_batch(master, rep_lo, rep_hi, n, T, wt, wc, wv, winf, cap, out_x):
    """Replicas rep_lo..rep_hi-1 of the n-particle step system with a wall;
    out_x gets x_n(T) per replica. Returns -1, or the replica id whose
    streams overflowed cap (never at sane caps)."""
    times = np.empty((n, cap))
    counts = np.empty(n, np.int64)
    cur = np.empty(n, np.int64)
    pos = np.empty(n, np.int64)
    for r in range(rep_lo, rep_hi):
        for i in range(n):
            k0, k1 = key_words(U64(master), U64(r), U64(KIND_LABEL),
                                U64(i + 1))
            c = fill_stream(k0, k1, T, times[i])
            if c < 0:
                return r
            counts[i] = c
            cur[i] = 0
            pos[i] = -i
        wp = 0
        while True:
            best = -1
            bt = T + 1.0
            for i in range(n):
                if cur[i] < counts[i] and times[i, cur[i]] < bt:
                    bt = times[i, cur[i]]
                    best = i
            if best < 0:
                break
            cur[best] += 1
            target = pos[best] + 1
            wp = _advance_piece(wt, wp, bt)
            if winf[wp] == 0 and float(target) > wc[wp] + wv[wp] * bt:
                continue
            if best > 0 and pos[best - 1] == target:
                continue
            pos[best] = target
        out_x[r - rep_lo] = pos[n - 1]
    return -1


@njit(cache=True, nogil=True)
def prop31_free_batch(master, rep_lo, rep_hi, n, T, wt, wc, wv, winf, ms,
                      s_arr, cap, out_ind):
    """Wall-free replicas; out_ind[r - rep_lo, k] = 1 iff the crossing event
    holds for threshold s_arr[k]: the label-n path clears S - f(T-t) on
    [0, T] and ends above S. Returns -1 or the overflowing replica id."""
    times = np.empty((n, cap))
    counts = np.empty(n, np.int64)
    cur = np.empty(n, np.int64)
    pos = np.empty(n, np.int64)
    jn = np.empty(cap)
    for r in range(rep_lo, rep_hi):
        for i in range(n):
            k0, k1 = key_words(U64(master), U64(r), U64(KIND_LABEL),
                                U64(i + 1))
            c = fill_stream(k0, k1, T, times[i])
            if c < 0:
                return r
            counts[i] = c
            cur[i] = 0
            pos[i] = -i
        J = 0
        while True:
            best = -1
            bt = T + 1.0
            for i in range(n):
                if cur[i] < counts[i] and times[i, cur[i]] < bt:
                    bt = times[i, cur[i]]
                    best = i
            if best < 0:
                break
            cur[best] += 1
            target = pos[best] + 1
            if best > 0 and pos[best - 1] == target:
                continue
            pos[best] = target
            if best == n - 1:
                jn[J] = bt
                J += 1
        for k in range(s_arr.shape[0]):
            S = s_arr[k]
            if pos[n - 1] > S and crossing_ok(-(n - 1), jn, J, ms, T,
                                              wt, wc, wv, winf, S):
                out_ind[r - rep_lo, k] = 1
            else:
                out_ind[r - rep_lo, k] = 0
    return -1
