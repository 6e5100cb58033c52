"""Compiled Min-Sum decoding loops.

Every kernel returns (status, iterations, hard_decisions, syndrome_weight)
with status 1 = codeword found, 0 = iteration budget exhausted, -1 = fixed-point
a-posteriori overflow.  ``cols`` is the (r, n0*w) table from
``minsum.row_columns``; edge e of row i touches column cols[i, e].
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _syndrome_weight(hard, cols):
    r, dc = cols.shape
    weight = 0
    for i in range(r):
        s = 0
        for e in range(dc):
            s ^= hard[cols[i, e]]
        weight += s
    return weight


@njit(cache=True)
def layered_fixed(x, cols, c_raw, scale_tab, f, qmax, limit, imax):
    r, dc = cols.shape
    n = x.size
    gam = np.empty(n, np.int64)
    for j in range(n):
        gam[j] = -c_raw if x[j] else c_raw
    hard = x.copy()
    sw = _syndrome_weight(hard, cols)
    if sw == 0:
        return 1, 0, hard, 0

    min1 = np.zeros(r, np.int64)
    min2 = np.zeros(r, np.int64)
    idx = np.zeros(r, np.int64)
    par = np.zeros(r, np.uint8)
    usign = np.zeros((r, dc), np.uint8)
    ubuf = np.empty(dc, np.int64)
    sbuf = np.empty(dc, np.uint8)
    half = (1 << (f - 1)) if f > 0 else 0

    for it in range(1, imax + 1):
        for i in range(r):
            o1 = min1[i]
            o2 = min2[i]
            oi = idx[i]
            op = par[i]
            n1 = qmax + 1
            n2 = qmax + 1
            ni = 0
            npar = 0
            for e in range(dc):
                mag = o2 if e == oi else o1
                sc = scale_tab[mag]
                if op ^ usign[i, e]:
                    sc = -sc
                u = gam[cols[i, e]] - sc
                ubuf[e] = u
                s = 1 if u < 0 else 0
                sbuf[e] = s
                a = -u if u < 0 else u
                m = (a + half) >> f
                if m > qmax:
                    m = qmax
                if m < n1:
                    n2 = n1
                    n1 = m
                    ni = e
                elif m < n2:
                    n2 = m
                npar ^= s
            for e in range(dc):
                mag = n2 if e == ni else n1
                sc = scale_tab[mag]
                if npar ^ sbuf[e]:
                    sc = -sc
                g = ubuf[e] + sc
                if g > limit or g < -limit:
                    return -1, it, hard, sw
                gam[cols[i, e]] = g
                usign[i, e] = sbuf[e]
            min1[i] = n1
            min2[i] = n2
            idx[i] = ni
            par[i] = npar
        for j in range(n):
            hard[j] = 1 if gam[j] < 0 else 0
        sw = _syndrome_weight(hard, cols)
        if sw == 0:
            return 1, it, hard, 0
    return 0, imax, hard, sw


@njit(cache=True)
def layered_float(x, cols, c, alpha, qmax, imax):
    r, dc = cols.shape
    n = x.size
    gam = np.empty(n, np.float64)
    for j in range(n):
        gam[j] = -c if x[j] else c
    hard = x.copy()
    sw = _syndrome_weight(hard, cols)
    if sw == 0:
        return 1, 0, hard, 0

    # c2v messages kept explicitly (not compressed) in the reference path
    v = np.zeros((r, dc), np.float64)
    ubuf = np.empty(dc, np.float64)
    mags = np.empty(dc, np.int64)
    signs = np.empty(dc, np.uint8)

    for it in range(1, imax + 1):
        for i in range(r):
            best = qmax + 1
            second = qmax + 1
            bi = 0
            parity = 0
            for e in range(dc):
                u = gam[cols[i, e]] - alpha * v[i, e]
                ubuf[e] = u
                s = 1 if u < 0.0 else 0
                m = int(np.floor(abs(u) + 0.5))
                if m > qmax:
                    m = qmax
                mags[e] = m
                signs[e] = s
                parity ^= s
                if m < best:
                    second = best
                    best = m
                    bi = e
                elif m < second:
                    second = m
            for e in range(dc):
                mag = second if e == bi else best
                val = float(mag)
                if parity ^ signs[e]:
                    val = -val
                v[i, e] = val
                gam[cols[i, e]] = ubuf[e] + alpha * val
        for j in range(n):
            hard[j] = 1 if gam[j] < 0.0 else 0
        sw = _syndrome_weight(hard, cols)
        if sw == 0:
            return 1, it, hard, 0
    return 0, imax, hard, sw


@njit(cache=True)
def _scale(v, num, f, rnd):
    a = v if v >= 0 else -v
    a = a * num
    sh = 6 - f
    if sh > 0:
        if rnd:
            a = (a + (1 << (sh - 1))) >> sh
        else:
            a = a >> sh
    return a if v >= 0 else -a


@njit(cache=True)
def _cnu_rows(umag, usgn, min1, min2, idx, par, qmax):
    r, dc = umag.shape
    for i in range(r):
        n1 = qmax + 1
        n2 = qmax + 1
        ni = 0
        p = 0
        for e in range(dc):
            m = umag[i, e]
            if m < n1:
                n2 = n1
                n1 = m
                ni = e
            elif m < n2:
                n2 = m
            p ^= usgn[i, e]
        min1[i] = n1
        min2[i] = n2
        idx[i] = ni
        par[i] = p


@njit(cache=True)
def sliced_fixed(x, cols, c, num, f, rnd, qmax, imax):
    r, dc = cols.shape
    n = x.size
    gamma = np.empty(n, np.int64)  # channel values, integer
    for j in range(n):
        gamma[j] = -c if x[j] else c
    hard = x.copy()
    sw = _syndrome_weight(hard, cols)
    if sw == 0:
        return 1, 0, hard, 0

    umag = np.empty((r, dc), np.int64)
    usgn = np.empty((r, dc), np.uint8)
    for i in range(r):
        for e in range(dc):
            umag[i, e] = c
            usgn[i, e] = x[cols[i, e]]
    min1 = np.empty(r, np.int64)
    min2 = np.empty(r, np.int64)
    idx = np.empty(r, np.int64)
    par = np.empty(r, np.uint8)
    v = np.empty((r, dc), np.int64)
    vsum = np.empty(n, np.int64)
    half = (1 << (f - 1)) if f > 0 else 0

    for it in range(1, imax + 1):
        _cnu_rows(umag, usgn, min1, min2, idx, par, qmax)
        vsum[:] = 0
        for i in range(r):
            for e in range(dc):
                mag = min2[i] if e == idx[i] else min1[i]
                val = -mag if (par[i] ^ usgn[i, e]) else mag
                v[i, e] = val
                vsum[cols[i, e]] += val
        for i in range(r):
            for e in range(dc):
                j = cols[i, e]
                u = (gamma[j] << f) + _scale(vsum[j] - v[i, e], num, f, rnd)
                s = 1 if u < 0 else 0
                a = -u if u < 0 else u
                m = (a + half) >> f
                if m > qmax:
                    m = qmax
                umag[i, e] = m
                usgn[i, e] = s
        for j in range(n):
            g = (gamma[j] << f) + _scale(vsum[j], num, f, rnd)
            hard[j] = 1 if g < 0 else 0
        sw = _syndrome_weight(hard, cols)
        if sw == 0:
            return 1, it, hard, 0
    return 0, imax, hard, sw


@njit(cache=True)
def sliced_float(x, cols, c, alpha, qmax, imax):
    r, dc = cols.shape
    n = x.size
    gamma = np.empty(n, np.float64)
    for j in range(n):
        gamma[j] = -c if x[j] else c
    hard = x.copy()
    sw = _syndrome_weight(hard, cols)
    if sw == 0:
        return 1, 0, hard, 0

    umag = np.empty((r, dc), np.int64)
    usgn = np.empty((r, dc), np.uint8)
    for i in range(r):
        for e in range(dc):
            umag[i, e] = int(c + 0.5) if int(c + 0.5) < qmax else qmax
            usgn[i, e] = x[cols[i, e]]
    min1 = np.empty(r, np.int64)
    min2 = np.empty(r, np.int64)
    idx = np.empty(r, np.int64)
    par = np.empty(r, np.uint8)
    v = np.empty((r, dc), np.float64)
    vsum = np.empty(n, np.float64)

    for it in range(1, imax + 1):
        _cnu_rows(umag, usgn, min1, min2, idx, par, qmax)
        vsum[:] = 0.0
        for i in range(r):
            for e in range(dc):
                mag = min2[i] if e == idx[i] else min1[i]
                val = float(-mag if (par[i] ^ usgn[i, e]) else mag)
                v[i, e] = val
                vsum[cols[i, e]] += val
        for i in range(r):
            for e in range(dc):
                j = cols[i, e]
                u = gamma[j] + alpha * (vsum[j] - v[i, e])
                umag[i, e] = min(int(np.floor(abs(u) + 0.5)), qmax)
                usgn[i, e] = 1 if u < 0.0 else 0
        for j in range(n):
            hard[j] = 1 if gamma[j] + alpha * vsum[j] < 0.0 else 0
        sw = _syndrome_weight(hard, cols)
        if sw == 0:
            return 1, it, hard, 0
    return 0, imax, hard, sw
