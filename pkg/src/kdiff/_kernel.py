"""Compiled simulation loop.

Mirrors ``simulator.run_trial_reference`` step for step on flat arrays:

* ``fill[r, n]``     position n of Rx_r is filled (delivered or not)
* ``colptr[r, n]``   pool row holding the non-pivot terms of column n, or -1
* ``rhead[r, n]``    linked list of pivots whose columns have a term at n;
                     entries go stale when a term cancels and are checked on use
* ``fen[r]``         Fenwick tree over ``fill`` for range counts
* ``cnt[l, n]``      mode-l transmissions with pivot n so far
"""

import numpy as np
from numba import njit

STATUS = {0: "ok", 1: "field exhausted", 2: "column too long", 3: "coded column reached delivery"}

MAXT = 256  # longest residual / column handled
NIL = -1


@njit(cache=True)
def _fen_add(fen, r, i, n):
    while i <= n:
        fen[r, i] += 1
        i += i & (-i)


@njit(cache=True)
def _fen_sum(fen, r, i):
    s = 0
    while i > 0:
        s += fen[r, i]
        i -= i & (-i)
    return s


@njit(cache=True)
def _acc(ridx, rcoef, rlen, i, v):
    """Add v*p_i into the residual; returns new length or -1 on overflow."""
    for k in range(rlen):
        if ridx[k] == i:
            x = rcoef[k] ^ v
            if x:
                rcoef[k] = x
                return rlen
            rlen -= 1
            ridx[k] = ridx[rlen]
            rcoef[k] = rcoef[rlen]
            return rlen
    if rlen >= MAXT:
        return -1
    ridx[rlen] = i
    rcoef[rlen] = v
    return rlen + 1


@njit(cache=True)
def _reduce(r, sidx, scoef, slen, delivered, fill, colptr, cidx, ccoef, clen, mul, ridx, rcoef):
    rlen = 0
    d = delivered[r]
    for t in range(slen):
        j = sidx[t]
        a = scoef[t]
        if j <= d:
            continue
        if fill[r, j]:
            p = colptr[r, j]
            if p >= 0:
                for k in range(clen[p]):
                    rlen = _acc(ridx, rcoef, rlen, cidx[p, k], mul[a, ccoef[p, k]])
                    if rlen < 0:
                        return -1
            continue
        rlen = _acc(ridx, rcoef, rlen, j, a)
        if rlen < 0:
            return -1
    return rlen


@njit(cache=True)
def run_trial(mu, cum, mul, inv, uniforms, warm, every, kmax, check):
    T = uniforms.shape[0]
    R = mu.shape[0]
    order = mul.shape[0]
    P = T + 2

    fill = np.zeros((R, P + 1), np.uint8)
    fen = np.zeros((R, P + 1), np.int32)
    colptr = np.full((R, P + 1), NIL, np.int32)
    rhead = np.full((R, P + 1), NIL, np.int32)
    cnt = np.zeros((R, P + 1), np.int32)
    delivered = np.zeros(R, np.int64)
    nfilled = np.zeros(R, np.int64)  # undelivered filled positions
    ncoded = np.zeros(R, np.int64)

    cap = 1024
    cidx = np.zeros((cap, MAXT), np.int64)
    ccoef = np.zeros((cap, MAXT), np.uint8)
    clen = np.zeros(cap, np.int32)
    cfree = np.arange(cap - 1, -1, -1).astype(np.int64)
    ncfree = cap

    ncap = 4096
    nval = np.zeros(ncap, np.int64)
    nnext = np.zeros(ncap, np.int32)
    nfree = np.arange(ncap - 1, -1, -1).astype(np.int64)
    nnfree = ncap

    mode_counts = np.zeros(R, np.int64)
    kdiff = np.zeros((R, R), np.int64)
    lhist = np.zeros((R, kmax + 1), np.int64)
    shist = np.zeros((R, kmax + 1), np.int64)
    dsum = np.zeros(R)
    dn = np.zeros(R, np.int64)
    usum = np.zeros(R)
    uall = np.zeros(R)
    un = 0
    nonin = 0
    start = np.zeros(R, np.int64)

    sidx = np.zeros(R, np.int64)
    scoef = np.zeros(R, np.int64)
    ridx = np.zeros(MAXT, np.int64)
    rcoef = np.zeros(MAXT, np.int64)
    bits = np.zeros(R, np.int64)
    veto = np.zeros(order, np.uint8)
    groups = np.zeros(R, np.int64)

    def fail(code):
        return (code, delivered - start, mode_counts, kdiff, lhist, shist, dsum, dn, usum, uall, un, nonin)

    for t in range(T):
        measuring = t >= warm
        if t == warm:
            for r in range(R):
                start[r] = delivered[r]
        if measuring:
            for l in range(R):
                c = cnt[l, delivered[l] + 1]
                shist[l, min(c, kmax)] += 1

        # mode selection
        u0 = uniforms[t, 0]
        m = 0
        while m < R - 1 and u0 >= cum[m]:
            m += 1

        # distinct next-needed packets of receivers m..R-1, newest first
        ng = 0
        for i in range(m, R):
            j = delivered[i] + 1
            seen = False
            for g in range(ng):
                if groups[g] == j:
                    seen = True
            if not seen:
                k = ng
                while k > 0 and groups[k - 1] < j:
                    groups[k] = groups[k - 1]
                    k -= 1
                groups[k] = j
                ng += 1

        slen = 0
        for i in range(R):
            bits[i] = 0
        for g in range(ng):
            j = groups[g]
            for x in range(order):
                veto[x] = 0
            for i in range(m, R):
                if delivered[i] + 1 != j:
                    continue
                rl = _reduce(i, sidx, scoef, slen, delivered, fill, colptr, cidx, ccoef, clen, mul, ridx, rcoef)
                if rl < 0:
                    return fail(2)
                if rl == 0:
                    veto[0] = 1
                elif rl == 1 and ridx[0] == j:
                    veto[rcoef[0]] = 1
            if veto[0] == 0:
                continue
            a = 1
            while a < order and veto[a]:
                a += 1
            if a == order:
                return fail(1)
            sidx[slen] = j
            scoef[slen] = a
            slen += 1
            for i in range(m, R):
                if delivered[i] + 1 == j:
                    bits[i] = 1

        pivot = sidx[0]  # groups are visited newest first and the first is always added
        cnt[m, pivot] += 1
        if check:
            for i in range(m, R):
                rl = _reduce(i, sidx, scoef, slen, delivered, fill, colptr, cidx, ccoef, clen, mul, ridx, rcoef)
                if rl == 0:
                    nonin += 1
        if measuring:
            mode_counts[m] += 1
            for i in range(R):
                kdiff[i, m] += bits[i]

        for r in range(R):
            if not uniforms[t, r + 1] < mu[r]:
                continue
            rl = _reduce(r, sidx, scoef, slen, delivered, fill, colptr, cidx, ccoef, clen, mul, ridx, rcoef)
            if rl < 0:
                return fail(2)
            if rl == 0:
                continue
            # pivot of the residual, normalised to 1
            top = 0
            for k in range(1, rl):
                if ridx[k] > ridx[top]:
                    top = k
            n = ridx[top]
            scale = inv[rcoef[top]]
            rl -= 1
            ridx[top] = ridx[rl]
            rcoef[top] = rcoef[rl]
            for k in range(rl):
                rcoef[k] = mul[scale, rcoef[k]]

            fill[r, n] = 1
            _fen_add(fen, r, n, P)
            nfilled[r] += 1
            if rl > 0:
                if ncfree == 0:
                    old = cap
                    cap *= 2
                    cidx2 = np.zeros((cap, MAXT), np.int64)
                    cidx2[:old] = cidx
                    cidx = cidx2
                    ccoef2 = np.zeros((cap, MAXT), np.uint8)
                    ccoef2[:old] = ccoef
                    ccoef = ccoef2
                    clen2 = np.zeros(cap, np.int32)
                    clen2[:old] = clen
                    clen = clen2
                    cfree = np.arange(cap - 1, old - 1, -1).astype(np.int64)
                    cfree = np.concatenate((cfree, np.zeros(old, np.int64)))
                    ncfree = cap - old
                ncfree -= 1
                p = cfree[ncfree]
                clen[p] = rl
                for k in range(rl):
                    cidx[p, k] = ridx[k]
                    ccoef[p, k] = rcoef[k]
                colptr[r, n] = p
                ncoded[r] += 1
                for k in range(rl):
                    if nnfree == 0:
                        old = ncap
                        ncap *= 2
                        nval2 = np.zeros(ncap, np.int64)
                        nval2[:old] = nval
                        nval = nval2
                        nnext2 = np.zeros(ncap, np.int32)
                        nnext2[:old] = nnext
                        nnext = nnext2
                        nfree = np.concatenate((np.arange(ncap - 1, old - 1, -1).astype(np.int64), np.zeros(old, np.int64)))
                        nnfree = ncap - old
                    nnfree -= 1
                    node = nfree[nnfree]
                    nval[node] = n
                    nnext[node] = rhead[r, ridx[k]]
                    rhead[r, ridx[k]] = node

            # back-substitution into columns that mention p_n
            node = rhead[r, n]
            rhead[r, n] = NIL
            while node != NIL:
                q = nval[node]
                nxt = nnext[node]
                nfree[nnfree] = node
                nnfree += 1
                node = nxt
                p = colptr[r, q]
                if p < 0:
                    continue
                pos = -1
                for k in range(clen[p]):
                    if cidx[p, k] == n:
                        pos = k
                        break
                if pos < 0:
                    continue
                c = ccoef[p, pos]
                ln = clen[p] - 1
                cidx[p, pos] = cidx[p, ln]
                ccoef[p, pos] = ccoef[p, ln]
                for k in range(rl):
                    i = ridx[k]
                    v = mul[c, rcoef[k]]
                    found = -1
                    for h in range(ln):
                        if cidx[p, h] == i:
                            found = h
                            break
                    if found >= 0:
                        x = ccoef[p, found] ^ v
                        if x:
                            ccoef[p, found] = x
                        else:
                            ln -= 1
                            cidx[p, found] = cidx[p, ln]
                            ccoef[p, found] = ccoef[p, ln]
                    else:
                        if ln >= MAXT:
                            return fail(2)
                        cidx[p, ln] = i
                        ccoef[p, ln] = v
                        ln += 1
                        if nnfree == 0:
                            old = ncap
                            ncap *= 2
                            nval2 = np.zeros(ncap, np.int64)
                            nval2[:old] = nval
                            nval = nval2
                            nnext2 = np.zeros(ncap, np.int32)
                            nnext2[:old] = nnext
                            nnext = nnext2
                            nfree = np.concatenate((np.arange(ncap - 1, old - 1, -1).astype(np.int64), np.zeros(old, np.int64)))
                            nnfree = ncap - old
                        nnfree -= 1
                        nd = nfree[nnfree]
                        nval[nd] = q
                        nnext[nd] = rhead[r, i]
                        rhead[r, i] = nd
                clen[p] = ln
                if ln == 0:
                    colptr[r, q] = NIL
                    cfree[ncfree] = p
                    ncfree += 1
                    ncoded[r] -= 1

            while fill[r, delivered[r] + 1]:
                d = delivered[r] + 1
                delivered[r] = d
                nfilled[r] -= 1
                if colptr[r, d] >= 0:
                    return fail(3)
                if measuring:
                    lhist[r, min(cnt[r, d], kmax)] += 1

        if measuring and t % every == 0:
            for r in range(1, R):
                lo = delivered[r] + 2
                hi = delivered[r - 1]
                if hi >= lo:
                    c = _fen_sum(fen, r, hi) - _fen_sum(fen, r, lo - 1)
                    dsum[r] += c / (hi - lo + 1)
                    dn[r] += 1
            for r in range(R):
                if nfilled[r] > 0:
                    usum[r] += ncoded[r] / nfilled[r]
                tot = nfilled[r] + delivered[r]
                if tot > 0:
                    uall[r] += ncoded[r] / tot
            un += 1

    return (0, delivered - start, mode_counts, kdiff, lhist, shist, dsum, dn, usum, uall, un, nonin)
