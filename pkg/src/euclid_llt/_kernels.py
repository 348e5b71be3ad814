"""Compiled enumeration loops.

Every kernel walks the division algorithm on integer pairs ``(p, q)`` for
``q`` in a block and accumulates into caller-owned buffers, so blocks can be
processed in any order and merged afterwards.  Algorithm codes: 0 ordinary,
1 centered, 2 odd.
"""

import numpy as np
from numba import njit, types
from numba.typed import Dict


@njit(cache=True, nogil=True)
def walk(p, q, alg, ctab):
    """Total cost, depth and gcd of one pair."""
    c = 0.0
    depth = 0
    while p > 0:
        if alg == 0:
            m = q // p
            r = q - m * p
        else:
            if alg == 1:
                m = (2 * q + p) // (2 * p)
            else:
                m = 2 * (q // (2 * p)) + 1
            r = q - m * p
            if r < 0:
                r = -r
        c += ctab[m]
        depth += 1
        q = p
        p = r
    return c, depth, q


@njit(cache=True, nogil=True)
def smallest_prime_factors(n):
    spf = np.zeros(n + 1, dtype=np.int64)
    for i in range(2, n + 1):
        if spf[i] == 0:
            for j in range(i, n + 1, i):
                if spf[j] == 0:
                    spf[j] = i
    return spf


@njit(cache=True, nogil=True)
def _coprime_mask(q, spf, mask):
    # mask[p] for p in 1..q
    for p in range(1, q + 1):
        mask[p] = True
    n = q
    while n > 1:
        f = spf[n]
        for j in range(f, q + 1, f):
            mask[j] = False
        while n % f == 0:
            n //= f


@njit(cache=True, nogil=True)
def _p_max(q, alg, natural):
    if natural and alg == 1:
        return q // 2
    return q


@njit(cache=True, nogil=True)
def per_q_moments(q_lo, q_hi, alg, coprime, natural, ctab, spf, out_n, out_s1, out_s2):
    """Per-denominator count, sum C and sum C^2 (compensated) into ``out_*[q]``."""
    mask = np.ones(q_hi + 2, dtype=np.bool_)
    for q in range(q_lo, q_hi + 1):
        if coprime:
            _coprime_mask(q, spf, mask)
        n = 0
        s1 = 0.0
        e1 = 0.0
        s2 = 0.0
        e2 = 0.0
        for p in range(1, _p_max(q, alg, natural) + 1):
            if coprime and not mask[p]:
                continue
            c, d, g = walk(p, q, alg, ctab)
            n += 1
            y = c - e1
            t = s1 + y
            e1 = (t - s1) - y
            s1 = t
            y = c * c - e2
            t = s2 + y
            e2 = (t - s2) - y
            s2 = t
        out_n[q] = n
        out_s1[q] = s1
        out_s2[q] = s2


@njit(cache=True, nogil=True)
def per_q_charsums(q_lo, q_hi, alg, coprime, natural, ctab, spf, taus, out_re, out_im):
    """Per-denominator sums of ``exp(i tau C)`` for each tau, into ``out_*[q, k]``."""
    mask = np.ones(q_hi + 2, dtype=np.bool_)
    nt = taus.shape[0]
    acc_re = np.zeros(nt)
    acc_im = np.zeros(nt)
    err_re = np.zeros(nt)
    err_im = np.zeros(nt)
    for q in range(q_lo, q_hi + 1):
        if coprime:
            _coprime_mask(q, spf, mask)
        acc_re[:] = 0.0
        acc_im[:] = 0.0
        err_re[:] = 0.0
        err_im[:] = 0.0
        for p in range(1, _p_max(q, alg, natural) + 1):
            if coprime and not mask[p]:
                continue
            c, d, g = walk(p, q, alg, ctab)
            for k in range(nt):
                y = np.cos(taus[k] * c) - err_re[k]
                t = acc_re[k] + y
                err_re[k] = (t - acc_re[k]) - y
                acc_re[k] = t
                y = np.sin(taus[k] * c) - err_im[k]
                t = acc_im[k] + y
                err_im[k] = (t - acc_im[k]) - y
                acc_im[k] = t
        for k in range(nt):
            out_re[q, k] = acc_re[k]
            out_im[q, k] = acc_im[k]


@njit(cache=True, nogil=True)
def accumulate_histogram(q_lo, q_hi, alg, coprime, natural, ctab, spf, scale, weights, hist):
    """Add ``weights[q]`` at key ``round(C * scale)`` for every pair of the block."""
    mask = np.ones(q_hi + 2, dtype=np.bool_)
    for q in range(q_lo, q_hi + 1):
        w = weights[q]
        if w == 0:
            continue
        if coprime:
            _coprime_mask(q, spf, mask)
        for p in range(1, _p_max(q, alg, natural) + 1):
            if coprime and not mask[p]:
                continue
            c, d, g = walk(p, q, alg, ctab)
            key = np.int64(np.round(c * scale))
            if key in hist:
                hist[key] += w
            else:
                hist[key] = w


def new_histogram():
    return Dict.empty(key_type=types.int64, value_type=types.int64)
