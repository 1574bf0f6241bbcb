"""Compiled enumeration kernel for signed composition sums."""

from __future__ import annotations

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_TOP = np.uint64(0x8000000000000000)


@njit(cache=True, inline="always")
def _mix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _C1
    z = z ^ (z >> np.uint64(27))
    z = z * _C2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _absorb(h, v):
    return _mix(h ^ _mix(v + _GAMMA))


@njit(cache=True, inline="always")
def _comb(x, k):
    if x < k or x < 0:
        return 0
    c = 1
    for j in range(k):
        c = c * (x - j) // (j + 1)
    return c


@njit(cache=True, nogil=True)
def signed_sums(prefixes, support, w, r, n_lo, n_hi):
    """Neumaier-compensated signed sums for n in (n_lo, n_hi].

    Compositions are visited in lexicographic order, so each coefficient
    receives its terms in ascending rank. Returns shape (K, n_hi - n_lo).
    """
    K = prefixes.shape[0]
    width = n_hi - n_lo
    out = np.zeros((K, width))
    s_len = support.shape[0]
    if s_len == 0 or width <= 0:
        return out
    smin = support[0]
    tot = np.zeros(width)
    cmp = np.zeros(width)
    hashes = np.empty(width, dtype=np.uint64)
    depth_max = max(r - 1, 1)
    idx = np.zeros(depth_max, dtype=np.int64)
    sums = np.zeros(depth_max + 1, dtype=np.int64)
    prods = np.ones(depth_max + 1)
    parts = np.zeros(depth_max, dtype=np.int64)

    for k in range(K):
        for j in range(width):
            hashes[j] = _absorb(prefixes[k], np.uint64(n_lo + 1 + j))
            tot[j] = 0.0
            cmp[j] = 0.0

        if r == 1:
            mr = _mix(np.uint64(0) + _GAMMA)
            for i in range(s_len):
                n = support[i]
                if n > n_lo and n <= n_hi:
                    x = w[n]
                    if (_mix(hashes[n - n_lo - 1] ^ mr) & _TOP) != 0:
                        x = -x
                    j = n - n_lo - 1
                    s = tot[j]
                    t = s + x
                    if abs(s) >= abs(x):
                        cmp[j] += (s - t) + x
                    else:
                        cmp[j] += (x - t) + s
                    tot[j] = t
        else:
            d = 0
            idx[0] = 0
            while d >= 0:
                if idx[d] >= s_len:
                    d -= 1
                    if d >= 0:
                        idx[d] += 1
                    continue
                m = support[idx[d]]
                before = sums[d] + m
                if before + (r - 1 - d) * smin > n_hi:
                    d -= 1
                    if d >= 0:
                        idx[d] += 1
                    continue
                prod = prods[d] * w[m]
                parts[d] = m
                if d < r - 2:
                    sums[d + 1] = before
                    prods[d + 1] = prod
                    d += 1
                    idx[d] = 0
                    continue
                # last free coordinate fixed; sweep the final part
                lo_val = n_lo - before
                start = np.searchsorted(support, lo_val, side="right")
                if r == 2:
                    mr = _mix(np.uint64(m - 1) + _GAMMA)
                for i in range(start, s_len):
                    last = support[i]
                    n = before + last
                    if n > n_hi:
                        break
                    if r == 2:
                        key = mr
                    else:
                        rank = 0
                        rem = n
                        for q in range(r - 1):
                            kk = r - 1 - q
                            rank += _comb(rem - 1, kk) - _comb(rem - parts[q], kk)
                            rem -= parts[q]
                        key = _mix(np.uint64(rank) + _GAMMA)
                    x = prod * w[last]
                    j = n - n_lo - 1
                    if (_mix(hashes[j] ^ key) & _TOP) != 0:
                        x = -x
                    s = tot[j]
                    t = s + x
                    if abs(s) >= abs(x):
                        cmp[j] += (s - t) + x
                    else:
                        cmp[j] += (x - t) + s
                    tot[j] = t
                idx[d] += 1

        for j in range(width):
            out[k, j] = tot[j] + cmp[j]
    return out
