"""Counter-based RNG internals.

Philox4x64-10 keyed streams: every (master_seed, replica, kind, index) tuple
owns an unbounded uniform stream that is a pure function of the key, read
lazily in 4-word blocks. Block b uses counter (b+1, 0, 0, 0) so the raw word
stream lines up bit-for-bit with numpy's Philox buffering, which the tests
pin as an oracle. Event times are cumulative Exp(1) gaps obtained by inverse
CDF, gap = -log(u) with u in (0, 1].
"""
from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64

_M0 = U64(0xD2E7470EE14C6C93)
_M1 = U64(0xCA5A826395121157)
_W0 = U64(0x9E3779B97F4A7C15)
_W1 = U64(0xBB67AE8584CAA73B)
_SM1 = U64(0xBF58476D1CE4E5B9)
_SM2 = U64(0x94D049BB133111EB)
_KSALT = U64(0x6A09E667F3BCC909)

# 2^-53; (raw >> 11) + 1 maps a 64-bit word into (0, 1] in 2^53 steps
_TWO53_INV = 1.0 / 9007199254740992.0

MASK64 = 0xFFFFFFFFFFFFFFFF

# stream kinds (StreamKey.kind uses the first two; INIT salts initial
# conditions and is not addressable through the public API)
KIND_SITE = 0
KIND_LABEL = 1
KIND_INIT = 2


@njit(cache=True, inline="always")
def _mulhilo(a, b):
    ah = a >> U64(32)
    al = a & U64(0xFFFFFFFF)
    bh = b >> U64(32)
    bl = b & U64(0xFFFFFFFF)
    lo = a * b
    t = (al * bl) >> U64(32)
    m1 = ah * bl + t
    m2 = al * bh + (m1 & U64(0xFFFFFFFF))
    hi = ah * bh + (m1 >> U64(32)) + (m2 >> U64(32))
    return hi, lo


@njit(cache=True, inline="always")
def _philox_block(block, k0, k1, out4):
    c0 = block
    c1 = U64(0)
    c2 = U64(0)
    c3 = U64(0)
    kk0 = k0
    kk1 = k1
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0 = hi1 ^ c1 ^ kk0
        c1 = lo1
        c2 = hi0 ^ c3 ^ kk1
        c3 = lo0
        kk0 = kk0 + _W0
        kk1 = kk1 + _W1
    out4[0] = c0
    out4[1] = c1
    out4[2] = c2
    out4[3] = c3


@njit(cache=True, inline="always")
def _splitmix(z):
    z = z + _W0
    z = (z ^ (z >> U64(30))) * _SM1
    z = (z ^ (z >> U64(27))) * _SM2
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def key_words(master, replica, kind, index):
    """Derive the 128-bit Philox key for one stream. All args uint64."""
    s = _splitmix(master)
    s = _splitmix(s ^ replica)
    s = _splitmix(s ^ kind)
    s = _splitmix(s ^ index)
    return _splitmix(s), _splitmix(s ^ _KSALT)


@njit(cache=True)
def fill_raw(k0, k1, out):
    """Raw Philox words of a stream, for oracle tests."""
    buf = np.empty(4, np.uint64)
    n = out.shape[0]
    block = U64(1)
    j = 0
    while j < n:
        _philox_block(block, k0, k1, buf)
        block = block + U64(1)
        for i in range(4):
            if j < n:
                out[j] = buf[i]
                j += 1


@njit(cache=True)
def fill_uniforms(k0, k1, out):
    """First len(out) uniforms of a stream, each in (0, 1]."""
    buf = np.empty(4, np.uint64)
    n = out.shape[0]
    block = U64(1)
    j = 0
    while j < n:
        _philox_block(block, k0, k1, buf)
        block = block + U64(1)
        for i in range(4):
            if j < n:
                out[j] = (float(buf[i] >> U64(11)) + 1.0) * _TWO53_INV
                j += 1


@njit(cache=True, inline="always")
def fill_stream(k0, k1, horizon, out):
    """Event times of a stream in (0, horizon], strictly increasing.

    Returns the count, or -1 if out is too small (caller retries bigger).
    A zero gap (u == 1, probability 2^-53) is bumped by one ulp to keep
    strict monotonicity.
    """
    buf = np.empty(4, np.uint64)
    cap = out.shape[0]
    t = 0.0
    n = 0
    block = U64(1)
    while True:
        _philox_block(block, k0, k1, buf)
        block = block + U64(1)
        for i in range(4):
            u = (float(buf[i] >> U64(11)) + 1.0) * _TWO53_INV
            t2 = t - np.log(u)
            if t2 <= t:
                t2 = np.nextafter(t, np.inf)
            if t2 > horizon:
                return n
            if n >= cap:
                return -1
            out[n] = t2
            n += 1
            t = t2


@njit(cache=True)
def batch_fill(master, replica, kind, idx_u64, horizon, out2d):
    """Fill one stream per key index into rows of out2d; returns counts.

    counts[i] == -1 flags a row overflow (out2d too narrow).
    """
    nk = idx_u64.shape[0]
    counts = np.empty(nk, np.int64)
    for i in range(nk):
        k0, k1 = key_words(master, replica, kind, idx_u64[i])
        counts[i] = fill_stream(k0, k1, horizon, out2d[i])
    return counts


def key_words_py(master, replica, kind, index) -> tuple[np.uint64, np.uint64]:
    """Python-side wrapper: numba boxes uint64 returns as ints, which would
    promote to float64 on re-entry; recast before passing back in."""
    k0, k1 = key_words(U64(master), U64(replica), U64(kind), U64(index))
    return U64(k0), U64(k1)


def poisson_cap(horizon: float) -> int:
    """Row width that a rate-1 stream overflows with negligible probability."""
    h = max(float(horizon), 0.0)
    return int(h + 12.0 * np.sqrt(h + 1.0) + 32.0)
