"""Pure numpy implementations of the power-set kernels.

Same contracts as the compiled ``_ckernels`` module; used when the extension
is not available and as a cross-check for it in the test-suite.
"""
from functools import lru_cache

import numpy as np

# Largest atom count whose full 4**m pair index is materialized at once.
_PAIR_BLOCK_BITS = 9


def _as_table(values):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    n = arr.shape[0]
    if arr.ndim != 1 or n <= 0 or (n & (n - 1)) != 0:
        raise ValueError(f"table length {n} is not a power of two")
    return arr, n.bit_length() - 1


def subset_zeta(values):
    out, m = _as_table(values)
    out = out.copy()
    for i in range(m):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return out


def subset_mobius(values):
    out, m = _as_table(values)
    out = out.copy()
    for i in range(m):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] -= view[:, 0, :]
    return out


@lru_cache(maxsize=32)
def _pair_index(m):
    """All (A, B) mask pairs over m bits, each bit in A only, B only, both or neither."""
    a = np.zeros(1, dtype=np.int64)
    b = np.zeros(1, dtype=np.int64)
    for i in range(m):
        bit = 1 << i
        a = np.concatenate([a, a | bit, a, a | bit])
        b = np.concatenate([b, b, b | bit, b | bit])
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


@lru_cache(maxsize=32)
def _cover_index(m):
    """All (A, B) mask pairs over m bits with A | B equal to the full mask."""
    a = np.zeros(1, dtype=np.int64)
    b = np.zeros(1, dtype=np.int64)
    for i in range(m):
        bit = 1 << i
        a = np.concatenate([a | bit, a, a | bit])
        b = np.concatenate([b, b | bit, b | bit])
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def _spread(mask_bits, positions):
    """Map masks over a compressed bit set onto the given bit positions."""
    out = np.zeros_like(mask_bits)
    for j, p in enumerate(positions):
        out |= ((mask_bits >> j) & 1) << p
    return out


def star_value(g1, g2, s):
    g1, m = _as_table(g1)
    g2, m2 = _as_table(g2)
    if m != m2:
        raise ValueError("tables differ in length")
    if s < 0 or s >= g1.shape[0]:
        raise ValueError("mask out of range")
    bits = [i for i in range(m) if (s >> i) & 1]
    a, b = _cover_index(len(bits))
    a = _spread(a, bits)
    b = _spread(b, bits)
    return float(np.dot(g1[a], g2[b]))


def star_table(g1, g2):
    g1, m = _as_table(g1)
    g2, m2 = _as_table(g2)
    if m != m2:
        raise ValueError("tables differ in length")
    low = min(m, _PAIR_BLOCK_BITS)
    a_lo, b_lo = _pair_index(low)
    s_lo = a_lo | b_lo
    out = np.zeros(1 << m, dtype=np.float64)
    a_hi, b_hi = _pair_index(m - low)
    for ah, bh in zip(a_hi << low, b_hi << low):
        a = a_lo | ah
        b = b_lo | bh
        out += np.bincount(s_lo | ah | bh, weights=g1[a] * g2[b], minlength=1 << m)
    return out


def elementary_symmetric(w, nmax):
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    e = np.zeros(nmax + 1, dtype=np.float64)
    e[0] = 1.0
    for i, wi in enumerate(np.asarray(w, dtype=np.float64)):
        top = min(i + 1, nmax)
        if top:
            e[1:top + 1] += wi * e[0:top]
    return e
