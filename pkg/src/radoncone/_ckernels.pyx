# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled power-set kernels.

Tables are indexed by bitmask: bit ``i`` of an index selects atom ``i`` of a
measure in canonical order, and a table of length ``2**m`` holds one value per
submeasure.  ``radoncone._pykernels`` implements the same functions in numpy.
"""
import numpy as np


cdef Py_ssize_t _check_pow2(Py_ssize_t n) except -1:
    if n <= 0 or (n & (n - 1)) != 0:
        raise ValueError(f"table length {n} is not a power of two")
    return 0


def subset_zeta(const double[::1] values):
    """out[S] = sum of values[T] over T subset of S."""
    cdef Py_ssize_t n = values.shape[0]
    _check_pow2(n)
    out_arr = np.array(values, dtype=np.float64, copy=True)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t bit = 1, mask
    while bit < n:
        for mask in range(n):
            if mask & bit:
                out[mask] += out[mask ^ bit]
        bit <<= 1
    return out_arr


def subset_mobius(const double[::1] values):
    """out[S] = sum of (-1)**(|S|-|T|) values[T] over T subset of S."""
    cdef Py_ssize_t n = values.shape[0]
    _check_pow2(n)
    out_arr = np.array(values, dtype=np.float64, copy=True)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t bit = 1, mask
    while bit < n:
        for mask in range(n):
            if mask & bit:
                out[mask] -= out[mask ^ bit]
        bit <<= 1
    return out_arr


cdef double _star_at(const double[::1] g1, const double[::1] g2, Py_ssize_t s) nogil:
    # A runs over submasks of s; B must cover s \ A and may share any C within A.
    cdef double acc = 0.0
    cdef Py_ssize_t a = s, c, rest
    while True:
        rest = s ^ a
        c = a
        while True:
            acc += g1[a] * g2[rest | c]
            if c == 0:
                break
            c = (c - 1) & a
        if a == 0:
            break
        a = (a - 1) & s
    return acc


def star_value(const double[::1] g1, const double[::1] g2, Py_ssize_t s):
    """Sum of g1[A] * g2[B] over pairs with A | B == s."""
    cdef Py_ssize_t n = g1.shape[0]
    _check_pow2(n)
    if g2.shape[0] != n:
        raise ValueError("tables differ in length")
    if s < 0 or s >= n:
        raise ValueError("mask out of range")
    return _star_at(g1, g2, s)


def star_table(const double[::1] g1, const double[::1] g2):
    """out[S] = star_value(g1, g2, S) for every mask S."""
    cdef Py_ssize_t n = g1.shape[0]
    _check_pow2(n)
    if g2.shape[0] != n:
        raise ValueError("tables differ in length")
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t s
    with nogil:
        for s in range(n):
            out[s] = _star_at(g1, g2, s)
    return out_arr


def elementary_symmetric(const double[::1] w, Py_ssize_t nmax):
    """e[k] = sum over k-subsets of the product of w, for k = 0..nmax."""
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    out_arr = np.zeros(nmax + 1, dtype=np.float64)
    cdef double[::1] e = out_arr
    cdef Py_ssize_t m = w.shape[0], i, k, top
    e[0] = 1.0
    for i in range(m):
        top = i + 1 if i + 1 < nmax else nmax
        for k in range(top, 0, -1):
            e[k] += w[i] * e[k - 1]
    return out_arr
