"""Pairings of the symmetric polynomial measures ``P^(n)(eta)`` and falling factorials.

``<P^(n)(eta), f^(n)>`` is ``n!`` times the sum over ``n``-element subsets of
the support of ``prod s_x`` times the (symmetric) kernel on the subset.  For a
product kernel ``f^{(x)n}`` this is ``n!`` times the elementary symmetric sum
of the numbers ``s_x f(x)``, which is how it is computed; general symmetric
kernels go through explicit subset enumeration.  The measure ``P^(n)(eta)``
itself is never built.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from radoncone import kernels
from radoncone.errors import DuplicatePoint, PositionOccupied
from radoncone.measures import (
    DEFAULT_CAP,
    FiniteDiscreteMeasure,
    MarkedConfiguration,
    add_atom,
    as_point,
    check_cap,
    disjoint_sum,
    remove_atom,
    to_configuration,
)


class SymmetricTestFunction:
    """Symmetric bounded kernel of order ``n`` on ``X^n``.

    ``evaluator`` maps an array of shape ``(..., n, d)`` to shape ``(...)``.
    Product kernels ``f^{(x)n}`` keep a reference to ``f`` so pairings can use
    elementary symmetric sums.
    """

    __test__ = False

    def __init__(self, n: int, evaluator: Callable, bound: float, tag: str, factor=None):
        if n < 0:
            raise ValueError("order must be >= 0")
        self.n = n
        self._eval = evaluator
        self.bound = float(bound)
        self.tag = tag
        self.factor = factor

    def __call__(self, pts) -> np.ndarray:
        return np.asarray(self._eval(np.asarray(pts, dtype=float)), dtype=float)

    @classmethod
    def product(cls, f, n: int) -> "SymmetricTestFunction":
        """``f(x_1) ... f(x_n)``."""
        def ev(pts):
            vals = np.asarray(f(pts.reshape(-1, pts.shape[-1])), dtype=float).reshape(pts.shape[:-1])
            return np.prod(vals, axis=-1)

        return cls(n, ev, f.bound ** n, f"product[{f.tag}]", factor=f)

    @classmethod
    def symmetrized(cls, kernel: Callable, n: int, bound: float) -> "SymmetricTestFunction":
        """Average of ``kernel`` over all orderings of its ``n`` arguments."""
        perms = list(itertools.permutations(range(n)))

        def ev(pts):
            return sum(np.asarray(kernel(pts[..., list(p), :]), dtype=float) for p in perms) / len(perms)

        return cls(n, ev, bound, "symmetrized")

    @classmethod
    def tabulated(cls, edges, table) -> "SymmetricTestFunction":
        """Piecewise constant kernel: ``table[i_1, ..., i_n]`` on the product of cells of the first coordinate.

        The table is symmetrized by averaging over axis permutations; outside
        ``[edges[0], edges[-1])`` the kernel vanishes.
        """
        T = np.asarray(table, dtype=float)
        n = T.ndim
        edges = np.asarray(edges, dtype=float)
        if any(k != edges.size - 1 for k in T.shape):
            raise ValueError("table must have len(edges) - 1 entries along every axis")
        T = sum(np.transpose(T, p) for p in itertools.permutations(range(n))) / math.factorial(n)

        def ev(pts):
            u = pts[..., 0]
            idx = np.searchsorted(edges, u, side="right") - 1
            inside = np.all((idx >= 0) & (idx < edges.size - 1), axis=-1)
            idx = np.clip(idx, 0, edges.size - 2)
            vals = T[tuple(np.moveaxis(idx, -1, 0))] if n else np.full(u.shape[:-1], float(T))
            return np.where(inside, vals, 0.0)

        return cls(n, ev, float(np.max(np.abs(T))) if T.size else 0.0, "tabulated")

    def symmetry_defect(self, pts: np.ndarray, rng: np.random.Generator, trials: int = 5) -> float:
        """Largest change of the kernel under random argument permutations."""
        base = self(pts)
        worst = 0.0
        for _ in range(trials):
            perm = rng.permutation(self.n)
            worst = max(worst, float(np.max(np.abs(self(pts[..., perm, :]) - base))))
        return worst


def _values(eta: FiniteDiscreteMeasure, f) -> np.ndarray:
    if not eta.n_atoms:
        return np.zeros(0)
    fx = np.asarray(f(eta.positions), dtype=float).reshape(-1)
    return eta.weights * fx


def _esym(w: np.ndarray, n: int) -> float:
    if n > w.size:
        return 0.0
    return float(kernels.elementary_symmetric(w, n)[n])


def p_n_pairing(eta: FiniteDiscreteMeasure, fsym, n: int, cap: int | None = DEFAULT_CAP) -> float:
    """``<P^(n)(eta), f^(n)>``.

    ``fsym`` is a :class:`SymmetricTestFunction`, or a one-point test function
    ``f`` standing for the product kernel ``f^{(x)n}``.  For ``n = 0`` the
    pairing is the constant kernel value (1 for product kernels, or
    ``fsym(empty)`` for a general one).

    Raises
    ------
    TooManyAtoms
        If ``eta`` exceeds the enumeration cap.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    check_cap(eta.n_atoms, cap)
    if isinstance(fsym, SymmetricTestFunction):
        if fsym.n != n:
            raise ValueError(f"kernel of order {fsym.n} paired with P^({n})")
        if fsym.factor is not None:
            return _product_pairing(eta, fsym.factor, n)
        return _subset_pairing(eta, fsym, n)
    return _product_pairing(eta, fsym, n)


def _product_pairing(eta, f, n):
    if n == 0:
        return 1.0
    return math.factorial(n) * _esym(_values(eta, f), n)


def _subset_pairing(eta, fsym, n):
    m = eta.n_atoms
    if n == 0:
        return float(fsym(np.zeros((0, eta.dim))))
    if n > m:
        return 0.0
    idx = np.array(list(itertools.combinations(range(m), n)), dtype=np.intp)
    weights = np.prod(eta.weights[idx], axis=1)
    return math.factorial(n) * float(np.dot(weights, fsym(eta.positions[idx])))


def p_n_pairing_ordered(eta: FiniteDiscreteMeasure, f, n: int) -> float:
    """Sum over ordered tuples of distinct atoms of ``prod s f``; an independent reference for small ``n``."""
    if n == 0:
        return 1.0
    w = _values(eta, f)
    total = 0.0
    for tup in itertools.permutations(range(w.size), n):
        total += math.prod(w[i] for i in tup)
    return total


def falling_factorial_pairing(gamma: MarkedConfiguration, fhat, n: int, cap: int | None = DEFAULT_CAP) -> float:
    """``<(gamma)_n, fhat^{(x)n}>``: ``n!`` times the sum over ``n``-subsets of ``prod fhat``.

    ``fhat`` is a vectorized function of ``(s, x)``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    check_cap(len(gamma), cap)
    if n == 0:
        return 1.0
    if not len(gamma):
        return 0.0
    vals = np.asarray(fhat(gamma.marks, gamma.positions), dtype=float).reshape(-1)
    return math.factorial(n) * _esym(vals, n)


def _abs(f):
    return getattr(f, "abs", lambda: (lambda x: np.abs(f(x))))()


# ---------------------------------------------------------------------------
# identities: each returns (lhs, rhs, scale) with scale the same computation on |f|


def binomial_check(eta: FiniteDiscreteMeasure, eta_prime: FiniteDiscreteMeasure, f, n: int) -> tuple:
    """``<P^(n)(eta + eta'), f^n>`` against ``sum_k C(n,k) <P^(k)(eta), f^k> <P^(n-k)(eta'), f^(n-k)>``.

    Raises
    ------
    OverlappingSupports
        If the two measures share a position.
    """
    total = disjoint_sum(eta, eta_prime)
    lhs = p_n_pairing(total, f, n)
    rhs = sum(math.comb(n, k) * p_n_pairing(eta, f, k) * p_n_pairing(eta_prime, f, n - k) for k in range(n + 1))
    fa = _abs(f)
    scale = p_n_pairing(total, fa, n)
    return lhs, rhs, scale


def lowering_check(gamma: MarkedConfiguration, yhat: tuple, fhat, n: int) -> tuple:
    """``<(gamma + delta_y)_n - (gamma)_n, fhat^n>`` against ``n fhat(y) <(gamma)_(n-1), fhat^(n-1)>``.

    Raises
    ------
    DuplicatePoint
        If ``yhat`` is already in ``gamma``.
    """
    s, x = yhat
    if (s, as_point(x, gamma.dim if len(gamma) else None)) in gamma:
        raise DuplicatePoint(f"{yhat} is already in the configuration")
    bigger = gamma.add(s, x)
    fy = float(np.asarray(fhat(np.array([s]), np.asarray(as_point(x), dtype=float)[None, :])).reshape(-1)[0])
    lhs = falling_factorial_pairing(bigger, fhat, n) - falling_factorial_pairing(gamma, fhat, n)
    rhs = n * fy * falling_factorial_pairing(gamma, fhat, n - 1) if n >= 1 else 0.0
    fa = lambda s_, x_: np.abs(fhat(s_, x_))
    scale = falling_factorial_pairing(bigger, fa, n) + falling_factorial_pairing(gamma, fa, n)
    return lhs, rhs, scale


def generating_function_check(eta: FiniteDiscreteMeasure, f, N: int | None = None) -> tuple:
    """``sum_{n <= N} <P^(n)(eta), f^n> / n!`` against ``prod (1 + s_x f(x))``."""
    m = eta.n_atoms
    N = m if N is None else N
    if N < m:
        raise ValueError("the series only terminates for N >= number of atoms")
    series = sum(p_n_pairing(eta, f, n) / math.factorial(n) for n in range(N + 1))
    product = float(np.prod(1.0 + _values(eta, f)))
    scale = float(np.prod(1.0 + np.abs(_values(eta, f))))
    return series, product, scale


def polynomial_birth_gradient(eta: FiniteDiscreteMeasure, s: float, x, f, n: int) -> float:
    """``n s f(x) <P^(n-1)(eta), f^(n-1)>``, valid for ``x`` outside the support."""
    if eta.index_of(x) >= 0:
        raise PositionOccupied(f"position {as_point(x)} already carries an atom")
    if n == 0:
        return 0.0
    fx = float(np.asarray(f(np.asarray(as_point(x, eta.dim), dtype=float)[None, :])).reshape(-1)[0])
    return n * s * fx * p_n_pairing(eta, f, n - 1)


def polynomial_death_gradient(eta: FiniteDiscreteMeasure, x, f, n: int) -> float:
    """``-n s_x f(x) <P^(n-1)(eta - s_x delta_x), f^(n-1)>`` for ``x`` in the support."""
    rest = remove_atom(eta, x)
    if n == 0:
        return 0.0
    s = eta.weight_at(x)
    fx = float(np.asarray(f(np.asarray(as_point(x, eta.dim), dtype=float)[None, :])).reshape(-1)[0])
    return -n * s * fx * p_n_pairing(rest, f, n - 1)


def gradient_checks(eta: FiniteDiscreteMeasure, s: float, x_new, x_old, f, n: int) -> list:
    """Formula against direct difference for both gradients: list of ``(lhs, rhs, scale)``."""
    fa = _abs(f)
    bigger = add_atom(eta, s, x_new)
    birth_direct = p_n_pairing(bigger, f, n) - p_n_pairing(eta, f, n)
    birth_scale = p_n_pairing(bigger, fa, n) + p_n_pairing(eta, fa, n)
    out = [(polynomial_birth_gradient(eta, s, x_new, f, n), birth_direct, birth_scale)]
    if x_old is not None:
        smaller = remove_atom(eta, x_old)
        death_direct = p_n_pairing(smaller, f, n) - p_n_pairing(eta, f, n)
        death_scale = p_n_pairing(smaller, fa, n) + p_n_pairing(eta, fa, n)
        out.append((polynomial_death_gradient(eta, x_old, f, n), death_direct, death_scale))
    return out


def cross_representation(eta: FiniteDiscreteMeasure, f, n: int) -> tuple:
    """``<P^(n)(eta), f^n>`` and ``<(R^-1 eta)_n, s f^n>``, which agree exactly."""
    fhat = lambda s, x: s * np.asarray(f(x), dtype=float).reshape(np.shape(s))
    return p_n_pairing(eta, f, n), falling_factorial_pairing(to_configuration(eta), fhat, n)


def pairing_bound(eta: FiniteDiscreteMeasure, f, n: int) -> tuple:
    """``|<P^(n)(eta), f^n>|`` and ``<eta, |f|>**n``; the first never exceeds the second."""
    return abs(p_n_pairing(eta, f, n)), float(np.sum(np.abs(_values(eta, f)))) ** n
