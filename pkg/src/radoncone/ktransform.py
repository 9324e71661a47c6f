"""Functions on finite measures, the K-transform, its inverse and the star product.

A :class:`ConeFunction` ``G`` is evaluated either one measure at a time or as a
*table*: for a measure ``eta`` with ``m`` atoms, ``G.table(eta)`` is the array
of ``G`` on all ``2**m`` submeasures, indexed by bitmask in the canonical atom
order.  The K-transform is then a subset-sum (zeta) transform of that table
and the inverse a Moebius transform.

Support certificates
--------------------
``window``
    ``G(xi) = 0`` unless every atom of ``xi`` lies in the window (positions in
    ``window.region`` and weights in ``[a, b]``).
``region``
    The same, for positions only (weights unrestricted).
``exp_class``
    ``(region, C)`` with ``|G(xi)| <= C**|xi| * prod(s_x)`` and vanishing off
    ``region``.
``bounded``
    :class:`BoundCertificate` ``(c, window, N)``: ``G`` vanishes unless ``xi``
    sits in ``window`` with at most ``N`` atoms, and ``|G| <= c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from radoncone import kernels
from radoncone.errors import BoundViolated
from radoncone.measures import (
    DEFAULT_CAP,
    Box,
    FiniteDiscreteMeasure,
    Window,
    check_cap,
    mask_bits,
    popcounts,
    project,
    restrict,
)

STAR_CAP = 13


@dataclass(frozen=True)
class BoundCertificate:
    c: float
    window: Window
    N: int

    @property
    def constant(self) -> float:
        """``C = c * max(1, 1/a)**N`` in the growth bound of ``KG``."""
        return self.c * max(1.0, 1.0 / self.window.a) ** self.N

    def to_json(self) -> dict:
        return {"c": self.c, "window": self.window.to_json(), "N": self.N}

    @classmethod
    def from_json(cls, obj: dict) -> "BoundCertificate":
        return cls(float(obj["c"]), Window.from_json(obj["window"]), int(obj["N"]))


@dataclass(frozen=True)
class BoundedSetSpec:
    """Bounded set of finite measures: atoms in ``window``, ``min_size <= |tau| <= N``.

    ``predicate(s, x)`` (vectorized, boolean) optionally narrows the allowed
    atoms further.
    """

    window: Window
    N: int
    min_size: int = 0
    predicate: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.N < 0 or not (0 <= self.min_size <= self.N):
            raise ValueError("need 0 <= min_size <= N")

    def atom_ok(self, s, x) -> np.ndarray:
        ok = self.window.contains(s, x)
        if self.predicate is not None:
            ok = ok & np.asarray(self.predicate(s, x), dtype=bool)
        return ok

    def contains(self, xi: FiniteDiscreteMeasure) -> bool:
        m = xi.n_atoms
        if not (self.min_size <= m <= self.N):
            return False
        return bool(np.all(self.atom_ok(xi.weights, xi.positions))) if m else True

    def subset_of(self, other: "BoundedSetSpec") -> bool:
        """Sufficient test for inclusion (predicates must be absent on ``self``'s side or identical)."""
        w, v = self.window, other.window
        inner = v.region.includes(w.region) and v.a <= w.a and w.b <= v.b
        pred_ok = other.predicate is None or other.predicate is self.predicate
        return inner and pred_ok and other.min_size <= self.min_size and self.N <= other.N


class ConeFunction:
    """Real function on finite measures with support certificates.

    Parameters
    ----------
    value : callable, optional
        ``xi -> float``.
    table : callable, optional
        ``eta -> ndarray`` of the values on all submeasures of ``eta``.
    batch : callable, optional
        ``(W, X) -> ndarray (M, 2**m)`` for ``M`` measures of ``m`` atoms each,
        weights ``W (M, m)`` and positions ``X (M, m, d)`` in canonical order.
    """

    def __init__(self, value: Callable | None = None, *, table: Callable | None = None,
                 batch: Callable | None = None, window: Window | None = None, region: Box | None = None,
                 exp_class: tuple | None = None, bounded: BoundCertificate | None = None,
                 tag: str = "custom", params: dict | None = None):
        if value is None and table is None:
            raise ValueError("need a value or a table evaluator")
        self._value = value
        self._table = table
        self._batch = batch
        self.window = window
        if region is None:
            if window is not None:
                region = window.region
            elif exp_class is not None:
                region = exp_class[0]
            elif bounded is not None:
                region = bounded.window.region
        self.region = region
        if window is None and bounded is not None:
            self.window = bounded.window
        self.exp_class = exp_class
        self.bounded = bounded
        self.tag = tag
        self.params = params or {}

    def __repr__(self) -> str:
        return f"ConeFunction({self.tag})"

    def __call__(self, xi: FiniteDiscreteMeasure) -> float:
        if self._value is not None:
            return float(self._value(xi))
        return float(self._table(xi)[-1])

    def table(self, eta: FiniteDiscreteMeasure) -> np.ndarray:
        """``G`` on every submeasure of ``eta``, by bitmask."""
        if self._table is not None:
            return np.asarray(self._table(eta), dtype=float)
        return np.array([self._value(eta.submeasure(mask)) for mask in range(1 << eta.n_atoms)], dtype=float)

    def batch_table(self, W: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Tables for ``M`` measures with the same atom count."""
        if self._batch is not None:
            return np.asarray(self._batch(W, X), dtype=float)
        rows = [self.table(FiniteDiscreteMeasure._trusted(w, x)) for w, x in zip(W, X)]
        return np.array(rows, dtype=float).reshape(W.shape[0], 1 << W.shape[1])

    def localize(self, eta: FiniteDiscreteMeasure) -> FiniteDiscreteMeasure:
        """The part of ``eta`` that the K-sum can see."""
        if self.window is not None:
            return project(eta, self.window)
        if self.region is not None:
            return restrict(eta, self.region)
        return eta

    @property
    def has_local_support(self) -> bool:
        return self.window is not None or self.region is not None

    # linear structure ----------------------------------------------------
    def combine(self, other: "ConeFunction", alpha: float = 1.0, beta: float = 1.0) -> "ConeFunction":
        """``alpha * self + beta * other``."""
        f, g = self, other
        window = _hull(f.window, g.window) if f.window is not None and g.window is not None else None
        region = _hull(f.region, g.region) if f.region is not None and g.region is not None else None
        bounded = None
        if f.bounded is not None and g.bounded is not None:
            bounded = BoundCertificate(abs(alpha) * f.bounded.c + abs(beta) * g.bounded.c,
                                       f.bounded.window.hull(g.bounded.window), max(f.bounded.N, g.bounded.N))
        batch = None
        if f._batch is not None and g._batch is not None:
            batch = lambda W, X: alpha * f.batch_table(W, X) + beta * g.batch_table(W, X)
        return ConeFunction(
            lambda xi: alpha * f(xi) + beta * g(xi),
            table=lambda eta: alpha * f.table(eta) + beta * g.table(eta),
            batch=batch, window=window, region=region, bounded=bounded, tag="combination",
        )

    def __add__(self, other: "ConeFunction") -> "ConeFunction":
        return self.combine(other, 1.0, 1.0)

    def __sub__(self, other: "ConeFunction") -> "ConeFunction":
        return self.combine(other, 1.0, -1.0)

    def __mul__(self, c: float) -> "ConeFunction":
        c = float(c)
        f = self
        bounded = None if f.bounded is None else BoundCertificate(abs(c) * f.bounded.c, f.bounded.window, f.bounded.N)
        # |c| C^n prod s keeps the exponential form only when |c| <= 1
        exp_class = f.exp_class if abs(c) <= 1.0 else None
        batch = None if f._batch is None else (lambda W, X: c * f.batch_table(W, X))
        return ConeFunction(lambda xi: c * f(xi), table=lambda eta: c * f.table(eta), batch=batch,
                            window=f.window, region=f.region, exp_class=exp_class, bounded=bounded,
                            tag=f"{c:g}*{f.tag}")

    __rmul__ = __mul__

    # catalogue -----------------------------------------------------------
    @classmethod
    def lp_exponent(cls, f) -> "ConeFunction":
        """``xi -> prod_x s_x f(x)`` with value 1 at the zero measure."""

        def table(eta):
            w = eta.weights * _fvals(f, eta.positions)
            return _product_table(w[None, :])[0]

        def batch(W, X):
            M, m = W.shape
            fx = np.asarray(f(X.reshape(-1, X.shape[-1])), dtype=float).reshape(M, m) if m else np.zeros((M, 0))
            return _product_table(W * fx)

        def value(xi):
            return float(np.prod(xi.weights * _fvals(f, xi.positions))) if xi.n_atoms else 1.0

        region = getattr(f, "support", None)
        bound = getattr(f, "bound", None)
        exp_class = (region, float(bound)) if region is not None and bound is not None else None
        return cls(value, table=table, batch=batch, region=region, exp_class=exp_class,
                   tag="lp-exponent", params={"f": f})

    @classmethod
    def unit(cls, dim: int = 1) -> "ConeFunction":
        """Indicator of the zero measure, the unit of the star product."""

        def table(eta):
            out = np.zeros(1 << eta.n_atoms)
            out[0] = 1.0
            return out

        def batch(W, X):
            out = np.zeros((W.shape[0], 1 << W.shape[1]))
            out[:, 0] = 1.0
            return out

        w = Window(Box.unit(dim), 0.5, 1.0)
        return cls(lambda xi: 1.0 if xi.n_atoms == 0 else 0.0, table=table, batch=batch, window=w,
                   exp_class=(w.region, 0.0), bounded=BoundCertificate(1.0, w, 0), tag="unit")

    @classmethod
    def singleton(cls, f) -> "ConeFunction":
        """``s f(x)`` on one-atom measures, zero otherwise."""

        def table(eta):
            out = np.zeros(1 << eta.n_atoms)
            if eta.n_atoms:
                out[1 << np.arange(eta.n_atoms)] = eta.weights * _fvals(f, eta.positions)
            return out

        def value(xi):
            return float(xi.weights[0] * _fvals(f, xi.positions)[0]) if xi.n_atoms == 1 else 0.0

        region = getattr(f, "support", None)
        return cls(value, table=table, region=region, tag="singleton", params={"f": f})

    @classmethod
    def indicator(cls, spec: BoundedSetSpec, value: float = 1.0) -> "ConeFunction":
        """``value`` times the indicator of the bounded set described by ``spec``."""

        def batch(W, X):
            M, m = W.shape
            out = np.zeros((M, 1 << m))
            sizes = popcounts(m)
            size_ok = (sizes >= spec.min_size) & (sizes <= spec.N)
            if m == 0:
                out[:, 0] = value * float(size_ok[0])
                return out
            ok = spec.atom_ok(W.reshape(-1), X.reshape(-1, X.shape[-1])).reshape(M, m)
            bits = mask_bits(m)
            uses_bad = (bits[None, :, :] & ~ok[:, None, :]).any(axis=-1)
            return value * (size_ok[None, :] & ~uses_bad).astype(float)

        def table(eta):
            return batch(eta.weights[None, :], eta.positions[None, :, :])[0]

        return cls(lambda xi: value * float(spec.contains(xi)), table=table, batch=batch,
                   window=spec.window, bounded=BoundCertificate(abs(value), spec.window, spec.N),
                   tag="bounded-set-indicator", params={"spec": spec, "value": value})

    @classmethod
    def zero_function(cls, dim: int = 1) -> "ConeFunction":
        w = Window(Box.unit(dim), 0.5, 1.0)
        return cls(lambda xi: 0.0, table=lambda eta: np.zeros(1 << eta.n_atoms),
                   batch=lambda W, X: np.zeros((W.shape[0], 1 << W.shape[1])),
                   window=w, bounded=BoundCertificate(0.0, w, 0), tag="zero")

    @classmethod
    def tabulated(cls, entries: Iterable, *, window: Window | None = None,
                  bounded: BoundCertificate | None = None) -> "ConeFunction":
        """Finitely supported function given by ``(measure, value)`` pairs.

        Without an explicit window the certificate is the smallest window
        holding every atom of every listed measure (a unit window when only
        the zero measure is listed).
        """
        lookup: dict = {}
        dim = 1
        for xi, v in entries:
            lookup[xi.key()] = float(v)
            dim = xi.dim
        if window is None and bounded is None:
            window = _window_of(k for k in lookup if k)
            if window is None:
                # only the zero measure carries a value: any window certifies it
                window = Window(Box.unit(dim), 0.5, 1.0)

        def value(xi):
            return lookup.get(xi.key(), 0.0)

        return cls(value, window=window, bounded=bounded, tag="tabulated", params={"entries": lookup})

    @classmethod
    def on_submeasures(cls, eta: FiniteDiscreteMeasure, values) -> "ConeFunction":
        """Tabulated function equal to ``values[mask]`` on the submeasure ``mask`` of ``eta``."""
        values = np.asarray(values, dtype=float)
        if values.shape != (1 << eta.n_atoms,):
            raise ValueError("need one value per submeasure")
        G = cls.tabulated(((eta.submeasure(m), values[m]) for m in range(values.size)))
        base = G._value
        key = eta.key()

        def table(xi):
            if xi.key() == key:
                return values.copy()
            return np.array([base(xi.submeasure(mask)) for mask in range(1 << xi.n_atoms)], dtype=float)

        G._table = table
        return G

    def to_json(self) -> dict:
        if self.tag != "tabulated":
            raise ValueError("only tabulated functions serialize")
        entries = []
        for atoms, v in self.params["entries"].items():
            entries.append({"measure": {"atoms": [{"s": s, "x": list(x)} for s, x in atoms]}, "value": v})
        cert: dict = {}
        if self.window is not None:
            cert["window"] = self.window.to_json()
        if self.bounded is not None:
            cert["bounded"] = self.bounded.to_json()
        return {"entries": entries, "certificate": cert}

    @classmethod
    def from_json(cls, obj: dict, dim: int | None = None) -> "ConeFunction":
        pairs = [(FiniteDiscreteMeasure.from_json(e["measure"], dim=dim), e["value"]) for e in obj["entries"]]
        cert = obj.get("certificate", {})
        window = Window.from_json(cert["window"]) if "window" in cert else None
        bounded = BoundCertificate.from_json(cert["bounded"]) if "bounded" in cert else None
        return cls.tabulated(pairs, window=window, bounded=bounded)


# ---------------------------------------------------------------------------
# helpers


def _fvals(f, x: np.ndarray) -> np.ndarray:
    if getattr(f, "vectorized", False):
        return np.asarray(f(x), dtype=float).reshape(-1)
    if x.shape[1] == 1:
        return np.array([float(f(float(p[0]))) for p in x])
    return np.array([float(f(tuple(p))) for p in x])


def _product_table(w: np.ndarray) -> np.ndarray:
    """Rows of ``prod_{i in mask} w[r, i]`` for all masks, by doubling."""
    M, m = w.shape
    out = np.ones((M, 1))
    for i in range(m):
        out = np.concatenate([out, out * w[:, i:i + 1]], axis=1)
    return out


def _hull(a, b):
    return a.hull(b)


def _window_of(keys) -> Window | None:
    ss, xs = [], []
    for atoms in keys:
        for s, x in atoms:
            ss.append(s)
            xs.append(x)
    if not ss:
        return None
    xs = np.asarray(xs, dtype=float)
    lo, hi = xs.min(axis=0), xs.max(axis=0)
    pad = np.where(hi > lo, 0.0, 0.5)
    a, b = min(ss), max(ss)
    if b <= a:
        b = a * 2.0
    return Window(Box(tuple(lo - pad), tuple(hi + pad)), a, b)


# ---------------------------------------------------------------------------
# transforms


def k_transform(G: ConeFunction, eta: FiniteDiscreteMeasure, cap: int | None = DEFAULT_CAP) -> float:
    """``(KG)(eta) = sum over submeasures xi of eta of G(xi)``.

    Only the part of ``eta`` inside ``G``'s certified support is enumerated.

    Raises
    ------
    TooManyAtoms
        If that part has more atoms than ``cap``.
    """
    local = G.localize(eta)
    check_cap(local.n_atoms, cap)
    return float(np.sum(G.table(local)))


def k_transform_function(G: ConeFunction, cap: int | None = DEFAULT_CAP) -> ConeFunction:
    """``KG`` as a function on finite measures (tables by subset-sum transform)."""

    def table(eta):
        check_cap(eta.n_atoms, cap)
        return kernels.subset_zeta(G.table(eta))

    return ConeFunction(lambda eta: k_transform(G, eta, cap), table=table, tag=f"K[{G.tag}]")


def k_inverse(F, eta: FiniteDiscreteMeasure, cap: int | None = DEFAULT_CAP) -> float:
    """``sum over xi of (-1)**(|eta| - |xi|) F(xi)``.

    ``F`` is a :class:`ConeFunction` (its table is used) or a plain callable
    on measures.
    """
    check_cap(eta.n_atoms, cap)
    m = eta.n_atoms
    if isinstance(F, ConeFunction):
        vals = F.table(eta)
    else:
        vals = np.array([float(F(eta.submeasure(mask))) for mask in range(1 << m)])
    signs = np.where((m - popcounts(m)) % 2 == 0, 1.0, -1.0)
    return float(np.dot(signs, vals))


def k_inverse_function(F: ConeFunction, cap: int | None = DEFAULT_CAP) -> ConeFunction:
    """``K^{-1} F`` as a function (tables by Moebius transform)."""

    def table(eta):
        check_cap(eta.n_atoms, cap)
        return kernels.subset_mobius(F.table(eta))

    return ConeFunction(lambda eta: k_inverse(F, eta, cap), table=table, tag=f"Kinv[{F.tag}]")


def star_convolution(G1: ConeFunction, G2: ConeFunction, cap: int | None = STAR_CAP) -> ConeFunction:
    """``(G1 * G2)(eta) = sum over disjoint xi1 + xi2 + xi3 = eta of G1(xi1 + xi2) G2(xi2 + xi3)``.

    Evaluated by enumerating the ``3**m`` ordered partitions.

    Raises
    ------
    ValueError
        If either factor lacks a support certificate.
    """
    if not (G1.has_local_support and G2.has_local_support):
        raise ValueError("star product needs local-support certificates on both factors")
    window = G1.window.hull(G2.window) if G1.window is not None and G2.window is not None else None
    region = G1.region.hull(G2.region)

    def value(eta):
        check_cap(eta.n_atoms, cap)
        return kernels.star_value(G1.table(eta), G2.table(eta), (1 << eta.n_atoms) - 1)

    def table(eta):
        check_cap(eta.n_atoms, cap)
        return kernels.star_table(G1.table(eta), G2.table(eta))

    return ConeFunction(value, table=table, window=window, region=region,
                        tag=f"({G1.tag})*({G2.tag})", params={"factors": (G1, G2)})


def star_brute_force(G1, G2, eta: FiniteDiscreteMeasure) -> float:
    """Reference star product by looping over atom labels 0/1/2 (small ``m`` only)."""
    import itertools

    m = eta.n_atoms
    total = 0.0
    for labels in itertools.product((0, 1, 2), repeat=m):
        a = sum(1 << i for i, l in enumerate(labels) if l in (0, 1))
        b = sum(1 << i for i, l in enumerate(labels) if l in (1, 2))
        total += G1(eta.submeasure(a)) * G2(eta.submeasure(b))
    return total


@dataclass
class BoundReport:
    n: int
    constant: float
    max_ratio: float
    worst: FiniteDiscreteMeasure | None

    def to_json(self) -> dict:
        return {"n": self.n, "C": self.constant, "max_ratio": self.max_ratio}


def k_bound_check(G: ConeFunction, etas: Iterable[FiniteDiscreteMeasure], cap: int | None = DEFAULT_CAP) -> BoundReport:
    """Check ``|KG(eta)| <= C (1 + eta(Lambda))**N`` on every ``eta``.

    Raises
    ------
    BoundViolated
        If some ``eta`` breaks the bound (beyond rounding), which means the
        certificate is inconsistent with ``G``.
    """
    cert = G.bounded
    if cert is None:
        raise ValueError("function carries no bounded-support certificate")
    C = cert.constant
    worst, max_ratio, n = None, 0.0, 0
    for eta in etas:
        n += 1
        kg = abs(k_transform(G, eta, cap))
        rhs = C * (1.0 + eta.mass(cert.window.region)) ** cert.N
        ratio = kg / rhs if rhs > 0 else (0.0 if kg == 0 else math.inf)
        if ratio > max_ratio:
            max_ratio, worst = ratio, eta
        if kg > rhs * (1 + 1e-12) + 1e-300:
            raise BoundViolated(f"|KG| = {kg} exceeds C(1+eta(L))^N = {rhs} at {eta!r}")
    return BoundReport(n, C, max_ratio, worst)


def k_transform_batch(G: ConeFunction, batch, cap: int | None = DEFAULT_CAP) -> np.ndarray:
    """``KG`` for every replicate of a :class:`~radoncone.sampling.MeasureBatch`.

    Replicates are localized to ``G``'s support, grouped by atom count and
    tabulated group-wise.
    """
    if G.window is not None:
        batch = batch.project(G.window)
    elif G.region is not None and batch.weights.size:
        batch = batch.select_atoms(G.region.contains(batch.positions))
    counts = batch.counts
    out = np.zeros(batch.size)
    if batch.size == 0:
        return out
    check_cap(int(counts.max()), cap)
    d = batch.positions.shape[1]
    for m in np.unique(counts):
        rows = np.flatnonzero(counts == m)
        idx = batch.offsets[rows][:, None] + np.arange(m)[None, :]
        W, X = canonical_order(batch.weights[idx], batch.positions[idx].reshape(rows.size, m, d))
        out[rows] = G.batch_table(W, X).sum(axis=1)
    return out


def canonical_order(W: np.ndarray, X: np.ndarray) -> tuple:
    """Sort the atoms of each row of ``(W, X)`` lexicographically by position."""
    M, m = W.shape
    if m < 2:
        return W, X
    d = X.shape[-1]
    order = np.lexsort(tuple(X[..., k] for k in range(d - 1, -1, -1)), axis=-1)
    return np.take_along_axis(W, order, axis=1), np.take_along_axis(X, order[..., None], axis=1)
