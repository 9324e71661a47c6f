"""Finite discrete measures on a box in R^d and operations on them.

A :class:`FiniteDiscreteMeasure` is ``sum_i s_i delta_{x_i}`` with finitely
many strictly positive weights at pairwise distinct positions.  Atoms are kept
in lexicographic order of position so that equality, subtraction and bitmask
enumeration of submeasures are canonical: bit ``i`` of a mask selects atom
``i`` in that order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from radoncone.errors import (
    DuplicatePoint,
    NoAtomAt,
    NonpositiveWeight,
    NotPinpointing,
    NotSubmeasure,
    OverlappingSupports,
    PositionOccupied,
    TooManyAtoms,
)

DEFAULT_CAP = 20

Point = tuple  # tuple of d floats


def as_point(x, dim: int | None = None) -> tuple:
    """Normalize a scalar or coordinate sequence to a tuple of floats."""
    coords = tuple(float(c) for c in np.atleast_1d(np.asarray(x, dtype=float)).ravel())
    if dim is not None and len(coords) != dim:
        raise ValueError(f"point {coords} does not have dimension {dim}")
    if not all(math.isfinite(c) for c in coords):
        raise ValueError(f"point {coords} has non-finite coordinates")
    return coords


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``prod_k [lo_k, hi_k]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be non-empty and of equal length")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("box bounds must be finite")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"empty box {lo} x {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Box":
        return cls((lo,), (hi,))

    @classmethod
    def unit(cls, dim: int = 1) -> "Box":
        return cls((0.0,) * dim, (1.0,) * dim)

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]]) -> "Box":
        """Build from ``[[lo_1, hi_1], ..., [lo_d, hi_d]]``."""
        bounds = [tuple(b) for b in bounds]
        if any(len(b) != 2 for b in bounds):
            raise ValueError("each bound must be a [lo, hi] pair")
        return cls(tuple(b[0] for b in bounds), tuple(b[1] for b in bounds))

    def to_bounds(self) -> list:
        return [[l, h] for l, h in zip(self.lo, self.hi)]

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, x) -> np.ndarray | bool:
        """Membership for one point or an ``(m, d)`` array of points."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or (arr.ndim == 1 and arr.size == self.dim):
            return bool(np.all((arr >= self.lo) & (arr <= self.hi)))
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        return np.all((arr >= self.lo) & (arr <= self.hi), axis=-1)

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(hi <= lo):
            return None
        return Box(tuple(lo), tuple(hi))

    def hull(self, other: "Box") -> "Box":
        return Box(tuple(np.minimum(self.lo, other.lo)), tuple(np.maximum(self.hi, other.hi)))

    def includes(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))


@dataclass(frozen=True)
class Window:
    """Region ``[a, b] x region`` of weights and positions, ``0 < a < b < inf``."""

    region: Box
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (0.0 < a < b < math.inf):
            raise ValueError(f"window weights need 0 < a < b < inf, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.region.dim

    def contains(self, s, x) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return (s >= self.a) & (s <= self.b) & self.region.contains(x)

    def hull(self, other: "Window") -> "Window":
        return Window(self.region.hull(other.region), min(self.a, other.a), max(self.b, other.b))

    def to_json(self) -> dict:
        return {"lambda": self.region.to_bounds(), "a": self.a, "b": self.b}

    @classmethod
    def from_json(cls, obj: dict) -> "Window":
        return cls(Box.from_bounds(obj["lambda"]), obj["a"], obj["b"])


class WeightedAtom(NamedTuple):
    s: float
    x: tuple


def _normalize_positions(positions, n: int, dim: int | None) -> np.ndarray:
    x = np.asarray(positions, dtype=float)
    if n == 0:
        return np.zeros((0, dim or (x.shape[-1] if x.ndim == 2 else 1)))
    if x.ndim == 1 and x.shape[0] == n and (dim in (None, 1)):
        x = x.reshape(n, 1)
    if x.ndim != 2 or x.shape[0] != n:
        raise ValueError(f"positions of shape {x.shape} do not match {n} weights")
    if dim is not None and x.shape[1] != dim:
        raise ValueError(f"positions have dimension {x.shape[1]}, expected {dim}")
    return x


class FiniteDiscreteMeasure:
    """Element ``sum_i s_i delta_{x_i}`` of the finite cone; immutable.

    Parameters
    ----------
    weights : sequence of float
        Strictly positive atom weights.
    positions : array_like
        ``(m, d)`` coordinates, or a flat length-``m`` sequence when ``d = 1``.
    dim : int, optional
        Dimension of the base space; inferred from ``positions`` otherwise.
    domain : Box, optional
        When given, every position is checked to lie in it.

    Raises
    ------
    NonpositiveWeight
        If a weight is not a finite positive number.
    PositionOccupied
        If two atoms share a position.  Weights are never merged.
    """

    __slots__ = ("_s", "_x", "_hash")

    def __init__(self, weights=(), positions=(), *, dim: int | None = None, domain: Box | None = None):
        s = np.asarray(weights, dtype=float).reshape(-1)
        if dim is None and domain is not None:
            dim = domain.dim
        x = _normalize_positions(positions, s.shape[0], dim)
        if s.size and not (np.all(np.isfinite(s)) and np.all(s > 0)):
            raise NonpositiveWeight(f"weights must be finite and > 0, got {s.tolist()}")
        if not np.all(np.isfinite(x)):
            raise ValueError("positions must be finite")
        if domain is not None and s.size and not np.all(domain.contains(x)):
            raise ValueError("an atom lies outside the domain box")
        if s.size > 1:
            order = np.lexsort(x.T[::-1])
            s = s[order]
            x = x[order]
            same = np.all(x[1:] == x[:-1], axis=1)
            if np.any(same):
                raise PositionOccupied(f"two atoms at {tuple(x[1:][same][0])}")
        s = s.copy()
        x = np.ascontiguousarray(x.copy())
        s.setflags(write=False)
        x.setflags(write=False)
        self._s = s
        self._x = x
        self._hash = None

    @classmethod
    def zero(cls, dim: int = 1) -> "FiniteDiscreteMeasure":
        return cls((), (), dim=dim)

    @classmethod
    def from_atoms(cls, atoms: Iterable, dim: int | None = None) -> "FiniteDiscreteMeasure":
        """Build from ``(s, x)`` pairs; ``x`` may be a scalar when ``d = 1``."""
        atoms = list(atoms)
        if not atoms:
            return cls.zero(dim or 1)
        pts = [as_point(x, dim) for _, x in atoms]
        return cls([s for s, _ in atoms], pts, dim=dim or len(pts[0]))

    @classmethod
    def _trusted(cls, s: np.ndarray, x: np.ndarray) -> "FiniteDiscreteMeasure":
        # s, x already validated and sorted
        obj = cls.__new__(cls)
        s = np.ascontiguousarray(s)
        x = np.ascontiguousarray(x)
        s.setflags(write=False)
        x.setflags(write=False)
        obj._s = s
        obj._x = x
        obj._hash = None
        return obj

    @property
    def weights(self) -> np.ndarray:
        return self._s

    @property
    def positions(self) -> np.ndarray:
        return self._x

    @property
    def dim(self) -> int:
        return self._x.shape[1]

    @property
    def n_atoms(self) -> int:
        return self._s.shape[0]

    def __len__(self) -> int:
        return self.n_atoms

    @property
    def atoms(self) -> tuple:
        return tuple(WeightedAtom(float(s), tuple(float(c) for c in x)) for s, x in zip(self._s, self._x))

    @property
    def support(self) -> tuple:
        return tuple(tuple(float(c) for c in x) for x in self._x)

    @property
    def total_mass(self) -> float:
        return float(self._s.sum())

    def is_zero(self) -> bool:
        return self.n_atoms == 0

    def mass(self, region: Box) -> float:
        """``eta(region)`` for a box."""
        if not self.n_atoms:
            return 0.0
        return float(self._s[region.contains(self._x)].sum())

    def index_of(self, x) -> int:
        """Index of the atom at exactly ``x``, or -1."""
        p = np.asarray(as_point(x, self.dim))
        if not self.n_atoms:
            return -1
        hit = np.flatnonzero(np.all(self._x == p, axis=1))
        return int(hit[0]) if hit.size else -1

    def weight_at(self, x) -> float:
        i = self.index_of(x)
        return float(self._s[i]) if i >= 0 else 0.0

    def submeasure(self, mask: int) -> "FiniteDiscreteMeasure":
        """Submeasure made of the atoms selected by the bits of ``mask``."""
        if not self.n_atoms:
            return self
        sel = ((mask >> np.arange(self.n_atoms)) & 1).astype(bool)
        return FiniteDiscreteMeasure._trusted(self._s[sel], self._x[sel])

    def select(self, keep: np.ndarray) -> "FiniteDiscreteMeasure":
        return FiniteDiscreteMeasure._trusted(self._s[keep], self._x[keep])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteDiscreteMeasure):
            return NotImplemented
        return (
            self._s.shape == other._s.shape
            and self._x.shape == other._x.shape
            and bool(np.all(self._s == other._s))
            and bool(np.all(self._x == other._x))
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._x.shape, self._s.tobytes(), self._x.tobytes()))
        return self._hash

    def key(self) -> tuple:
        """Hashable canonical form: tuple of ``(s, x)`` atoms."""
        return self.atoms

    def __repr__(self) -> str:
        if not self.n_atoms:
            return "FiniteDiscreteMeasure(0)"
        terms = []
        for s, x in zip(self._s, self._x):
            pos = f"{x[0]:g}" if self.dim == 1 else "(" + ", ".join(f"{c:g}" for c in x) + ")"
            terms.append(f"{s:g}δ[{pos}]")
        return "FiniteDiscreteMeasure(" + " + ".join(terms) + ")"

    def __add__(self, other: "FiniteDiscreteMeasure") -> "FiniteDiscreteMeasure":
        return disjoint_sum(self, other)

    # JSON ------------------------------------------------------------------
    def to_json(self) -> dict:
        return {"atoms": [{"s": float(s), "x": [float(c) for c in x]} for s, x in zip(self._s, self._x)]}

    @classmethod
    def from_json(cls, obj: dict, dim: int | None = None) -> "FiniteDiscreteMeasure":
        atoms = obj["atoms"]
        if not atoms:
            return cls.zero(dim or 1)
        return cls([a["s"] for a in atoms], [a["x"] for a in atoms], dim=dim)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "FiniteDiscreteMeasure":
        return cls.from_json(json.loads(text))


class MarkedConfiguration:
    """Finite pinpointing configuration of marked points ``(s, x)``.

    At most one mark per position.  Points are stored in position order, so
    bit ``i`` of a mask refers to the same atom as in the image measure.
    """

    __slots__ = ("_s", "_x")

    def __init__(self, points: Iterable = (), dim: int | None = None):
        pts = [(float(s), as_point(x, dim)) for s, x in points]
        if dim is None:
            dim = len(pts[0][1]) if pts else 1
        by_pos: dict = {}
        for s, x in pts:
            if not (math.isfinite(s) and s > 0):
                raise NonpositiveWeight(f"mark {s} is not a positive weight")
            if x in by_pos:
                if by_pos[x] == s:
                    raise DuplicatePoint(f"point {(s, x)} given twice")
                raise NotPinpointing(f"position {x} carries marks {by_pos[x]} and {s}")
            by_pos[x] = s
        xs = sorted(by_pos)
        self._s = np.array([by_pos[x] for x in xs], dtype=float)
        self._x = np.array(xs, dtype=float).reshape(len(xs), dim)

    @property
    def dim(self) -> int:
        return self._x.shape[1]

    @property
    def marks(self) -> np.ndarray:
        return self._s

    @property
    def positions(self) -> np.ndarray:
        return self._x

    @property
    def points(self) -> tuple:
        return tuple((float(s), tuple(float(c) for c in x)) for s, x in zip(self._s, self._x))

    def __len__(self) -> int:
        return self._s.shape[0]

    def __iter__(self) -> Iterator:
        return iter(self.points)

    def __contains__(self, point) -> bool:
        s, x = point
        return (float(s), as_point(x, self.dim)) in set(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarkedConfiguration):
            return NotImplemented
        return self.points == other.points

    def __hash__(self) -> int:
        return hash(self.points)

    def __repr__(self) -> str:
        return f"MarkedConfiguration({list(self.points)})"

    def add(self, s: float, x) -> "MarkedConfiguration":
        """``gamma + delta_(s, x)``; must remain pinpointing."""
        return MarkedConfiguration(list(self.points) + [(s, x)], dim=self.dim)

    def union(self, other: "MarkedConfiguration") -> "MarkedConfiguration":
        return MarkedConfiguration(list(self.points) + list(other.points), dim=self.dim)


# ---------------------------------------------------------------------------
# operations


def _call_on_positions(f, x: np.ndarray) -> np.ndarray:
    vectorized = getattr(f, "vectorized", False)
    if vectorized:
        return np.asarray(f(x), dtype=float).reshape(-1)
    if x.shape[1] == 1:
        return np.array([float(f(float(p[0]))) for p in x])
    return np.array([float(f(tuple(p))) for p in x])


def pairing(eta: FiniteDiscreteMeasure, f) -> float:
    """``<eta, f> = sum_x s_x f(x)``.

    ``f`` is a :class:`~radoncone.functions.TestFunction` or any callable on
    points (scalars when ``d = 1``).
    """
    if not eta.n_atoms:
        return 0.0
    return float(np.dot(eta.weights, _call_on_positions(f, eta.positions)))


def add_atom(eta: FiniteDiscreteMeasure, s: float, x) -> FiniteDiscreteMeasure:
    """``eta + s delta_x`` for a position not yet in the support."""
    s = float(s)
    if not (math.isfinite(s) and s > 0):
        raise NonpositiveWeight(f"weight {s} is not positive")
    p = as_point(x, eta.dim)
    if eta.index_of(p) >= 0:
        raise PositionOccupied(f"position {p} already carries an atom")
    return FiniteDiscreteMeasure(
        np.append(eta.weights, s), np.vstack([eta.positions, np.asarray(p)[None, :]]), dim=eta.dim
    )


def remove_atom(eta: FiniteDiscreteMeasure, x) -> FiniteDiscreteMeasure:
    """``eta - s_x delta_x`` for a position in the support."""
    i = eta.index_of(x) if eta.n_atoms else -1
    if i < 0:
        raise NoAtomAt(f"no atom at {as_point(x)}")
    keep = np.ones(eta.n_atoms, dtype=bool)
    keep[i] = False
    return eta.select(keep)


def is_submeasure(xi: FiniteDiscreteMeasure, eta: FiniteDiscreteMeasure) -> bool:
    """Whether every atom of ``xi`` is an atom of ``eta`` with the same weight."""
    if not xi.n_atoms:
        return True
    if xi.dim != eta.dim or xi.n_atoms > eta.n_atoms:
        return False
    for s, x in zip(xi.weights, xi.positions):
        i = eta.index_of(x)
        if i < 0 or eta.weights[i] != s:
            return False
    return True


def subtract(eta: FiniteDiscreteMeasure, xi: FiniteDiscreteMeasure) -> FiniteDiscreteMeasure:
    """``eta - xi`` for ``xi`` a submeasure of ``eta``."""
    if not is_submeasure(xi, eta):
        raise NotSubmeasure(f"{xi!r} is not a submeasure of {eta!r}")
    keep = np.ones(eta.n_atoms, dtype=bool)
    for x in xi.positions:
        keep[eta.index_of(x)] = False
    return eta.select(keep)


def disjoint_sum(eta: FiniteDiscreteMeasure, other: FiniteDiscreteMeasure) -> FiniteDiscreteMeasure:
    """``eta + other`` for measures with disjoint supports."""
    if not other.n_atoms:
        return eta
    if not eta.n_atoms:
        return other
    if eta.dim != other.dim:
        raise ValueError("dimension mismatch")
    for x in other.positions:
        if eta.index_of(x) >= 0:
            raise OverlappingSupports(f"both measures have an atom at {tuple(x)}")
    return FiniteDiscreteMeasure(
        np.concatenate([eta.weights, other.weights]), np.vstack([eta.positions, other.positions]), dim=eta.dim
    )


def project(eta: FiniteDiscreteMeasure, w: Window) -> FiniteDiscreteMeasure:
    """Keep exactly the atoms with position in ``w.region`` and weight in ``[w.a, w.b]``."""
    if not eta.n_atoms:
        return eta
    return eta.select(w.contains(eta.weights, eta.positions))


def restrict(eta: FiniteDiscreteMeasure, region: Box) -> FiniteDiscreteMeasure:
    """Keep the atoms positioned in ``region``, whatever their weight."""
    if not eta.n_atoms:
        return eta
    return eta.select(region.contains(eta.positions))


def to_configuration(eta: FiniteDiscreteMeasure) -> MarkedConfiguration:
    """Marked configuration ``{(s_x, x)}`` of a measure."""
    return MarkedConfiguration(zip(eta.weights.tolist(), eta.positions.tolist()), dim=eta.dim)


def from_configuration(gamma: MarkedConfiguration) -> FiniteDiscreteMeasure:
    """Image measure ``sum s delta_x`` of a pinpointing configuration."""
    if not isinstance(gamma, MarkedConfiguration):
        gamma = MarkedConfiguration(gamma)
    return FiniteDiscreteMeasure(gamma.marks, gamma.positions, dim=gamma.dim)


def check_cap(n_atoms: int, cap: int | None = DEFAULT_CAP) -> None:
    if cap is not None and n_atoms > cap:
        raise TooManyAtoms(f"{n_atoms} atoms exceeds the enumeration cap of {cap}")


def enumerate_submeasures(eta: FiniteDiscreteMeasure, cap: int | None = DEFAULT_CAP) -> Iterator[FiniteDiscreteMeasure]:
    """Yield all ``2**n`` submeasures, in mask order, starting with the zero measure."""
    check_cap(eta.n_atoms, cap)
    return (eta.submeasure(mask) for mask in range(1 << eta.n_atoms))


def mask_bits(m: int) -> np.ndarray:
    """``(2**m, m)`` boolean matrix; row ``mask`` flags the atoms in ``mask``."""
    masks = np.arange(1 << m)
    return ((masks[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)


def popcounts(m: int) -> np.ndarray:
    return mask_bits(m).sum(axis=1)


def write_measures(path_or_file, measures: Iterable[FiniteDiscreteMeasure], header: dict | None = None) -> int:
    """Write measures, one JSON document per line, behind an optional header line."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w") if own else path_or_file
    count = 0
    try:
        if header is not None:
            fh.write(json.dumps({"header": header}, sort_keys=True, separators=(",", ":")) + "\n")
        for eta in measures:
            fh.write(eta.dumps() + "\n")
            count += 1
    finally:
        if own:
            fh.close()
    return count


def read_measures(path) -> tuple:
    """Inverse of :func:`write_measures`; returns ``(header, measures)``."""
    header = None
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "header" in obj:
                header = obj["header"]
            else:
                out.append(FiniteDiscreteMeasure.from_json(obj))
    return header, out
