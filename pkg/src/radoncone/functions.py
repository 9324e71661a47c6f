"""Catalogued test functions on the base box and on the marked space.

:class:`TestFunction` lives on ``X`` (a box in R^d); :class:`MarkedTestFunction`
lives on ``(0, inf) x X``.  Every catalogue entry is vectorized, knows a box
outside which it vanishes, an upper bound on its absolute value, and the
breakpoints where it may be non-smooth (used to place quadrature panels).
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from radoncone.measures import Box, Window


def _as_points(x, dim: int):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0 or (arr.ndim == 1 and arr.size == dim and dim > 1)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if dim == 1 and arr.shape[-1:] != (1,):
        arr = arr[..., None]
    return arr, scalar


# graded panel edges, in the reference coordinate u, for integrating bump profiles
BUMP_KNOTS = (-1.0, -0.95, -0.85, -0.6, 0.0, 0.6, 0.85, 0.95, 1.0)


def _bump_knots(lo: float, hi: float) -> tuple:
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return tuple(mid + half * u for u in BUMP_KNOTS)


def _bump_profile(u):
    """``exp(1 - 1/(1 - u**2))`` on ``|u| < 1``, zero elsewhere; peak 1 at 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


class TestFunction:
    """Bounded function on ``X`` vanishing outside ``support``.

    Call with a single point (a scalar when ``d = 1``) to get a float, or with
    an ``(..., d)`` array to get an array of shape ``(...)``.
    """

    __test__ = False  # not a pytest class
    vectorized = True

    def __init__(
        self,
        evaluator: Callable[[np.ndarray], np.ndarray],
        support: Box,
        bound: float,
        tag: str,
        breakpoints: Sequence[Sequence[float]] | None = None,
        params: dict | None = None,
    ):
        self._eval = evaluator
        self.support = support
        self.bound = float(bound)
        self.tag = tag
        if breakpoints is None:
            breakpoints = [(l, h) for l, h in zip(support.lo, support.hi)]
        self.breakpoints = tuple(tuple(sorted(set(float(b) for b in bp))) for bp in breakpoints)
        self.params = params or {}

    @property
    def dim(self) -> int:
        return self.support.dim

    def __call__(self, x):
        arr, scalar = _as_points(x, self.dim)
        inside = self.support.contains(arr)
        vals = np.where(inside, self._eval(arr), 0.0)
        if scalar:
            return float(np.asarray(vals).reshape(-1)[0])
        return vals

    def __repr__(self) -> str:
        return f"TestFunction({self.tag}, {self.params})"

    def scaled(self, c: float) -> "TestFunction":
        ev = self._eval
        params = dict(self.params, scale=self.params.get("scale", 1.0) * c)
        return TestFunction(lambda x: c * ev(x), self.support, abs(c) * self.bound, self.tag, self.breakpoints, params)

    def abs(self) -> "TestFunction":
        ev = self._eval
        return TestFunction(lambda x: np.abs(ev(x)), self.support, self.bound, self.tag + "|abs", self.breakpoints, dict(self.params, abs=True))

    def to_json(self) -> dict:
        if "spec" not in self.params:
            raise ValueError(f"{self.tag} test function is not serializable")
        return dict(self.params["spec"])

    # catalogue -------------------------------------------------------------
    @classmethod
    def box_indicator(cls, box: Box, value: float = 1.0) -> "TestFunction":
        spec = {"tag": "box-indicator", "box": box.to_bounds(), "value": value}
        return cls(lambda x: np.full(x.shape[:-1], float(value)), box, abs(value), "box-indicator", None, {"spec": spec})

    @classmethod
    def zero(cls, dim: int = 1) -> "TestFunction":
        return cls.box_indicator(Box.unit(dim), 0.0)

    @classmethod
    def bump(cls, box: Box, height: float = 1.0) -> "TestFunction":
        """Smooth compactly supported bump, ``height`` at the centre of ``box``."""
        lo = np.asarray(box.lo)
        half = (np.asarray(box.hi) - lo) / 2.0
        centre = lo + half

        def ev(x):
            return height * np.prod(_bump_profile((x - centre) / half), axis=-1)

        spec = {"tag": "bump", "box": box.to_bounds(), "height": height}
        bps = [_bump_knots(l, h) for l, h in zip(box.lo, box.hi)]
        return cls(ev, box, abs(height), "bump", bps, {"spec": spec})

    @classmethod
    def piecewise_constant(cls, edges: Sequence[float], values: Sequence[float], box: Box | None = None) -> "TestFunction":
        """Step function of the first coordinate: ``values[k]`` on ``[edges[k], edges[k+1])``.

        The last piece is closed on the right.  For ``d > 1`` the remaining
        coordinates range over ``box``.
        """
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.ndim != 1 or len(edges) != len(values) + 1 or np.any(np.diff(edges) <= 0):
            raise ValueError("need strictly increasing edges, one more than values")
        if box is None:
            box = Box.interval(edges[0], edges[-1])
        elif (box.lo[0], box.hi[0]) != (edges[0], edges[-1]):
            raise ValueError("box must span the edges in the first coordinate")

        def ev(x):
            k = np.clip(np.searchsorted(edges, x[..., 0], side="right") - 1, 0, len(values) - 1)
            return values[k]

        bps = [tuple(edges)] + [(l, h) for l, h in zip(box.lo[1:], box.hi[1:])]
        spec = {"tag": "piecewise-constant", "edges": edges.tolist(), "values": values.tolist()}
        if box.dim > 1:
            spec["box"] = box.to_bounds()
        return cls(ev, box, float(np.max(np.abs(values))), "piecewise-constant", bps, {"spec": spec})

    @classmethod
    def polynomial(cls, box: Box, coeffs: Sequence[float]) -> "TestFunction":
        """``sum_k coeffs[k] * x_0**k`` inside ``box``, zero outside."""
        poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        lo, hi = box.lo[0], box.hi[0]
        cands = [lo, hi] + [r.real for r in poly.deriv().roots() if abs(r.imag) < 1e-12 and lo < r.real < hi]
        bound = float(max(abs(poly(c)) for c in cands))

        def ev(x):
            return poly(x[..., 0])

        spec = {"tag": "polynomial-in-box", "box": box.to_bounds(), "coeffs": list(map(float, coeffs))}
        return cls(ev, box, bound, "polynomial-in-box", None, {"spec": spec})

    @classmethod
    def from_json(cls, obj: dict) -> "TestFunction":
        tag = obj.get("tag")
        if tag == "box-indicator":
            return cls.box_indicator(Box.from_bounds(obj["box"]), obj.get("value", 1.0))
        if tag == "bump":
            return cls.bump(Box.from_bounds(obj["box"]), obj.get("height", 1.0))
        if tag == "piecewise-constant":
            box = Box.from_bounds(obj["box"]) if "box" in obj else None
            return cls.piecewise_constant(obj["edges"], obj["values"], box)
        if tag == "polynomial-in-box":
            return cls.polynomial(Box.from_bounds(obj["box"]), obj["coeffs"])
        raise ValueError(f"unknown test function tag {tag!r}")


class MarkedTestFunction:
    """Function ``phi(s, x)`` on the marked space with known support.

    ``s_range`` is the closed weight interval outside which ``phi`` vanishes
    (``(0, inf)`` for the linear entry), ``region`` the position box.
    """

    __test__ = False
    vectorized = True

    def __init__(self, evaluator, s_range: tuple, region: Box, bound: float, tag: str,
                 s_breaks: Sequence[float] = (), x_breaks: Sequence[Sequence[float]] | None = None):
        self._eval = evaluator
        self.s_range = (float(s_range[0]), float(s_range[1]))
        self.region = region
        self.bound = float(bound)
        self.tag = tag
        self.s_breaks = tuple(sorted(set(float(b) for b in s_breaks if math.isfinite(b))))
        if x_breaks is None:
            x_breaks = [(l, h) for l, h in zip(region.lo, region.hi)]
        self.x_breaks = tuple(tuple(sorted(set(map(float, bp)))) for bp in x_breaks)

    @property
    def dim(self) -> int:
        return self.region.dim

    def __call__(self, s, x):
        s = np.asarray(s, dtype=float)
        arr, scalar = _as_points(x, self.dim)
        vals = self._eval(s, arr)
        if scalar and np.ndim(vals) <= 1 and np.size(vals) == 1:
            return float(np.asarray(vals).reshape(-1)[0])
        return vals

    def __repr__(self) -> str:
        return f"MarkedTestFunction({self.tag})"

    @classmethod
    def linear(cls, f: TestFunction) -> "MarkedTestFunction":
        """``phi(s, x) = s * f(x)``; the pairing with ``R^-1 eta`` is ``<eta, f>``."""
        return cls(lambda s, x: s * f(x), (0.0, math.inf), f.support, math.inf, f"s*{f.tag}",
                   (), f.breakpoints)

    @classmethod
    def indicator(cls, window: Window, value: float = 1.0) -> "MarkedTestFunction":
        """``value`` on ``[a, b] x region``; the pairing counts atoms in the window."""
        def ev(s, x):
            return value * (window.contains(s, x)).astype(float)

        return cls(ev, (window.a, window.b), window.region, abs(value), "indicator",
                   (window.a, window.b))

    @classmethod
    def bump(cls, window: Window, height: float = 1.0) -> "MarkedTestFunction":
        """Smooth bump on ``[a, b] x region`` (product of ``s`` and ``x`` bumps)."""
        xb = TestFunction.bump(window.region, 1.0)
        mid = 0.5 * (window.a + window.b)
        half = 0.5 * (window.b - window.a)

        def ev(s, x):
            return height * _bump_profile((s - mid) / half) * xb(x)

        return cls(ev, (window.a, window.b), window.region, abs(height), "bump",
                   _bump_knots(window.a, window.b), xb.breakpoints)
