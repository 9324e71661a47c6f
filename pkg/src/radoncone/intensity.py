"""Levy intensities ``nu`` on ``(0, inf)`` and base measures ``sigma`` on a box."""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from radoncone.measures import Box
from radoncone.quadrature import integrate


class LevyIntensity:
    """Non-atomic measure on ``(0, inf)`` given by a density.

    Subclasses provide ``density`` and the natural ``support``; moments are
    computed by adaptive quadrature.
    """

    tag = "abstract"
    support = (0.0, math.inf)
    breakpoints: tuple = ()
    infinite_mass = False

    def density(self, s):
        raise NotImplementedError

    def clip_range(self, a: float, b: float) -> tuple:
        return max(a, self.support[0]), min(b, self.support[1])

    def moment(self, n: int, a: float = 0.0, b: float = math.inf) -> float:
        """``integral_a^b s**n nu(ds)``.

        Returns ``inf`` for the zeroth moment of an infinite intensity near 0.
        """
        a, b = self.clip_range(a, b)
        if b <= a:
            return 0.0
        if n == 0 and a == 0.0 and self.infinite_mass:
            return math.inf
        pts = [p for p in self.breakpoints if a < p < b]
        direct = lambda s: s ** n * float(self.density(s))
        if a > 0.0:
            # substitute s = exp(u) below max(a, 1): handles the 1/s profile near 0
            c = min(b, max(a, 1.0))
            def fu(u):
                s = math.exp(u)
                return s ** (n + 1) * float(self.density(s))
            head = 0.0
            if c > a:
                head = integrate(fu, math.log(a), math.log(c), points=[math.log(p) for p in pts if p < c])
            tail = integrate(direct, c, b, points=[p for p in pts if p > c]) if b > c else 0.0
            return head + tail
        return integrate(direct, a, b, points=pts)

    def mass(self, a: float, b: float) -> float:
        return self.moment(0, a, b)

    def upper_cutoff(self, tol: float, lo: float = 1.0, power: int = 0) -> float:
        """Smallest power of two ``B >= lo`` with ``integral_B^inf s**power nu(ds) < tol``."""
        if math.isfinite(self.support[1]):
            return self.support[1]
        b = max(lo, 1.0)
        while self.moment(power, b, math.inf) >= tol:
            b *= 2.0
        # bisect down toward the threshold for a tighter cut
        lo_b = b / 2.0
        for _ in range(40):
            mid = 0.5 * (lo_b + b)
            if self.moment(power, mid, math.inf) < tol:
                b = mid
            else:
                lo_b = mid
            if b - lo_b < 1e-6 * b:
                break
        return b

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(obj: dict) -> "LevyIntensity":
        tag = obj.get("tag")
        if tag == "gamma":
            return GammaIntensity(obj.get("theta", 1.0))
        if tag == "truncated-uniform":
            return UniformIntensity(obj["lo"], obj["hi"], obj.get("density", 1.0))
        if tag == "finite-beta":
            return BetaIntensity(obj["alpha"], obj["beta"], obj.get("mass", 1.0))
        raise ValueError(f"unknown intensity tag {tag!r}")


class GammaIntensity(LevyIntensity):
    """``nu_theta(ds) = theta s^-1 e^-s ds``: infinite mass, all moments finite."""

    tag = "gamma"
    infinite_mass = True

    def __init__(self, theta: float = 1.0):
        if not theta > 0:
            raise ValueError("theta must be positive")
        self.theta = float(theta)

    def density(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(s > 0, self.theta * np.exp(-s) / np.where(s > 0, s, 1.0), 0.0)
        return out if out.ndim else float(out)

    def moment_closed_form(self, n: int, a: float = 0.0, b: float = math.inf) -> float:
        """Reference value via incomplete gamma / exponential integrals."""
        if n == 0:
            if a == 0.0:
                return math.inf
            tail = lambda t: 0.0 if math.isinf(t) else float(special.exp1(t))
            return self.theta * (tail(a) - tail(b))
        g = math.gamma(n)
        up = lambda t: 0.0 if math.isinf(t) else g * float(special.gammaincc(n, t))
        return self.theta * (up(a) - up(b))

    def __repr__(self) -> str:
        return f"GammaIntensity(theta={self.theta:g})"

    def to_json(self) -> dict:
        return {"tag": "gamma", "theta": self.theta}


class UniformIntensity(LevyIntensity):
    """Constant density on ``[lo, hi]``."""

    tag = "truncated-uniform"

    def __init__(self, lo: float, hi: float, density: float = 1.0):
        if not (0 < lo < hi < math.inf) or density < 0:
            raise ValueError("need 0 < lo < hi < inf and density >= 0")
        self.lo, self.hi, self.level = float(lo), float(hi), float(density)
        self.support = (self.lo, self.hi)
        self.breakpoints = (self.lo, self.hi)

    def density(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where((s >= self.lo) & (s <= self.hi), self.level, 0.0)
        return out if out.ndim else float(out)

    def moment_closed_form(self, n: int, a: float = 0.0, b: float = math.inf) -> float:
        a, b = self.clip_range(a, b)
        if b <= a:
            return 0.0
        return self.level * (b ** (n + 1) - a ** (n + 1)) / (n + 1)

    def __repr__(self) -> str:
        return f"UniformIntensity([{self.lo:g}, {self.hi:g}], density={self.level:g})"

    def to_json(self) -> dict:
        return {"tag": "truncated-uniform", "lo": self.lo, "hi": self.hi, "density": self.level}


class BetaIntensity(LevyIntensity):
    """``mass`` times the Beta(alpha, beta) density on ``(0, 1)``."""

    tag = "finite-beta"

    def __init__(self, alpha: float, beta: float, mass: float = 1.0):
        if not (alpha > 0 and beta > 0 and mass >= 0):
            raise ValueError("need alpha, beta > 0 and mass >= 0")
        self.alpha, self.beta_, self.total = float(alpha), float(beta), float(mass)
        self.support = (0.0, 1.0)
        self._norm = self.total / special.beta(self.alpha, self.beta_)

    def density(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s > 0) & (s < 1)
        sc = np.where(inside, s, 0.5)
        out = np.where(inside, self._norm * sc ** (self.alpha - 1) * (1 - sc) ** (self.beta_ - 1), 0.0)
        return out if out.ndim else float(out)

    def moment_closed_form(self, n: int, a: float = 0.0, b: float = 1.0) -> float:
        a, b = self.clip_range(a, b)
        if b <= a:
            return 0.0
        ap = self.alpha + n
        full = self.total * special.beta(ap, self.beta_) / special.beta(self.alpha, self.beta_)
        return full * float(special.betainc(ap, self.beta_, b) - special.betainc(ap, self.beta_, a))

    def __repr__(self) -> str:
        return f"BetaIntensity({self.alpha:g}, {self.beta_:g}, mass={self.total:g})"

    def to_json(self) -> dict:
        return {"tag": "finite-beta", "alpha": self.alpha, "beta": self.beta_, "mass": self.total}


class BaseMeasure:
    """``sigma = density * Lebesgue`` restricted to ``box``."""

    def __init__(self, box: Box, density: float = 1.0):
        if density < 0 or not math.isfinite(density):
            raise ValueError("density must be finite and >= 0")
        self.box = box
        self.density = float(density)

    @property
    def dim(self) -> int:
        return self.box.dim

    def __call__(self, region: Box) -> float:
        """``sigma(region)`` in closed form."""
        eff = self.box.intersect(region)
        return 0.0 if eff is None else self.density * eff.volume

    def integral(self, f) -> float:
        """``integral f d sigma`` for a catalogued test function."""
        from radoncone.quadrature import composite_nodes, panel_edges

        eff = self.box.intersect(f.support)
        if eff is None or self.density == 0.0:
            return 0.0
        axes_n, axes_w = [], []
        for k in range(eff.dim):
            e = panel_edges(eff.lo[k], eff.hi[k], f.breakpoints[k] if k < len(f.breakpoints) else ())
            n, w = composite_nodes(e, 24)
            axes_n.append(n)
            axes_w.append(w)
        grids = np.meshgrid(*axes_n, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wgrid = np.ones(())
        for w in axes_w:
            wgrid = np.multiply.outer(wgrid, w)
        return float(self.density * np.dot(f(pts), wgrid.ravel()))

    def sample(self, region: Box, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` i.i.d. uniform positions in ``region`` intersected with the box."""
        eff = self.box.intersect(region)
        if eff is None:
            raise ValueError("region misses the base box")
        lo = np.asarray(eff.lo)
        return lo + (np.asarray(eff.hi) - lo) * rng.random((n, eff.dim))

    def __repr__(self) -> str:
        return f"BaseMeasure({self.box.to_bounds()}, density={self.density:g})"

    def to_json(self) -> dict:
        return {"box": self.box.to_bounds(), "density": self.density}

    @classmethod
    def from_json(cls, obj: dict) -> "BaseMeasure":
        return cls(Box.from_bounds(obj["box"]), obj.get("density", 1.0))
