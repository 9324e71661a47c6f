"""Quadrature helpers.

``integrate`` wraps QUADPACK's adaptive Gauss-Kronrod routine and turns
non-convergence into :class:`~radoncone.errors.QuadratureFailure`.
:class:`ProductRule` is a composite Gauss-Legendre tensor rule for
``nu (x) sigma`` on a weight range times a box; it is what the Monte-Carlo
verifiers use for the per-draw inner integrals, since it vectorizes over draws.
"""
from __future__ import annotations

import math
import warnings
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _sp_integrate

from radoncone.errors import QuadratureFailure
from radoncone.measures import Box

ABS_TOL = 1e-10


def integrate(f: Callable[[float], float], a: float, b: float, *, epsabs: float = ABS_TOL,
              epsrel: float = 1e-10, points: Sequence[float] | None = None, limit: int = 400) -> float:
    """Adaptive integral of ``f`` over ``[a, b]``; ``b`` may be ``inf``.

    Raises
    ------
    QuadratureFailure
        If QUADPACK reports a problem or its error estimate exceeds
        ``max(epsabs, epsrel * |value|)``.
    """
    if a == b:
        return 0.0
    if b < a:
        return -integrate(f, b, a, epsabs=epsabs, epsrel=epsrel, points=points, limit=limit)
    pts = sorted(p for p in (points or ()) if a < p < b)
    if pts and math.isinf(b):
        head = integrate(f, a, pts[-1], epsabs=epsabs / 2, epsrel=epsrel, points=pts[:-1], limit=limit)
        return head + integrate(f, pts[-1], b, epsabs=epsabs / 2, epsrel=epsrel, limit=limit)
    with warnings.catch_warnings():
        warnings.simplefilter("error", _sp_integrate.IntegrationWarning)
        try:
            res = _sp_integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit,
                                     points=pts or None, full_output=1)
        except _sp_integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"integral over [{a}, {b}] did not converge: {exc}") from None
    val, err = res[0], res[1]
    if not math.isfinite(val) or err > max(epsabs, epsrel * abs(val)) * 10:
        raise QuadratureFailure(f"integral over [{a}, {b}]: value {val}, error estimate {err}")
    return float(val)


@lru_cache(maxsize=64)
def gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_edges(lo: float, hi: float, breaks: Sequence[float] = (), *, geometric: bool = False,
                ratio: float = 2.0, level: int = 1) -> np.ndarray:
    """Panel edges for ``[lo, hi]`` honouring ``breaks``.

    With ``geometric`` the panels above zero grow by at most ``ratio`` so a
    ``1/s`` density is integrated accurately near the lower end.  Each panel is
    then split into ``level`` equal pieces.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValueError(f"bad panel range [{lo}, {hi}]")
    edges = sorted({lo, hi} | {float(b) for b in breaks if lo < b < hi})
    if geometric:
        if edges[0] == 0.0:
            # dyadic panels toward 0, down to 2**-40 of the first positive edge
            first = edges[1]
            edges = [0.0] + [first * 2.0 ** -k for k in range(40, 0, -1)] + edges[1:]
        out = [edges[0]]
        for e0, e1 in zip(edges[:-1], edges[1:]):
            if e0 > 0 and e1 / e0 > ratio:
                k = int(math.ceil(math.log(e1 / e0) / math.log(ratio)))
                out.extend(np.geomspace(e0, e1, k + 1)[1:].tolist())
            else:
                out.append(e1)
        edges = out
    if level > 1:
        fine = [edges[0]]
        for e0, e1 in zip(edges[:-1], edges[1:]):
            fine.extend(np.linspace(e0, e1, level + 1)[1:].tolist())
        edges = fine
    return np.asarray(edges, dtype=float)


def composite_nodes(edges: np.ndarray, order: int):
    """Gauss-Legendre nodes and weights on each panel between ``edges``."""
    gx, gw = gauss_legendre(order)
    e0 = edges[:-1, None]
    half = (edges[1:, None] - e0) / 2.0
    nodes = (e0 + half * (gx[None, :] + 1.0)).ravel()
    weights = (half * gw[None, :]).ravel()
    return nodes, weights


class ProductRule:
    """Tensor rule for ``integral g(s, x) nu(ds) sigma(dx)`` over ``[s_lo, s_hi] x region``.

    Nodes are flattened: ``S`` has shape ``(Q,)``, ``X`` shape ``(Q, d)`` and the
    weights ``W`` already include the densities of ``nu`` and ``sigma``.  The
    ``nu`` density may blow up like ``1/s`` near zero as long as the integrand
    carries a factor ``s``.

    Parameters
    ----------
    nu, sigma
        A :class:`~radoncone.intensity.LevyIntensity` and a
        :class:`~radoncone.intensity.BaseMeasure`.
    s_range : (float, float)
        Weight range, finite.
    region : Box
        Position box; intersected with the box of ``sigma``.
    s_breaks, x_breaks
        Extra panel edges (per coordinate for ``x_breaks``).
    """

    def __init__(self, nu, sigma, s_range, region: Box, s_breaks: Sequence[float] = (),
                 x_breaks: Sequence[Sequence[float]] | None = None, order: int = 12, level: int = 1):
        self.nu, self.sigma = nu, sigma
        self.s_range = (float(s_range[0]), float(s_range[1]))
        self.region = region
        self.s_breaks = tuple(s_breaks)
        self.x_breaks = x_breaks
        self.order, self.level = order, level
        s_lo, s_hi = nu.clip_range(*self.s_range)
        eff = sigma.box.intersect(region)
        if eff is None or s_hi <= s_lo or sigma.density == 0.0:
            self.S = np.zeros(0)
            self.X = np.zeros((0, region.dim))
            self.W = np.zeros(0)
            return
        sb = tuple(s_breaks) + tuple(nu.breakpoints)
        s_edges = panel_edges(s_lo, s_hi, sb, geometric=True, level=level)
        s_nodes, s_w = composite_nodes(s_edges, order)
        s_w = s_w * nu.density(s_nodes)
        axes_n, axes_w = [], []
        for k in range(eff.dim):
            bk = list(x_breaks[k]) if x_breaks is not None and k < len(x_breaks) else []
            e = panel_edges(eff.lo[k], eff.hi[k], bk, level=level)
            n, w = composite_nodes(e, order)
            axes_n.append(n)
            axes_w.append(w)
        grids = np.meshgrid(*axes_n, indexing="ij")
        x_nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wgrid = np.ones(())
        for w in axes_w:
            wgrid = np.multiply.outer(wgrid, w)
        x_w = wgrid.ravel() * sigma.density
        self.S = np.repeat(s_nodes, x_nodes.shape[0])
        self.X = np.tile(x_nodes, (s_nodes.shape[0], 1))
        self.W = np.repeat(s_w, x_nodes.shape[0]) * np.tile(x_w, s_nodes.shape[0])

    def __len__(self) -> int:
        return self.W.shape[0]

    def refined(self) -> "ProductRule":
        return ProductRule(self.nu, self.sigma, self.s_range, self.region, self.s_breaks,
                           self.x_breaks, self.order, self.level * 2)

    def integrate(self, g: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """``sum_q W_q g(S_q, X_q)``; ``g`` may return shape ``(..., Q)``."""
        return np.asarray(g(self.S, self.X), dtype=float) @ self.W


def integrate_checked(rule: ProductRule, g, tol: float = 1e-8):
    """Integrate with ``rule`` and its refinement; fail if they differ by more than ``tol``."""
    coarse = rule.integrate(g)
    fine = rule.refined().integrate(g)
    diff = np.max(np.abs(np.asarray(fine) - np.asarray(coarse)))
    scale = max(1.0, float(np.max(np.abs(fine))))
    if not np.all(np.isfinite(fine)) or diff > tol * scale:
        raise QuadratureFailure(f"tensor quadrature did not settle: refinement changed the value by {diff:.3e}")
    return fine
