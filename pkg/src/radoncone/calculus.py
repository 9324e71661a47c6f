"""Death and birth gradients of cylinder functions and the identities they satisfy.

A :class:`CylinderFunction` is ``F(eta) = g(t_1, ..., t_N)`` where
``t_k = sum over atoms of phi_k(s_x, x)``.  Removing or adding an atom shifts
``t`` by ``-phi(s_x, x)`` or ``+phi(s, x)``; the vectorized Monte-Carlo code
works on these statistics directly, while the single-measure functions below
evaluate ``F`` on the modified measure itself.

Birth-side integrals always use a tensor quadrature over the intensity; the
Monte-Carlo routines take that intensity from the sampler so each identity is
checked for the law actually drawn.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from radoncone.errors import NoAtomAt, PositionOccupied, QuadratureFailure
from radoncone.functions import MarkedTestFunction, TestFunction
from radoncone.measures import Box, FiniteDiscreteMeasure, Window, add_atom, as_point, remove_atom
from radoncone.quadrature import ProductRule, integrate_checked
from radoncone.report import CheckResult, mean_se, paired_check, reference_check
from radoncone.sampling import generator

QUAD_TOL = 1e-8
CLAMP = 50.0
_CHUNK = 2_000_000


# ---------------------------------------------------------------------------
# outer functions


@dataclass(frozen=True)
class Outer:
    """Bounded smooth ridge function ``g(t) = psi(w . t)`` from the catalogue."""

    tag: str
    psi: Callable
    w: tuple
    bound: float
    params: tuple = ()

    def project(self, t) -> np.ndarray:
        return np.asarray(t, dtype=float) @ np.asarray(self.w, dtype=float)

    def __call__(self, t):
        return self.psi(self.project(t))

    @classmethod
    def clamped_polynomial(cls, coeffs: Sequence[float], weights: Sequence[float] | None = None,
                           clamp: float = CLAMP) -> "Outer":
        """``p(clip(w . t, -clamp, clamp))`` for the polynomial with ``coeffs``."""
        poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        w = (1.0,) if weights is None else tuple(map(float, weights))
        cands = [-clamp, clamp] + [r.real for r in poly.deriv().roots() if abs(r.imag) < 1e-12 and abs(r.real) < clamp]
        bound = float(max(abs(poly(c)) for c in cands))
        return cls("polynomial-clamped", lambda u: poly(np.clip(u, -clamp, clamp)), w, bound, tuple(coeffs))

    @classmethod
    def gaussian(cls, weights: Sequence[float]) -> "Outer":
        """``exp(-(w . t)**2)``."""
        return cls("exp-composite", lambda u: np.exp(-np.square(u)), tuple(map(float, weights)), 1.0)

    @classmethod
    def tanh(cls, weights: Sequence[float], shift: float = 0.0) -> "Outer":
        """``tanh(w . t + shift)``."""
        return cls("tanh-composite", lambda u: np.tanh(u + shift), tuple(map(float, weights)), 1.0, (shift,))

    @classmethod
    def constant(cls, c: float) -> "Outer":
        return cls("constant", lambda u: np.full(np.shape(u), float(c)), (), abs(c), (c,))


class CylinderFunction:
    """``F(eta) = g(<R^-1 eta, phi_1>, ..., <R^-1 eta, phi_N>)``."""

    def __init__(self, outer: Outer, phis: Sequence[MarkedTestFunction] = (), name: str | None = None):
        self.outer = outer
        self.phis = tuple(phis)
        self.name = name or outer.tag

    def __repr__(self) -> str:
        return f"CylinderFunction({self.name})"

    @classmethod
    def constant(cls, c: float = 1.0) -> "CylinderFunction":
        return cls(Outer.constant(c), (), f"const[{c:g}]")

    @property
    def bound(self) -> float:
        return self.outer.bound

    def support(self) -> Window | None:
        """Smallest window containing the supports of all ``phi_k`` (``None`` if there are none)."""
        if not self.phis:
            return None
        lo = min(p.s_range[0] for p in self.phis)
        hi = max(p.s_range[1] for p in self.phis)
        region = self.phis[0].region
        for p in self.phis[1:]:
            region = region.hull(p.region)
        return Window(region, max(lo, 1e-300), hi) if math.isfinite(hi) else None

    def in_support(self, s, x) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros(np.broadcast_shapes(s.shape, np.shape(x)[:-1]), dtype=bool)
        for p in self.phis:
            out |= (s >= p.s_range[0]) & (s <= p.s_range[1]) & p.region.contains(x)
        return out

    def s_breaks(self) -> tuple:
        return tuple(b for p in self.phis for b in p.s_breaks)

    def x_breaks(self, dim: int) -> list:
        out = [[] for _ in range(dim)]
        for p in self.phis:
            for k in range(min(dim, len(p.x_breaks))):
                out[k].extend(p.x_breaks[k])
        return out

    # evaluation ------------------------------------------------------------
    def increments(self, s: np.ndarray, x: np.ndarray) -> np.ndarray:
        """``phi_k(s, x)`` stacked on a trailing axis."""
        s = np.asarray(s, dtype=float)
        shape = np.broadcast_shapes(s.shape, np.shape(x)[:-1])
        out = np.zeros(shape + (len(self.phis),))
        for k, p in enumerate(self.phis):
            out[..., k] = p(s, x)
        return out

    def statistics(self, eta: FiniteDiscreteMeasure) -> np.ndarray:
        if not eta.n_atoms:
            return np.zeros(len(self.phis))
        return self.increments(eta.weights, eta.positions).sum(axis=0)

    def __call__(self, eta: FiniteDiscreteMeasure) -> float:
        return float(self.outer(self.statistics(eta)))

    def batch_statistics(self, batch) -> np.ndarray:
        t = np.zeros((batch.size, len(self.phis)))
        if batch.weights.size:
            inc = self.increments(batch.weights, batch.positions)
            for k in range(len(self.phis)):
                t[:, k] = batch.per_replicate(inc[:, k])
        return t


# ---------------------------------------------------------------------------
# gradients on a single measure


def death_gradient(F: CylinderFunction, eta: FiniteDiscreteMeasure, x) -> float:
    """``F(eta - s_x delta_x) - F(eta)``.

    Raises
    ------
    NoAtomAt
        If ``x`` is not in the support of ``eta``.
    """
    return F(remove_atom(eta, x)) - F(eta)


def birth_gradient(F: CylinderFunction, eta: FiniteDiscreteMeasure, s: float, x) -> float:
    """``F(eta + s delta_x) - F(eta)``.

    Raises
    ------
    PositionOccupied
        If ``x`` already carries an atom.
    """
    return F(add_atom(eta, s, x)) - F(eta)


def directional_death(F: CylinderFunction, eta: FiniteDiscreteMeasure, h: TestFunction) -> float:
    """``sum_x s_x h(x) (D-_x F)(eta)``."""
    total = 0.0
    for s, x in zip(eta.weights, eta.positions):
        total += s * float(h(x if x.size > 1 else x[0])) * death_gradient(F, eta, x)
    return total


def _birth_rule(nu, sigma, s_range, region, parts, order=8) -> ProductRule:
    reg = sigma.box if region is None else region
    dim = reg.dim
    sb, xb = [], [[] for _ in range(dim)]
    for p in parts:
        if isinstance(p, CylinderFunction):
            sb.extend(p.s_breaks())
            for k, b in enumerate(p.x_breaks(dim)):
                xb[k].extend(b)
        elif p is not None:
            for k in range(min(dim, len(p.breakpoints))):
                xb[k].extend(p.breakpoints[k])
    lo, hi = nu.clip_range(*s_range)
    if math.isinf(hi):
        hi = nu.upper_cutoff(1e-12, lo=max(1.0, lo), power=2)
    return ProductRule(nu, sigma, (lo, hi), reg, s_breaks=sb, x_breaks=xb, order=order)


def directional_birth(F: CylinderFunction, eta: FiniteDiscreteMeasure, h: TestFunction, nu, sigma,
                      s_range: tuple = (0.0, math.inf), region: Box | None = None) -> float:
    """``integral integral (D+_(s,x) F)(eta) s h(x) nu(ds) sigma(dx)`` to ``1e-8``.

    Raises
    ------
    QuadratureFailure
        If refining the tensor rule changes the value by more than ``1e-8``.
    """
    t = F.statistics(eta)
    g0 = F.outer(t)
    rule = _birth_rule(nu, sigma, s_range, region, (F, h))

    def integrand(S, X):
        return (F.outer(t + F.increments(S, X)) - g0) * S * h(X)

    return float(integrate_checked(rule, integrand, QUAD_TOL))


def generator_L(F: CylinderFunction, eta: FiniteDiscreteMeasure, nu, sigma,
                s_range: tuple = (0.0, math.inf), region: Box | None = None) -> float:
    """``(LF)(eta) = sum_x s_x (D-_x F)(eta) + integral integral (D+_(s,x) F)(eta) s nu(ds) sigma(dx)``."""
    death = sum(s * death_gradient(F, eta, x) for s, x in zip(eta.weights, eta.positions))
    t = F.statistics(eta)
    g0 = F.outer(t)
    rule = _birth_rule(nu, sigma, s_range, region, (F,))
    birth = integrate_checked(rule, lambda S, X: (F.outer(t + F.increments(S, X)) - g0) * S, QUAD_TOL)
    return float(death + birth)


# ---------------------------------------------------------------------------
# Monte-Carlo identities


class _DrawTerms:
    """Per-draw death and birth quantities for a block of sampled measures.

    Everything is expressed through the projected statistic ``u = w . t`` of
    each cylinder function, so adding or removing an atom is a scalar shift.
    """

    def __init__(self, batch, rule: ProductRule):
        self.batch = batch
        self.rule = rule
        self._cache: dict = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def u(self, F):
        return self._memo(("u", id(F)), lambda: F.outer.project(F.batch_statistics(self.batch)))

    def value(self, F):
        return self._memo(("g", id(F)), lambda: F.outer.psi(self.u(F)))

    def death(self, F):
        """``(D-_x F)(eta)`` for every atom of every draw."""
        def compute():
            b = self.batch
            if not b.weights.size:
                return np.zeros(0)
            u = self.u(F)[b.owner]
            du = F.outer.project(F.increments(b.weights, b.positions))
            return F.outer.psi(u - du) - F.outer.psi(u)
        return self._memo(("d", id(F)), compute)

    def node_shift(self, F):
        return self._memo(("v", id(F)), lambda: F.outer.project(F.increments(self.rule.S, self.rule.X)))

    def birth(self, F, rows: slice):
        """``(D+_(s,x) F)(eta)`` on the quadrature nodes, shape ``(rows, Q)``."""
        u = self.u(F)[rows]
        return F.outer.psi(u[:, None] + self.node_shift(F)[None, :]) - self.value(F)[rows][:, None]

    def birth_integral(self, weight_fn, rows_per_chunk: int):
        """``sum_q W_q weight_fn(rows)`` reduced over nodes, per draw."""
        n = self.batch.size
        out = np.empty(n)
        for r0 in range(0, n, rows_per_chunk):
            sl = slice(r0, min(n, r0 + rows_per_chunk))
            out[sl] = weight_fn(sl) @ self.rule.W
        return out


def _run(sampler, n, seed, key, parts, per_block):
    rule = _settled_rule(sampler, parts)
    lhs = np.empty(n)
    rhs = np.empty(n)
    rows = max(1, _CHUNK // max(1, len(rule)))
    for start, stop, batch in sampler.batches(n, seed, key):
        a, b = per_block(_DrawTerms(batch, rule), rows)
        lhs[start:stop] = a
        rhs[start:stop] = b
    return lhs, rhs


RULE_ORDERS = (4, 6, 8, 12)


def _settled_rule(sampler, parts) -> ProductRule:
    """Cheapest birth rule whose per-draw integrals survive refinement to 1e-8.

    Orders 4, 6, 8, 12 are tried in turn; each is compared against its
    two-fold refinement on 64 probe draws and kept once all birth integrals
    of the cylinder functions in ``parts`` agree to ``1e-8``.
    """
    worst = math.inf
    for order in RULE_ORDERS:
        rule = _birth_rule(sampler.nu, sampler.sigma_eff, sampler.nu_range, sampler.region, parts, order)
        worst = _refinement_change(sampler, rule, parts)
        if worst <= QUAD_TOL:
            return rule
    raise QuadratureFailure(f"birth quadrature did not settle (last change {worst:.3e})")


def _refinement_change(sampler, rule, parts, m: int = 64) -> float:
    """Largest relative change of the per-draw birth integrals when ``rule`` is refined."""
    probe = sampler.sample_batch(m, generator(0, "quadrature-probe"))
    fine = rule.refined()
    worst = 0.0
    for F in parts:
        if not (isinstance(F, CylinderFunction) and F.phis):
            continue
        vals = []
        for r in (rule, fine):
            T = _DrawTerms(probe, r)
            vals.append(T.birth_integral(lambda sl: T.birth(F, sl) * r.S, m))
        diff = float(np.max(np.abs(vals[1] - vals[0])))
        worst = max(worst, diff / max(1.0, float(np.max(np.abs(vals[1])))))
    return worst


def _per_atom_to_draw(terms: _DrawTerms, per_atom: np.ndarray) -> np.ndarray:
    b = terms.batch
    if not b.weights.size:
        return np.zeros(b.size)
    return b.per_replicate(per_atom)


def dirichlet_samples(F, G, sampler, n, seed, key="dirichlet") -> tuple:
    """Per-draw death and birth Dirichlet integrands on common draws."""

    def block(T, rows):
        b = T.batch
        death = _per_atom_to_draw(T, b.weights * (T.death(F) * T.death(G))) if b.weights.size else np.zeros(b.size)
        birth = T.birth_integral(lambda sl: T.rule.S * (T.birth(F, sl) * T.birth(G, sl)), rows)
        return death, birth

    return _run(sampler, n, seed, key, (F, G), block)


def dirichlet_death(F, G, sampler, n: int = 100_000, seed: int = 0) -> tuple:
    """Estimate and standard error of ``E sum_x s_x (D-_x F)(D-_x G)``."""
    return mean_se(dirichlet_samples(F, G, sampler, n, seed)[0])


def dirichlet_birth(F, G, sampler, n: int = 100_000, seed: int = 0) -> tuple:
    """Estimate and standard error of ``E integral integral s (D+F)(D+G) nu(ds) sigma(dx)``."""
    return mean_se(dirichlet_samples(F, G, sampler, n, seed)[1])


def dirichlet_check(F, G, sampler, n: int, seed: int) -> CheckResult:
    death, birth = dirichlet_samples(F, G, sampler, n, seed, key=f"dirichlet:{F.name}:{G.name}")
    return paired_check(f"dirichlet death=birth [{F.name}, {G.name}]", death, birth)


def ibp_samples(F, G, h: TestFunction, sampler, n, seed, key="ibp") -> tuple:
    """Per-draw ``D_h^- F * G`` and ``F * D_h^+ G - F * G * B_h``."""
    sig_h = sampler.sigma_eff.integral(h)
    m1 = sampler.s_moment(1)

    def block(T, rows):
        b = T.batch
        fv, gv = T.value(F), T.value(G)
        if b.weights.size:
            dh = _per_atom_to_draw(T, b.weights * h(b.positions) * T.death(F))
            pair_h = b.pairing(h)
        else:
            dh = np.zeros(b.size)
            pair_h = np.zeros(b.size)
        hq = h(T.rule.X) * T.rule.S
        birth_g = T.birth_integral(lambda sl: T.birth(G, sl) * hq, rows)
        B = pair_h - m1 * sig_h
        return dh * gv, fv * birth_g - fv * gv * B

    return _run(sampler, n, seed, key, (F, G, h), block)


def ibp_check(F, G, h: TestFunction, sampler, n: int = 100_000, seed: int = 0) -> CheckResult:
    """``E[D_h^- F G] = E[F D_h^+ G] - E[F G B_h]`` with ``B_h = <eta, h> - int s dnu int h dsigma``."""
    lhs, rhs = ibp_samples(F, G, h, sampler, n, seed, key=f"ibp:{F.name}:{G.name}:{h.tag}")
    return paired_check(f"integration by parts [{F.name}, {G.name}, h={h.tag}]", lhs, rhs)


def generator_samples(F, G, sampler, n, seed, key="generator") -> tuple:
    """Per-draw death Dirichlet integrand and ``-(LF) G``."""

    def block(T, rows):
        b = T.batch
        if b.weights.size:
            dF = T.death(F)
            form = _per_atom_to_draw(T, b.weights * dF * T.death(G))
            death_part = _per_atom_to_draw(T, b.weights * dF)
        else:
            form = np.zeros(b.size)
            death_part = np.zeros(b.size)
        birth_part = T.birth_integral(lambda sl: T.birth(F, sl) * T.rule.S, rows)
        return form, -(death_part + birth_part) * T.value(G)

    return _run(sampler, n, seed, key, (F, G), block)


def form_generator_check(F, G, sampler, n: int = 100_000, seed: int = 0) -> list:
    """``E(F, G) = <-LF, G>`` on common draws; with ``F is G`` also the positivity of the form."""
    form, gen = generator_samples(F, G, sampler, n, seed, key=f"generator:{F.name}:{G.name}")
    out = [paired_check(f"form = <-LF, G> [{F.name}, {G.name}]", form, gen)]
    if F is G:
        m, s = mean_se(form)
        out.append(CheckResult(f"form positivity [{F.name}]", "mc", m, 0.0, s, 0.0,
                               m / s if s > 0 else 0.0, bool(m >= -4.0 * s), "estimate >= -4 se"))
    return out


def gradient_bound_check(F: CylinderFunction, sampler, n: int = 2000, seed: int = 0) -> CheckResult:
    """``|D-F|, |D+F| <= 2 sup|g|`` and both vanish off the support window of the ``phi_k``.

    Birth gradients are probed at uniformly drawn points of a window twice as
    wide as the sampler's in each direction.
    """
    batch = sampler.sample_batch(n, np.random.default_rng(seed))
    T = _DrawTerms(batch, _birth_rule(sampler.nu, sampler.sigma_eff, sampler.nu_range, sampler.region, (F,)))
    lim = 2.0 * F.bound
    d = T.death(F)
    worst = float(np.max(np.abs(d))) if d.size else 0.0
    ok = worst <= lim * (1 + 1e-12)
    if d.size:
        off = ~F.in_support(batch.weights, batch.positions)
        ok &= bool(np.all(d[off] == 0.0))
    rng = np.random.default_rng(seed + 1)
    lo, hi = np.asarray(sampler.region.lo), np.asarray(sampler.region.hi)
    width = hi - lo
    m = 256
    S = np.exp(rng.uniform(math.log(sampler.nu_range[0] / 2), math.log(sampler.nu_range[1] * 2), m))
    X = lo - width / 2 + 2 * width * rng.random((m, lo.size))
    t = F.batch_statistics(batch)
    Dp = F.outer(t[:, None, :] + F.increments(S, X)[None, :, :]) - F.outer(t)[:, None]
    worst = max(worst, float(np.max(np.abs(Dp))))
    ok &= float(np.max(np.abs(Dp))) <= lim * (1 + 1e-12)
    off = ~F.in_support(S, X)
    ok &= bool(np.all(Dp[:, off] == 0.0))
    return CheckResult(f"gradient bound [{F.name}]", "exact", worst, lim, passed=bool(ok),
                       tolerance="|D F| <= 2 sup|g|, zero off support")


# ---------------------------------------------------------------------------
# catalogue


def default_phis(region: Box) -> dict:
    """Marked test functions used by the cylinder catalogue."""
    lo, hi = region.lo[0], region.hi[0]
    mid = 0.5 * (lo + hi)
    lin = MarkedTestFunction.linear(TestFunction.box_indicator(region))
    left = Box((lo,) + region.lo[1:], (mid,) + region.hi[1:])
    right = Box((lo + 0.25 * (hi - lo),) + region.lo[1:], region.hi)
    return {
        "mass": lin,
        "count-left": MarkedTestFunction.indicator(Window(left, 0.5, 2.0)),
        "bump-right": MarkedTestFunction.bump(Window(right, 0.2, 2.5), 1.5),
    }


def cylinder_catalog(region: Box) -> list:
    """Four bounded cylinder functions built from :func:`default_phis`."""
    p = default_phis(region)
    return [
        CylinderFunction(Outer.tanh([0.7]), [p["mass"]], "tanh(mass)"),
        CylinderFunction(Outer.gaussian([0.5, -0.8]), [p["mass"], p["count-left"]], "gauss(mass,left)"),
        CylinderFunction(Outer.clamped_polynomial([0.5, 1.0, -0.3]), [p["bump-right"]], "poly(bump)"),
        CylinderFunction(Outer.tanh([1.0, 0.5], shift=-1.0), [p["count-left"], p["bump-right"]], "tanh(left,bump)"),
    ]


def mass_function(region: Box, power: int = 1) -> CylinderFunction:
    """``eta(region)**power``, clamped at 50 in the argument."""
    coeffs = [0.0] * power + [1.0]
    lin = MarkedTestFunction.linear(TestFunction.box_indicator(region))
    return CylinderFunction(Outer.clamped_polynomial(coeffs), [lin], f"mass^{power}")
