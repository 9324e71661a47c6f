"""Lebesgue-Poisson integrals and correlation-measure estimates.

The correlation measure of a random measure is only ever handled through its
integrals against certified cone functions ``G``: the estimate is the mean of
``(KG)(eta)`` over draws, and for Poisson laws it must match the
Lebesgue-Poisson integral of ``G`` computed here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from radoncone.errors import SeriesNotTruncated
from radoncone.intensity import BaseMeasure, LevyIntensity
from radoncone.ktransform import BoundedSetSpec, ConeFunction, canonical_order, k_transform_batch
from radoncone.measures import Box
from radoncone.quadrature import ProductRule
from radoncone.report import CheckResult, estimate_check, mean_se, reference_check
from radoncone.sampling import WeightSampler, generator

__all__ = [
    "BoundedSetSpec",
    "LPIntegral",
    "lp_integral",
    "correlation_measure_mc",
    "correlation_check",
    "correlation_function_poisson_check",
]

TERM_DECAY = 1e-10
MC_POINTS = 100_000
_PAIR_CHUNK = 1 << 18


@dataclass
class LPIntegral:
    value: float
    stderr: float
    terms: list
    term_se: list

    def __float__(self) -> float:
        return self.value


def _domain(G: ConeFunction, nu: LevyIntensity, sigma: BaseMeasure, s_range, region):
    """Weight range and box over which ``G``'s integrand can be non-zero."""
    lo, hi = nu.clip_range(*s_range)
    box = sigma.box if region is None else sigma.box.intersect(region)
    if G.window is not None:
        lo, hi = max(lo, G.window.a), min(hi, G.window.b)
        box = None if box is None else box.intersect(G.window.region)
    elif G.region is not None and box is not None:
        box = box.intersect(G.region)
    if math.isinf(hi):
        hi = nu.upper_cutoff(1e-13, lo=max(1.0, lo), power=1)
    s_breaks = ()
    x_breaks = None
    f = G.params.get("f")
    if f is not None:
        x_breaks = getattr(f, "breakpoints", None)
    return lo, hi, box, s_breaks, x_breaks


def _values(G: ConeFunction, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``G`` at each row (a measure with ``W.shape[1]`` atoms)."""
    W, X = canonical_order(W, X)
    return G.batch_table(W, X)[:, -1]


def lp_integral(G: ConeFunction, nu: LevyIntensity, sigma: BaseMeasure, n_max: int = 30, *,
                s_range: tuple = (0.0, math.inf), region: Box | None = None, order: int = 12,
                mc_points: int = MC_POINTS, seed: int = 0, return_stderr: bool = False):
    """``G(0) + sum_n 1/n! integral G(s_1 delta_x1 + ... + s_n delta_xn) prod nu(ds_i) sigma(dx_i)``.

    Terms with ``n <= 2`` use a tensor Gauss-Legendre rule, higher terms plain
    Monte Carlo with ``mc_points`` points.  For a bounded-support certificate
    the series stops at its ``N``; otherwise it stops once a term falls below
    ``1e-10`` in absolute value.  ``s_range`` and ``region`` restrict the
    intensity (the sampled law in the Monte-Carlo checks).

    Raises
    ------
    SeriesNotTruncated
        Without a certificate, if ``n_max`` terms pass without the decay.
    """
    lo, hi, box, s_breaks, x_breaks = _domain(G, nu, sigma, s_range, region)
    d = sigma.dim
    z = G.batch_table(np.zeros((1, 0)), np.zeros((1, 0, d)))[0, 0]
    terms, ses = [float(z)], [0.0]
    last = n_max if G.bounded is None else min(n_max, G.bounded.N)
    empty = box is None or hi <= lo or sigma.density == 0.0
    if not empty:
        rule = ProductRule(nu, sigma, (lo, hi), box, s_breaks=s_breaks, x_breaks=x_breaks, order=order)
        wsampler = None
        for n in range(1, last + 1):
            if n == 1:
                vals = _values(G, rule.S[:, None], rule.X[:, None, :])
                term, se = float(vals @ rule.W), 0.0
            elif n == 2:
                term, se = _pair_term(G, rule), 0.0
            else:
                if wsampler is None:
                    wsampler = WeightSampler(nu, lo, hi)
                    mass = wsampler.total * sigma(box)
                rng = generator(seed, "lp-integral", n)
                W = wsampler.sample(mc_points * n, rng).reshape(mc_points, n)
                X = sigma.sample(box, mc_points * n, rng).reshape(mc_points, n, d)
                m, s = mean_se(_values(G, W, X))
                scale = mass ** n / math.factorial(n)
                term, se = m * scale, s * scale
            terms.append(term)
            ses.append(se)
            if G.bounded is None and abs(term) < TERM_DECAY and n >= 2:
                break
        else:
            if G.bounded is None and abs(terms[-1]) >= TERM_DECAY:
                raise SeriesNotTruncated(f"series terms still {terms[-1]:.3g} after n = {n_max}")
    value = float(sum(terms))
    stderr = math.sqrt(sum(s * s for s in ses))
    res = LPIntegral(value, stderr, terms, ses)
    return res if return_stderr else value


def _pair_term(G: ConeFunction, rule: ProductRule) -> float:
    Q = len(rule)
    total = 0.0
    step = max(1, _PAIR_CHUNK // max(Q, 1))
    for i0 in range(0, Q, step):
        i = np.arange(i0, min(Q, i0 + step))
        I = np.repeat(i, Q)
        J = np.tile(np.arange(Q), i.size)
        W = np.stack([rule.S[I], rule.S[J]], axis=1)
        X = np.stack([rule.X[I], rule.X[J]], axis=1)
        total += float(np.dot(_values(G, W, X), rule.W[I] * rule.W[J]))
    return total / 2.0


def correlation_samples(G: ConeFunction, sampler, n: int, seed: int, key: str) -> np.ndarray:
    """``(KG)(eta)`` for ``n`` draws of the sampler, each localized to ``G``'s window."""
    out = np.empty(n)
    for start, stop, batch in sampler.batches(n, seed, key):
        out[start:stop] = k_transform_batch(G, batch)
    return out


def correlation_measure_mc(G: ConeFunction, sampler, n: int = 100_000, seed: int = 0,
                           key: str = "correlation") -> tuple:
    """Estimate of ``integral G d rho`` with its standard error.

    Raises
    ------
    TooManyAtoms
        If a localized draw exceeds the enumeration cap.
    """
    return mean_se(correlation_samples(G, sampler, n, seed, key))


def lp_integral_for(G: ConeFunction, sampler, **kw) -> LPIntegral:
    """:func:`lp_integral` for the intensity that ``sampler`` actually draws from."""
    return lp_integral(G, sampler.nu, sampler.sigma_eff, s_range=sampler.nu_range,
                       region=sampler.region, return_stderr=True, **kw)


def correlation_check(name: str, G: ConeFunction, sampler, n: int, seed: int, draws_key: str = "correlation",
                      exact: float | None = None) -> CheckResult:
    """Correlation-measure estimate of ``G`` against its Lebesgue-Poisson integral."""
    ref = lp_integral_for(G, sampler, seed=seed)
    samples = correlation_samples(G, sampler, n, seed, draws_key)
    detail = {"lp_terms": ref.terms}
    if exact is not None:
        detail["closed_form"] = exact
    return reference_check(name, samples, ref.value, ref.stderr, detail)


def correlation_function_poisson_check(specs, sampler, n: int = 100_000, seed: int = 0) -> list:
    """Ratios ``rho(A) / lambda(A)`` for indicator sets ``A``; each should be 1."""
    out = []
    for k, spec in enumerate(specs):
        G = ConeFunction.indicator(spec)
        ref = lp_integral_for(G, sampler, seed=seed)
        if not ref.value > 0:
            raise ValueError(f"set {k} has zero Lebesgue-Poisson measure")
        m, s = correlation_measure_mc(G, sampler, n, seed, key=f"kfunction:{k}")
        ratio = m / ref.value
        # delta method for the ratio of two independent estimates
        r_se = math.hypot(s / ref.value, m * ref.stderr / ref.value ** 2)
        res = estimate_check(f"correlation function ratio [N={spec.N}, {k}]", ratio, r_se, 1.0,
                             detail={"rho": m, "rho_se": s, "lambda": ref.value, "lambda_se": ref.stderr})
        out.append(res)
    return out
