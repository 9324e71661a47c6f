"""Identity suites run by ``radoncone check``.

Exact suites draw seeded random instances (measures of at most ``max_atoms``
atoms, weights uniform on ``[0.1, 10]``, positions uniform on ``[0, 1]``) and
report, per identity, the instance with the largest relative error.
Statistical suites run the Monte-Carlo verifiers with ``replicates`` draws on
the reference laws below, plus, when the configuration supplies a law, the
same law-independent identities on that law.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from radoncone import calculus, correlation, kernels, polynomials, randmeasures
from radoncone.errors import BoundViolated, ConfigError, SuiteError
from radoncone.functions import TestFunction
from radoncone.intensity import BaseMeasure, GammaIntensity, UniformIntensity
from radoncone.ktransform import (
    BoundedSetSpec,
    ConeFunction,
    k_bound_check,
    k_inverse_function,
    k_transform,
    k_transform_function,
    star_brute_force,
    star_convolution,
)
from radoncone.measures import Box, FiniteDiscreteMeasure, Window, enumerate_submeasures, project, to_configuration
from radoncone.report import EXACT_RTOL, CheckResult, Report, estimate_check, exact_check
from radoncone.sampling import GammaConeSampler, PoissonWindowSampler, generator

SUITES = ("ktransform", "polynomials", "mecke", "correlation", "calculus")
UNIT = Box.unit(1)
WEIGHT_RANGE = (0.1, 10.0)


@dataclass
class SuiteOptions:
    seed: int = 0
    replicates: int = 100_000
    instances: int = 100
    max_atoms: int = 10
    sampler: PoissonWindowSampler | None = None  # optional user law


# ---------------------------------------------------------------------------
# random instances


def random_measure(rng: np.random.Generator, m: int, dim: int = 1) -> FiniteDiscreteMeasure:
    return FiniteDiscreteMeasure(rng.uniform(*WEIGHT_RANGE, size=m), rng.random((m, dim)), dim=dim)


def random_step_function(rng: np.random.Generator, bound: float = 2.0, cells: int = 5) -> TestFunction:
    """Step function on ``[0, 1]`` with values uniform on ``[-bound, bound]``."""
    inner = np.sort(rng.random(cells - 1))
    edges = np.concatenate([[0.0], inner, [1.0]])
    return TestFunction.piecewise_constant(edges, rng.uniform(-bound, bound, size=cells))


def _instance_rngs(opts: SuiteOptions, key: str):
    for i in range(opts.instances):
        yield i, generator(opts.seed, key, i)


def _atoms(rng, i, cap):
    # instance 0 is always the zero measure, the next one a single atom
    return 0 if i == 0 else 1 if i == 1 else int(rng.integers(2, cap + 1))


def _rel_err(l, r, s):
    return abs(l - r) / max(abs(l), abs(r), abs(s), 1e-300)


def aggregate(name: str, triples, rtol: float = EXACT_RTOL) -> CheckResult:
    """One exact check summarizing ``(lhs, rhs, scale)`` over many instances."""
    triples = list(triples)
    if not triples:
        return CheckResult(name, "exact", 0.0, 0.0, passed=True, tolerance="no instances", detail={"instances": 0})
    errs = [_rel_err(*t) for t in triples]
    fails = sum(not exact_check(name, *t, rtol=rtol).passed for t in triples)
    k = int(np.argmax(errs))
    worst = exact_check(name, *triples[k], rtol=rtol)
    worst.passed = fails == 0
    worst.detail = {"instances": len(triples), "failures": fails, "max_rel_error": errs[k], "worst_instance": k}
    return worst


def bound_result(name: str, ratios, detail: dict | None = None) -> CheckResult:
    """Inequality check: every ``ratio = lhs / bound`` must be at most 1."""
    ratios = list(ratios)
    worst = max(ratios) if ratios else 0.0
    info = {"instances": len(ratios)}
    info.update(detail or {})
    return CheckResult(name, "bound", float(worst), 1.0, passed=bool(worst <= 1.0 + 1e-12),
                       tolerance="max ratio <= 1", detail=info)


# ---------------------------------------------------------------------------
# ktransform


def ktransform_suite(opts: SuiteOptions) -> list:
    inv_fwd, inv_bwd, scalar, lin, pos, star_pt, star_tab, star_bf, comm, assoc, lp_enum, lp_prod = ([] for _ in range(12))
    for i, rng in _instance_rngs(opts, "ktransform"):
        m = _atoms(rng, i, opts.max_atoms + 2)
        eta = random_measure(rng, m)
        vals = rng.uniform(-1, 1, size=1 << m)
        G = ConeFunction.on_submeasures(eta, vals)
        absG = kernels.subset_zeta(np.abs(vals))
        back = k_inverse_function(k_transform_function(G)).table(eta)
        j = int(np.argmax(np.abs(back - vals)))
        inv_fwd.append((back[j], vals[j], absG[-1]))
        fwd = k_transform_function(k_inverse_function(G)).table(eta)
        j = int(np.argmax(np.abs(fwd - vals)))
        inv_bwd.append((fwd[j], vals[j], float(np.max(kernels.subset_zeta(np.abs(kernels.subset_mobius(vals)))))))
        scalar.append((k_transform(G, eta), float(np.sum(vals)), absG[-1]))
        alpha, beta = rng.uniform(-2, 2, size=2)
        vals2 = rng.uniform(-1, 1, size=1 << m)
        G2 = ConeFunction.on_submeasures(eta, vals2)
        lin.append((k_transform(G.combine(G2, alpha, beta), eta), alpha * k_transform(G, eta) + beta * k_transform(G2, eta),
                    abs(alpha) * absG[-1] + abs(beta) * float(np.sum(np.abs(vals2)))))
        positive = k_transform_function(ConeFunction.on_submeasures(eta, np.abs(vals))).table(eta)
        pos.append(float(np.min(positive)) >= 0.0)

        # star product, at most max_atoms atoms
        ms = min(m, opts.max_atoms)
        eta_s = random_measure(rng, ms)
        g1 = rng.uniform(-1, 1, size=1 << ms)
        g2 = rng.uniform(-1, 1, size=1 << ms)
        G1, G2 = ConeFunction.on_submeasures(eta_s, g1), ConeFunction.on_submeasures(eta_s, g2)
        S = star_convolution(G1, G2)
        k1, k2 = kernels.subset_zeta(g1), kernels.subset_zeta(g2)
        a1, a2 = kernels.subset_zeta(np.abs(g1)), kernels.subset_zeta(np.abs(g2))
        star_pt.append((k_transform(S, eta_s), k1[-1] * k2[-1], a1[-1] * a2[-1]))
        ks = k_transform_function(S).table(eta_s)
        j = int(np.argmax(np.abs(ks - k1 * k2)))
        star_tab.append((ks[j], k1[j] * k2[j], a1[j] * a2[j]))
        if ms <= 8:
            g3 = rng.uniform(-1, 1, size=1 << ms)
            G3 = ConeFunction.on_submeasures(eta_s, g3)
            a3 = kernels.subset_zeta(np.abs(g3))
            comm.append((S(eta_s), star_convolution(G2, G1)(eta_s), a1[-1] * a2[-1]))
            left = star_convolution(S, G3)(eta_s)
            right = star_convolution(G1, star_convolution(G2, G3))(eta_s)
            assoc.append((left, right, a1[-1] * a2[-1] * a3[-1]))
        if ms <= 6:
            ab = star_brute_force(ConeFunction.on_submeasures(eta_s, np.abs(g1)),
                                  ConeFunction.on_submeasures(eta_s, np.abs(g2)), eta_s)
            star_bf.append((S(eta_s), star_brute_force(G1, G2, eta_s), ab))

        # Lebesgue-Poisson exponent
        f = random_step_function(rng)
        E = ConeFunction.lp_exponent(f)
        w = eta.weights * f(eta.positions) if m else np.zeros(0)
        enum = sum(math.prod((xi.weights * f(xi.positions)).tolist()) if xi.n_atoms else 1.0
                   for xi in enumerate_submeasures(eta))
        kg = k_transform(E, eta)
        scale = float(np.prod(1.0 + np.abs(w)))
        lp_enum.append((kg, enum, scale))
        lp_prod.append((kg, float(np.prod(1.0 + w)), scale))

    out = [
        aggregate("K-inverse of K-transform", inv_fwd),
        aggregate("K-transform of K-inverse", inv_bwd),
        aggregate("K-transform equals submeasure sum", scalar),
        aggregate("star homomorphism K(G1*G2) = KG1 KG2", star_pt),
        aggregate("star homomorphism on every submeasure", star_tab),
        aggregate("star product against label enumeration", star_bf),
        aggregate("star product commutative", comm),
        aggregate("star product associative", assoc),
        aggregate("K-transform linear", lin),
        CheckResult("K-transform positivity", "bound", float(sum(pos)), float(len(pos)), passed=all(pos),
                    tolerance="KG >= 0 on every submeasure when G >= 0", detail={"instances": len(pos)}),
        aggregate("LP exponent against submeasure enumeration", lp_enum),
        aggregate("LP exponent product form", lp_prod),
    ]
    out.extend(_bound_checks(opts))
    return out


def _bound_checks(opts: SuiteOptions) -> list:
    """Growth bound of ``KG`` for bounded-set indicators and the window cardinality bound, on Gamma draws."""
    sampler = GammaConeSampler(1.0, BaseMeasure(UNIT), UNIT, 1e-4)
    rng = generator(opts.seed, "bound-draws")
    draws = list(sampler.sample_batch(max(opts.instances, 1), rng))
    specs = []
    spec_rng = generator(opts.seed, "bound-specs")
    for k in range(12):
        lo = float(spec_rng.uniform(0.0, 0.5))
        a = float(spec_rng.choice([0.05, 0.2, 0.5, 1.0, 2.0]))
        win = Window(Box.interval(lo, lo + float(spec_rng.uniform(0.2, 0.5))), a, a * float(spec_rng.uniform(2, 20)))
        specs.append((BoundedSetSpec(win, int(spec_rng.integers(0, 5))), float(spec_rng.uniform(0.5, 3.0))))
    ratios, worst_spec, violated = [], None, []
    for k, (spec, c) in enumerate(specs):
        G = ConeFunction.indicator(spec, c)
        try:
            rep = k_bound_check(G, draws)
            ratios.append(rep.max_ratio)
        except BoundViolated as exc:
            ratios.append(math.inf)
            violated.append(f"set {k}: {exc}")
    growth = bound_result("KG growth bound C(1+eta(L))^N", ratios,
                          {"instances": len(specs) * len(draws), "sets": len(specs), "draws": len(draws),
                           "violations": violated})

    card = []
    for spec, _ in specs:
        w = spec.window
        for eta in draws:
            count = project(eta, w).n_atoms
            mass = eta.mass(w.region)
            card.append(0.0 if count == 0 else count * w.a / mass)
    cardinality = bound_result("window cardinality |tau| <= eta(L)/a", card)
    return [growth, cardinality]


# ---------------------------------------------------------------------------
# polynomials


def _marked(f, g):
    return lambda s, x: g(np.asarray(s, dtype=float)) * np.asarray(f(x), dtype=float).reshape(np.shape(s))


def polynomials_suite(opts: SuiteOptions, orders=range(0, 6)) -> list:
    binom, lower, genf, birth, death, cross, oracle, tab, perm = ([] for _ in range(9))
    bound_ratios, cutoff = [], []
    for i, rng in _instance_rngs(opts, "polynomials"):
        m = _atoms(rng, i, opts.max_atoms)
        eta = random_measure(rng, m)
        f = random_step_function(rng)
        fa = f.abs()
        gamma = to_configuration(eta)
        fhat = _marked(f, np.tanh)
        mask = rng.random(m) < 0.5
        eta1, eta2 = eta.select(mask), eta.select(~mask)
        y = (float(rng.uniform(*WEIGHT_RANGE)), (float(rng.random()),))
        x_new = y[1]
        x_old = tuple(eta.positions[int(rng.integers(m))]) if m else None
        for n in orders:
            binom.append(polynomials.binomial_check(eta1, eta2, f, n))
            lower.append(polynomials.lowering_check(gamma, y, fhat, n))
            grads = polynomials.gradient_checks(eta, y[0], x_new, x_old, f, n)
            birth.append(grads[0])
            if len(grads) > 1:
                death.append(grads[1])
            a, b = polynomials.cross_representation(eta, f, n)
            cross.append((a, b, polynomials.p_n_pairing(eta, fa, n)))
            value, cap = polynomials.pairing_bound(eta, f, n)
            bound_ratios.append(0.0 if value == 0 else value / cap)
            if n <= 3 and m <= 8:
                oracle.append((polynomials.p_n_pairing(eta, f, n), polynomials.p_n_pairing_ordered(eta, f, n),
                               polynomials.p_n_pairing(eta, fa, n)))
            if n > m:
                cutoff.append((polynomials.p_n_pairing(eta, f, n), 0.0, 0.0))
        genf.append(polynomials.generating_function_check(eta, f, m + int(rng.integers(0, 3))))

        # general symmetric kernels: a rank-one table must match the product kernel of the same step function
        n = int(rng.integers(1, 4))
        edges = f.params["spec"]["edges"]
        v = np.asarray(f.params["spec"]["values"], dtype=float)
        T = v
        for _ in range(n - 1):
            T = np.multiply.outer(T, v)
        K = polynomials.SymmetricTestFunction.tabulated(edges, T)
        tab.append((polynomials.p_n_pairing(eta, K, n), polynomials.p_n_pairing(eta, f, n),
                    polynomials.p_n_pairing(eta, fa, n)))
        R = polynomials.SymmetricTestFunction.tabulated(edges, rng.uniform(-2, 2, size=(len(v),) * n))
        shuffled = FiniteDiscreteMeasure(eta.weights[::-1], eta.positions[::-1], dim=1)
        perm.append((polynomials.p_n_pairing(eta, R, n), polynomials.p_n_pairing(shuffled, R, n), 0.0))

    return [
        aggregate("binomial identity", binom),
        aggregate("lowering property", lower),
        aggregate("generating function", genf),
        aggregate("birth gradient formula", birth),
        aggregate("death gradient formula", death),
        aggregate("cross-representation (exact)", cross, rtol=0.0),
        aggregate("subset sum against ordered tuples", oracle),
        aggregate("tabulated rank-one kernel against product kernel", tab),
        aggregate("permutation invariance (exact)", perm, rtol=0.0),
        aggregate("degree cutoff", cutoff, rtol=0.0),
        bound_result("pairing bound |<P(n), f>| <= <eta, |f|>^n", bound_ratios),
    ]


# ---------------------------------------------------------------------------
# statistical suites


def count_window_sampler() -> PoissonWindowSampler:
    return PoissonWindowSampler(GammaIntensity(1.0), BaseMeasure(UNIT), Window(UNIT, 0.5, 2.0))


def gamma_sampler(tol: float = 1e-4) -> GammaConeSampler:
    return GammaConeSampler(1.0, BaseMeasure(UNIT), UNIT, tol)


def _law_checks(sampler: PoissonWindowSampler, opts: SuiteOptions) -> list:
    """Law-independent Mecke-suite identities on a user-supplied law."""
    n, seed = opts.replicates, opts.seed
    region = sampler.region
    out = randmeasures.count_law_check(sampler, n, seed, name="user law count")
    f = TestFunction.bump(region)
    out.append(randmeasures.laplace_check("user law Laplace [bump]", f, sampler, n, seed))
    for F in randmeasures.mecke_catalog(region):
        out.extend(randmeasures.mecke_check(F, sampler, n, seed))
    out.extend(randmeasures.moment_checks(region, sampler, (1, 2, 3), n, seed))
    for r in out:
        r.name = r.name if r.name.startswith("user law") else "user law " + r.name
    return out


def mecke_suite(opts: SuiteOptions) -> list:
    n, seed = opts.replicates, opts.seed
    sig = BaseMeasure(UNIT)
    ws = count_window_sampler()
    out = randmeasures.count_law_check(ws, n, seed, name="count law")
    out.extend(randmeasures.window_sampler_checks(ws, n, seed))
    gs = gamma_sampler()
    one = TestFunction.box_indicator(UNIT)
    out.append(randmeasures.laplace_check("Gamma Laplace transform", one, gs, n, seed,
                                          reference=randmeasures.gamma_laplace_closed_form(one, 1.0, sig)))
    out.append(randmeasures.laplace_check("Gamma Laplace transform vs sampled-law quadrature", one, gs, n, seed))
    uni = UniformIntensity(1.0, 2.0)
    us = PoissonWindowSampler(uni, sig, Window(UNIT, 1.0, 2.0))
    closed = math.exp(math.exp(-1.0) - math.exp(-2.0) - 1.0)
    res = randmeasures.laplace_check("uniform-intensity Laplace transform", one, us, n, seed)
    res.detail["closed_form"] = closed
    out.append(res)
    out.append(exact_check("uniform Laplace quadrature vs closed form",
                           randmeasures.laplace_transform_exact(one, uni, sig), closed, rtol=1e-9))
    bump = TestFunction.bump(UNIT, 0.7)
    out.append(randmeasures.laplace_check("Gamma Laplace transform [bump]", bump, gs, n, seed))
    refs = {"weight": 1.0}  # sigma(L) Gamma(2) for the untruncated law
    for F in randmeasures.mecke_catalog(UNIT):
        out.extend(randmeasures.mecke_check(F, gs, n, seed, refs.get(F.name)))
    out.extend(randmeasures.moment_checks(UNIT, gs, (1, 2, 3), n, seed, references={1: 1.0, 2: 2.0, 3: 6.0}))
    out.append(randmeasures.gamma_truncation_check(1.0, sig, UNIT, 1e-3, n, seed))
    out.append(randmeasures.small_weight_counts(1.0, sig, UNIT, seed=seed))
    if opts.sampler is not None:
        out.extend(_law_checks(opts.sampler, opts))
    return out


def correlation_catalog(window: Window) -> list:
    """``(name, G, closed form or None)`` entries for the correlation suite."""
    nu = GammaIntensity(1.0)
    lam = nu.moment_closed_form(0, window.a, window.b)
    L = window.region
    half = Window(Box.interval(L.lo[0], 0.5 * (L.lo[0] + L.hi[0])), window.a, window.b)
    return [
        ("bounded set N=0", ConeFunction.indicator(BoundedSetSpec(window, 0)), 1.0),
        ("bounded set N=1", ConeFunction.indicator(BoundedSetSpec(window, 1, 1)), lam),
        ("bounded set N=2", ConeFunction.indicator(BoundedSetSpec(window, 2, 2)), lam ** 2 / 2),
        ("bounded set N=3", ConeFunction.indicator(BoundedSetSpec(window, 3, 3)), lam ** 3 / 6),
        ("bounded set N<=2", ConeFunction.indicator(BoundedSetSpec(window, 2)), 1 + lam + lam ** 2 / 2),
        ("bounded set half window N<=2", ConeFunction.indicator(BoundedSetSpec(half, 2), 2.0), None),
        ("LP exponent [bump]", ConeFunction.lp_exponent(TestFunction.bump(L, 0.5)), None),
        ("LP exponent [step]", ConeFunction.lp_exponent(TestFunction.piecewise_constant([0, 0.5, 1], [0.5, -0.4])), None),
        ("singleton [step]", ConeFunction.singleton(TestFunction.piecewise_constant([0, 0.3, 1], [1.0, -0.5])), None),
    ]


def correlation_suite(opts: SuiteOptions) -> list:
    n, seed = opts.replicates, opts.seed
    ws = count_window_sampler()
    out = []
    for name, G, closed in correlation_catalog(ws.window):
        out.append(correlation.correlation_check(f"correlation [{name}]", G, ws, n, seed,
                                                 draws_key="correlation", exact=closed))
        if closed is not None and G.bounded is not None and G.bounded.N <= 2:
            out.append(exact_check(f"LP integral closed form [{name}]",
                                   correlation.lp_integral_for(G, ws).value, closed, rtol=1e-9))
    w = ws.window
    specs = [BoundedSetSpec(w, 1, 1), BoundedSetSpec(Window(Box.interval(0, 0.5), 0.5, 1.0), 1, 1),
             BoundedSetSpec(w, 2, 2)]
    out.extend(correlation.correlation_function_poisson_check(specs, ws, n, seed))
    if opts.sampler is not None:
        s = opts.sampler
        for name, G, _ in correlation_catalog(s.window)[:4]:
            out.append(correlation.correlation_check(f"user law correlation [{name}]", G, s, n, seed))
    return out


def calculus_sampler() -> PoissonWindowSampler:
    return PoissonWindowSampler(GammaIntensity(1.0), BaseMeasure(UNIT, 2.0), Window(UNIT, 0.1, 3.0))


def calculus_suite(opts: SuiteOptions) -> list:
    n, seed = opts.replicates, opts.seed
    cs = calculus_sampler()
    cat = calculus.cylinder_catalog(UNIT)
    out = [calculus.gradient_bound_check(F, cs, seed=seed) for F in cat]
    for F, G in [(cat[0], cat[1]), (cat[2], cat[3]), (cat[1], cat[3])]:
        out.append(calculus.dirichlet_check(F, G, cs, n, seed))
    h = TestFunction.bump(UNIT)
    for F, G in [(cat[0], cat[0]), (cat[0], cat[3]), (cat[2], cat[1])]:
        out.append(calculus.ibp_check(F, G, h, cs, n, seed))
    for F, G in [(cat[0], cat[1]), (cat[2], cat[2]), (cat[3], cat[3])]:
        out.extend(calculus.form_generator_check(F, G, cs, n, seed))
    gs = gamma_sampler()
    M = calculus.mass_function(UNIT, 1)
    m, s = calculus.dirichlet_death(M, M, gs, n, seed)
    out.append(estimate_check("Dirichlet form of the mass under Gamma", m, s, 2.0,
                              detail={"reference": "E sum s_x^3 = sigma(L) Gamma(3)"}))
    return out


SUITE_FUNCTIONS = {
    "ktransform": ktransform_suite,
    "polynomials": polynomials_suite,
    "mecke": mecke_suite,
    "correlation": correlation_suite,
    "calculus": calculus_suite,
}


def run_suite(name: str, opts: SuiteOptions) -> Report:
    """Run one suite (or ``all``) and collect a report; timings go to metadata only."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITE_FUNCTIONS:
        names = [name]
    else:
        raise ConfigError("suite", f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    report = Report(name, config={"seed": opts.seed, "replicates": opts.replicates, "instances": opts.instances,
                                  "max_atoms": opts.max_atoms})
    timings = {}
    for s in names:
        t0 = time.perf_counter()
        try:
            results = SUITE_FUNCTIONS[s](opts)
        except ConfigError:
            raise
        except Exception as exc:
            raise SuiteError(s, exc) from exc
        for r in results:
            r.detail.setdefault("suite", s)
        report.extend(results)
        timings[s] = round(time.perf_counter() - t0, 3)
    report.metadata["seconds"] = timings
    return report
