import json
import math

import numpy as np
import pytest

from radoncone import kernels
from radoncone.errors import BoundViolated, TooManyAtoms
from radoncone.functions import TestFunction
from radoncone.ktransform import (
    BoundCertificate,
    BoundedSetSpec,
    ConeFunction,
    k_bound_check,
    k_inverse,
    k_inverse_function,
    k_transform,
    k_transform_function,
    star_brute_force,
    star_convolution,
)
from radoncone.measures import Box, FiniteDiscreteMeasure, Window, enumerate_submeasures

UNIT = Box.unit()
ZERO = FiniteDiscreteMeasure.zero()
# f(a) = 1, f(b) = 0.5 at a = 0.25, b = 0.75
F_AB = TestFunction.piecewise_constant([0.0, 0.5, 1.0], [1.0, 0.5])
ONE = TestFunction.box_indicator(UNIT)


def random_eta(rng, m):
    return FiniteDiscreteMeasure(rng.uniform(0.1, 10, m), rng.uniform(0, 1, m))


def test_lp_exponent_k_transform(eta_ab, backend):
    E = ConeFunction.lp_exponent(F_AB)
    assert k_transform(E, eta_ab) == pytest.approx(7.5, rel=1e-14)
    by_hand = sum(E(xi) for xi in enumerate_submeasures(eta_ab))
    assert by_hand == pytest.approx(7.5, rel=1e-14)


def test_lp_exponent_values(eta_ab):
    E = ConeFunction.lp_exponent(F_AB)
    assert E(eta_ab) == pytest.approx(3.0)
    assert E(ZERO) == 1.0
    assert E(FiniteDiscreteMeasure.from_atoms([(4.0, 0.75)])) == pytest.approx(2.0)
    Z = ConeFunction.lp_exponent(TestFunction.zero())
    assert Z(ZERO) == 1.0 and Z(eta_ab) == 0.0


def test_unit_transforms_to_one(eta_ab, rng):
    U = ConeFunction.unit()
    for eta in (ZERO, eta_ab, random_eta(rng, 9)):
        assert k_transform(U, eta) == 1.0


def test_singleton_transform_is_pairing(eta_ab):
    assert k_transform(ConeFunction.singleton(F_AB), eta_ab) == pytest.approx(3.5, rel=1e-14)


def test_k_inverse_of_constant(eta_ab):
    one = ConeFunction(lambda xi: 1.0)
    assert k_inverse(one, ZERO) == 1.0
    assert k_inverse(one, eta_ab) == 0.0


def test_k_inverse_recovers_tabulated(eta_ab):
    a, b = FiniteDiscreteMeasure.from_atoms([(2.0, 0.25)]), FiniteDiscreteMeasure.from_atoms([(3.0, 0.75)])
    G = ConeFunction.tabulated([(a, 1.5), (b, -0.25)])
    back = k_inverse_function(k_transform_function(G))
    for xi, v in [(ZERO, 0.0), (a, 1.5), (b, -0.25), (eta_ab, 0.0)]:
        assert back(xi) == pytest.approx(v, abs=1e-14)


def test_k_inverse_of_lp_product(eta_ab):
    KE = ConeFunction(lambda xi: math.prod(1 + s * F_AB(x[0]) for s, x in xi.atoms))
    assert k_inverse(KE, eta_ab) == pytest.approx(3.0, rel=1e-14)


@pytest.mark.parametrize("m", [0, 1, 5, 10])
def test_inversion_both_ways(backend, m, rng):
    eta = random_eta(rng, m)
    vals = rng.uniform(-1, 1, 1 << m)
    G = ConeFunction.on_submeasures(eta, vals)
    np.testing.assert_allclose(k_inverse_function(k_transform_function(G)).table(eta), vals, atol=1e-12)
    np.testing.assert_allclose(k_transform_function(k_inverse_function(G)).table(eta), vals, atol=1e-12)


def test_star_examples(eta_ab, backend):
    E_f, E_g = ConeFunction.lp_exponent(F_AB), ConeFunction.lp_exponent(ONE)
    S = star_convolution(E_f, E_g)
    assert S(eta_ab) == pytest.approx(72.0, rel=1e-14)
    assert star_brute_force(E_f, E_g, eta_ab) == pytest.approx(72.0, rel=1e-14)
    assert k_transform(S, eta_ab) == pytest.approx(90.0, rel=1e-14)


def test_star_unit(rng):
    eta = random_eta(rng, 6)
    G = ConeFunction.on_submeasures(eta, rng.uniform(-1, 1, 64))
    np.testing.assert_allclose(star_convolution(ConeFunction.unit(), G).table(eta), G.table(eta), rtol=1e-13)


@pytest.mark.parametrize("m", [1, 4, 8])
def test_star_homomorphism(backend, m, rng):
    eta = random_eta(rng, m)
    g1, g2 = rng.uniform(-1, 1, (2, 1 << m))
    G1, G2 = ConeFunction.on_submeasures(eta, g1), ConeFunction.on_submeasures(eta, g2)
    lhs = k_transform(star_convolution(G1, G2), eta)
    assert lhs == pytest.approx(kernels.subset_zeta(g1)[-1] * kernels.subset_zeta(g2)[-1], rel=1e-10)


def test_star_cap():
    eta = FiniteDiscreteMeasure(np.ones(14), np.linspace(0, 1, 14))
    S = star_convolution(ConeFunction.lp_exponent(ONE), ConeFunction.lp_exponent(ONE))
    with pytest.raises(TooManyAtoms):
        S(eta)


def test_k_transform_cap():
    eta = FiniteDiscreteMeasure(np.ones(21), np.linspace(0, 1, 21))
    with pytest.raises(TooManyAtoms):
        k_transform(ConeFunction(lambda xi: 1.0), eta)


def test_local_support_shrinks_the_sum(rng):
    # atoms outside the certificate window are invisible to KG
    spec = BoundedSetSpec(Window(Box.interval(0, 0.5), 1, 5), 2)
    G = ConeFunction.indicator(spec)
    eta = FiniteDiscreteMeasure(np.r_[2.0, 3.0, rng.uniform(0.1, 10, 20)], np.r_[0.1, 0.2, rng.uniform(0.6, 1, 20)])
    assert k_transform(G, eta) == 4.0


def test_bound_check_examples(eta_ab):
    G = ConeFunction.indicator(BoundedSetSpec(Window(UNIT, 1, 5), 1))
    assert k_transform(G, eta_ab) == 3.0
    rep = k_bound_check(G, [eta_ab])
    assert rep.constant == 1.0
    assert rep.max_ratio == pytest.approx(3.0 / 6.0)
    zero = ConeFunction.zero_function()
    zero.bounded = BoundCertificate(0.0, Window(UNIT, 1, 5), 1)
    assert k_bound_check(zero, [eta_ab]).max_ratio == 0.0
    assert k_bound_check(G, [ZERO]).max_ratio == 1.0


def test_bound_constant_scales_with_small_a():
    cert = BoundCertificate(2.0, Window(UNIT, 0.25, 1.0), 3)
    assert cert.constant == 2.0 * 4.0 ** 3


def test_inconsistent_certificate_is_reported(eta_ab):
    G = ConeFunction.indicator(BoundedSetSpec(Window(UNIT, 1, 5), 1), 10.0)
    G.bounded = BoundCertificate(1.0, Window(UNIT, 1, 5), 1)
    with pytest.raises(BoundViolated):
        k_bound_check(G, [eta_ab])


def test_bound_holds_on_random_measures(rng):
    spec = BoundedSetSpec(Window(Box.interval(0.2, 0.7), 0.5, 4.0), 3)
    G = ConeFunction.indicator(spec, 2.0)
    rep = k_bound_check(G, [random_eta(rng, int(rng.integers(0, 12))) for _ in range(50)])
    assert rep.n == 50 and rep.max_ratio <= 1.0


def test_tabulated_json_round_trip(eta_ab):
    a = FiniteDiscreteMeasure.from_atoms([(2.0, 0.25)])
    G = ConeFunction.tabulated([(ZERO, 1.0), (a, 2.0), (eta_ab, -4.0)])
    H = ConeFunction.from_json(json.loads(json.dumps(G.to_json())))
    for xi in enumerate_submeasures(eta_ab):
        assert H(xi) == G(xi)
    assert k_transform(H, eta_ab) == -1.0


def test_linearity(rng):
    eta = random_eta(rng, 7)
    g1, g2 = rng.uniform(-1, 1, (2, 128))
    G1, G2 = ConeFunction.on_submeasures(eta, g1), ConeFunction.on_submeasures(eta, g2)
    lhs = k_transform(G1.combine(G2, 2.0, -3.0), eta)
    assert lhs == pytest.approx(2 * g1.sum() - 3 * g2.sum(), rel=1e-12)
