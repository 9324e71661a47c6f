import numpy as np
import pytest

from radoncone.calculus import (
    CylinderFunction,
    Outer,
    birth_gradient,
    cylinder_catalog,
    death_gradient,
    directional_birth,
    directional_death,
    dirichlet_check,
    dirichlet_death,
    dirichlet_samples,
    form_generator_check,
    generator_L,
    gradient_bound_check,
    ibp_check,
    ibp_samples,
    mass_function,
)
from radoncone.errors import NoAtomAt, PositionOccupied
from radoncone.functions import TestFunction
from radoncone.intensity import BaseMeasure, GammaIntensity
from radoncone.measures import Box, FiniteDiscreteMeasure, Window, add_atom
from radoncone.sampling import GammaConeSampler, PoissonWindowSampler

UNIT = Box.unit()
SIGMA = BaseMeasure(UNIT)
NU1 = GammaIntensity(1.0)
ONE = TestFunction.box_indicator(UNIT)
MASS = mass_function(UNIT)
MASS2 = mass_function(UNIT, 2)
CONST = CylinderFunction.constant(1.7)
N_MC = 5_000


@pytest.fixture(scope="module")
def sampler():
    return PoissonWindowSampler(NU1, BaseMeasure(UNIT, 2.0), Window(UNIT, 0.1, 3.0))


@pytest.fixture(scope="module")
def catalog():
    return cylinder_catalog(UNIT)


def test_death_gradient_examples(eta_ab):
    assert death_gradient(MASS, eta_ab, 0.25) == pytest.approx(-2.0)
    assert death_gradient(CONST, eta_ab, 0.25) == 0.0
    assert death_gradient(MASS2, eta_ab, 0.25) == pytest.approx(9.0 - 25.0)
    with pytest.raises(NoAtomAt):
        death_gradient(MASS, eta_ab, 0.5)


def test_birth_gradient_examples(eta_ab):
    assert birth_gradient(MASS, eta_ab, 1.5, 0.5) == pytest.approx(1.5)
    assert birth_gradient(CONST, eta_ab, 1.5, 0.5) == 0.0
    assert birth_gradient(MASS2, eta_ab, 1.0, 0.5) == pytest.approx(36.0 - 25.0)
    with pytest.raises(PositionOccupied):
        birth_gradient(MASS, eta_ab, 1.0, 0.25)


def test_directional_derivatives(eta_ab):
    assert directional_death(MASS, eta_ab, ONE) == pytest.approx(-13.0)
    assert directional_birth(MASS, eta_ab, ONE, NU1, SIGMA) == pytest.approx(1.0, rel=1e-8)
    assert directional_death(CONST, eta_ab, ONE) == 0.0
    assert directional_birth(CONST, eta_ab, ONE, NU1, SIGMA) == 0.0


def test_generator_examples(eta_ab):
    assert generator_L(MASS, eta_ab, NU1, SIGMA) == pytest.approx(-12.0, rel=1e-8)
    assert generator_L(CONST, eta_ab, NU1, SIGMA) == 0.0
    # no atoms: only the birth part, sigma(L) int s^2 dnu_1 = 1
    assert generator_L(MASS, FiniteDiscreteMeasure.zero(), NU1, SIGMA) == pytest.approx(1.0, rel=1e-8)


def test_birth_then_death_cancel_exactly(catalog, rng):
    for F in catalog + [MASS2]:
        for _ in range(20):
            m = int(rng.integers(0, 8))
            eta = FiniteDiscreteMeasure(rng.uniform(0.1, 3, m), rng.uniform(0, 1, m))
            s, x = float(rng.uniform(0.1, 3)), float(rng.uniform(0, 1))
            assert death_gradient(F, add_atom(eta, s, x), x) == -birth_gradient(F, eta, s, x)


def test_outer_bounds_are_honoured():
    g = Outer.clamped_polynomial([0.0, 0.0, 1.0], clamp=3.0)
    assert g.bound == pytest.approx(9.0)
    t = np.linspace(-10, 10, 101)[:, None]
    assert np.max(np.abs(g(t))) <= g.bound


def test_gradient_bounds(catalog, sampler):
    for F in catalog:
        r = gradient_bound_check(F, sampler, n=300, seed=1)
        assert r.passed, r.line()


def test_constant_form_vanishes_per_draw(catalog, sampler):
    death, birth = dirichlet_samples(CONST, catalog[0], sampler, 500, 0)
    assert np.all(death == 0.0) and np.all(birth == 0.0)


def test_form_is_symmetric_per_draw(catalog, sampler):
    F, G = catalog[0], catalog[2]
    a = dirichlet_samples(F, G, sampler, 1000, 4)[0]
    b = dirichlet_samples(G, F, sampler, 1000, 4)[0]
    np.testing.assert_array_equal(a, b)


def test_death_form_of_mass():
    # E sum s^3 = sigma(L) Gamma(3) = 2 under the Gamma law
    g = GammaConeSampler(1.0, SIGMA, UNIT, 1e-4)
    m, s = dirichlet_death(MASS, MASS, g, 20_000, 3)
    assert abs(m - 2.0) <= 4 * s


def test_dirichlet_equality(catalog, sampler):
    r = dirichlet_check(catalog[0], catalog[1], sampler, N_MC, 5)
    assert r.passed, r.line()


def test_ibp_trivial_cases(catalog, sampler):
    lhs, rhs = ibp_samples(CONST, CONST, ONE, sampler, 2000, 0)
    assert np.all(lhs == 0.0)
    assert abs(rhs.mean()) <= 4 * rhs.std(ddof=1) / np.sqrt(rhs.size)
    lhs, rhs = ibp_samples(catalog[0], catalog[0], TestFunction.zero(), sampler, 500, 0)
    assert np.all(lhs == 0.0) and np.all(rhs == 0.0)


def test_ibp_identity(catalog, sampler):
    r = ibp_check(catalog[0], catalog[0], TestFunction.bump(UNIT), sampler, N_MC, 6)
    assert r.passed, r.line()


def test_form_generator_duality(catalog, sampler):
    for r in form_generator_check(catalog[1], catalog[1], sampler, N_MC, 7):
        assert r.passed, r.line()
    ones = form_generator_check(CONST, CONST, sampler, 500, 0)[0]
    assert ones.lhs == 0.0 and ones.rhs == 0.0
