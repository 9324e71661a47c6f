import math

import numpy as np
import pytest

from radoncone.errors import QuadratureFailure
from radoncone.functions import TestFunction
from radoncone.intensity import BaseMeasure, BetaIntensity, GammaIntensity, UniformIntensity
from radoncone.measures import Box, Window, pairing
from radoncone.quadrature import integrate
from radoncone.randmeasures import (
    compositions,
    count_law_check,
    gamma_laplace_closed_form,
    laplace_transform_exact,
    laplace_transform_mc,
    mecke_catalog,
    mecke_check,
    MeckeFunctional,
    mecke_references,
    mecke_samples,
    moment_exact,
    moment_mc,
)
from radoncone.sampling import GammaConeSampler, PoissonWindowSampler, generator, sample_gamma_cone, sample_poisson_window

UNIT = Box.unit()
SIGMA = BaseMeasure(UNIT)
NU1 = GammaIntensity(1.0)

# Frozen oracle values (mpmath, 30 digits, rounded to double).
LAMBDA_WINDOW = 0.51087308406809969  # E1(0.5) - E1(2): nu_1([0.5, 2])
MASS_WINDOW = 0.47119537647602073  # e^-0.5 - e^-2: integral of s over [0.5, 2]
LAPLACE_UNIFORM_EXP = 0.46419254643601247  # exp(e^-1 - e^-2 - 1)
LAPLACE_WINDOW = 0.74433170601973421
MOMENT2_WINDOW = 0.72581522267149097
MOMENT3_WINDOW = 1.4346397580302946

N_MC = 20_000


@pytest.fixture(scope="module")
def window_sampler():
    return PoissonWindowSampler(NU1, SIGMA, Window(UNIT, 0.5, 2.0))


@pytest.fixture(scope="module")
def gamma_sampler():
    return GammaConeSampler(1.0, SIGMA, UNIT, 1e-4)


# intensities and quadrature -----------------------------------------------


def test_gamma_window_mass(window_sampler):
    assert NU1.mass(0.5, 2.0) == pytest.approx(LAMBDA_WINDOW, rel=1e-12)
    assert window_sampler.mean_count == pytest.approx(LAMBDA_WINDOW, rel=1e-12)
    assert window_sampler.expected_mass() == pytest.approx(MASS_WINDOW, rel=1e-12)


@pytest.mark.parametrize("n,ref", [(1, 1.0), (2, 1.0), (3, 2.0), (5, 24.0)])
def test_gamma_moments(n, ref):
    # integral s^n s^-1 e^-s ds = Gamma(n)
    assert NU1.moment(n) == pytest.approx(ref, rel=1e-10)
    assert NU1.moment_closed_form(n) == pytest.approx(ref, rel=1e-14)


def test_infinite_gamma_mass():
    assert NU1.mass(0.0, 1.0) == math.inf
    assert math.isfinite(NU1.mass(1e-8, 1.0))


def test_uniform_and_beta_moments():
    u = UniformIntensity(1.0, 2.0, 3.0)
    assert u.moment(1) == pytest.approx(4.5, rel=1e-12)
    b = BetaIntensity(2.0, 3.0, 1.0)
    assert b.moment(0) == pytest.approx(1.0, rel=1e-10)
    assert b.moment(1) == pytest.approx(b.moment_closed_form(1), rel=1e-10)


def test_quadrature_failure_is_raised():
    with pytest.raises(QuadratureFailure):
        integrate(lambda s: 1.0 / s, 0.0, 1.0)


# sampling ------------------------------------------------------------------


def test_sampler_is_deterministic(window_sampler):
    a = list(window_sampler.sample_batch(50, generator(9, "x")))
    b = list(window_sampler.sample_batch(50, generator(9, "x")))
    c = list(window_sampler.sample_batch(50, generator(10, "x")))
    assert a == b
    assert a != c


def test_draws_stay_in_the_window(window_sampler):
    batch = window_sampler.sample_batch(500, generator(1))
    assert np.all((batch.weights >= 0.5) & (batch.weights <= 2.0))
    assert np.all(UNIT.contains(batch.positions))


def test_empty_base_measure_gives_zero():
    s = PoissonWindowSampler(NU1, BaseMeasure(UNIT, 0.0), Window(UNIT, 0.5, 2.0))
    assert all(eta.is_zero() for eta in s.sample_batch(100, generator(0)))
    assert sample_poisson_window(NU1, BaseMeasure(UNIT, 0.0), Window(UNIT, 1, 2), generator(0)).is_zero()
    for r in count_law_check(s, 200, 0):
        assert r.passed


def test_gamma_truncation_level():
    eta, eps = sample_gamma_cone(2.0, BaseMeasure(UNIT, 0.5), UNIT, 1e-3, generator(3))
    assert eps == pytest.approx(1e-3)
    assert eta.n_atoms == 0 or eta.weights.min() >= eps


def test_count_law(window_sampler):
    results = count_law_check(window_sampler, N_MC, seed=4)
    assert results and all(r.passed for r in results), [r.line() for r in results]


# Laplace transform ----------------------------------------------------------


def test_laplace_of_zero_is_one(gamma_sampler):
    m, s = laplace_transform_mc(TestFunction.zero(), gamma_sampler, 100, 0)
    assert (m, s) == (1.0, 0.0)
    assert laplace_transform_exact(TestFunction.zero(), NU1, SIGMA) == 1.0


def test_gamma_laplace_closed_form():
    f = TestFunction.box_indicator(UNIT)
    assert gamma_laplace_closed_form(f, 1.0, SIGMA) == pytest.approx(0.5, rel=1e-14)
    assert laplace_transform_exact(f, NU1, SIGMA) == pytest.approx(0.5, rel=1e-9)


def test_laplace_quadrature_uniform():
    f = TestFunction.box_indicator(UNIT)
    got = laplace_transform_exact(f, UniformIntensity(1.0, 2.0), SIGMA)
    # exp(-integral_1^2 (1 - e^-s) ds)
    assert got == pytest.approx(LAPLACE_UNIFORM_EXP, rel=1e-10)


def test_laplace_window_quadrature(window_sampler):
    f = TestFunction.box_indicator(UNIT)
    got = laplace_transform_exact(f, NU1, window_sampler.sigma_eff, window_sampler.nu_range)
    assert got == pytest.approx(LAPLACE_WINDOW, rel=1e-10)


def test_laplace_mc(gamma_sampler):
    f = TestFunction.box_indicator(UNIT)
    m, s = laplace_transform_mc(f, gamma_sampler, N_MC, seed=5)
    assert abs(m - 0.5) <= 4 * s


# moments ---------------------------------------------------------------------


def test_compositions():
    assert sorted(compositions(3, 2)) == [(1, 2), (2, 1)]
    assert list(compositions(2, 3)) == []


@pytest.mark.parametrize("n,ref", [(1, 1.0), (2, 2.0), (3, 6.0)])
def test_moment_exact_gamma(n, ref):
    assert moment_exact(n, UNIT, NU1, SIGMA) == pytest.approx(ref, rel=1e-9)


def test_moment_exact_window(window_sampler):
    args = (UNIT, NU1, window_sampler.sigma_eff, window_sampler.nu_range)
    assert moment_exact(1, *args) == pytest.approx(MASS_WINDOW, rel=1e-10)
    assert moment_exact(2, *args) == pytest.approx(MOMENT2_WINDOW, rel=1e-10)
    assert moment_exact(3, *args) == pytest.approx(MOMENT3_WINDOW, rel=1e-10)


def test_moment_of_empty_region_is_zero():
    assert moment_exact(2, UNIT, NU1, BaseMeasure(UNIT, 0.0)) == 0.0


@pytest.mark.parametrize("n", [1, 2])
def test_moment_mc(gamma_sampler, n):
    m, s = moment_mc(n, UNIT, gamma_sampler, N_MC, seed=6)
    ref = moment_exact(n, UNIT, NU1, gamma_sampler.sigma_eff, gamma_sampler.nu_range)
    assert abs(m - ref) <= 4 * s


# Mecke -----------------------------------------------------------------------


def test_mecke_catalog(window_sampler):
    refs = mecke_references(window_sampler, UNIT)
    cat = mecke_catalog(UNIT)
    assert len(cat) >= 3
    for F in cat:
        for r in mecke_check(F, window_sampler, N_MC, seed=8, reference=refs.get(F.name)):
            assert r.passed, r.line()


def test_mean_mass_matches_first_moment(window_sampler):
    batch = window_sampler.sample_batch(N_MC, generator(11))
    mass = batch.mass(UNIT)
    assert abs(mass.mean() - MASS_WINDOW) <= 4 * mass.std(ddof=1) / math.sqrt(N_MC)
    eta = batch[0]
    assert pairing(eta, TestFunction.box_indicator(UNIT)) == pytest.approx(mass[0])


def test_small_weight_counts_grow_without_bound():
    from radoncone.randmeasures import small_weight_counts
    r = small_weight_counts(1.0, SIGMA, UNIT, n=500, seed=2)
    assert r.passed and r.kind == "diagnostic"
    counts = r.detail["mean_count"]
    assert all(b > a for a, b in zip(counts, counts[1:]))
    assert counts[0] == pytest.approx(NU1.mass(0.1, 2.0))


def test_mecke_of_zero_functional(window_sampler):
    zero = MeckeFunctional("zero", lambda t, s, x: np.zeros(np.broadcast_shapes(np.shape(s), np.shape(x)[:-1])))
    lhs, rhs = mecke_samples(zero, window_sampler, 200, 0, "zero")
    assert np.all(lhs == 0.0) and np.all(rhs == 0.0)
