
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radoncone.errors import DuplicatePoint, NoAtomAt, PositionOccupied, TooManyAtoms
from radoncone.functions import TestFunction
from radoncone.measures import Box, FiniteDiscreteMeasure, MarkedConfiguration
from radoncone.polynomials import (
    SymmetricTestFunction,
    binomial_check,
    cross_representation,
    falling_factorial_pairing,
    generating_function_check,
    gradient_checks,
    lowering_check,
    p_n_pairing,
    p_n_pairing_ordered,
    pairing_bound,
    polynomial_birth_gradient,
    polynomial_death_gradient,
)

UNIT = Box.unit()
ONE = TestFunction.box_indicator(UNIT)
ZERO_F = TestFunction.zero()
M = FiniteDiscreteMeasure


def fhat_from(values: dict):
    """Marked function taking prescribed values at given positions."""
    def fhat(s, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.array([values[float(p)] for p in x])
    return fhat


def test_pairing_examples(eta_ab):
    assert p_n_pairing(eta_ab, ONE, 2) == 12.0
    assert p_n_pairing(eta_ab, ONE, 1) == 5.0
    assert p_n_pairing(eta_ab, ONE, 3) == 0.0
    assert p_n_pairing(eta_ab, ONE, 0) == 1.0


def test_symmetric_kernel_pairing(eta_ab):
    assert p_n_pairing(eta_ab, SymmetricTestFunction.product(ONE, 2), 2) == pytest.approx(12.0)
    kern = SymmetricTestFunction.symmetrized(lambda p: p[..., 0, 0], 2, 1.0)
    # 2! * s_a s_b * (a + b) / 2 = 6
    assert p_n_pairing(eta_ab, kern, 2) == pytest.approx(6.0)


def test_falling_factorial_examples():
    gamma = MarkedConfiguration([(1.0, 0.1), (1.0, 0.2)])
    fhat = fhat_from({0.1: 2.0, 0.2: 3.0})
    assert falling_factorial_pairing(gamma, fhat, 2) == pytest.approx(12.0)
    assert falling_factorial_pairing(gamma, fhat, 0) == 1.0


def test_cross_representation_exact(eta_ab):
    lhs, rhs = cross_representation(eta_ab, ONE, 2)
    assert lhs == rhs == 12.0


def test_binomial_examples():
    a, b = M.from_atoms([(2.0, 0.25)]), M.from_atoms([(3.0, 0.75)])
    lhs, rhs, _ = binomial_check(a, b, ONE, 2)
    assert lhs == rhs == 12.0
    assert binomial_check(a, b, ONE, 0)[:2] == (1.0, 1.0)
    lhs, rhs, _ = binomial_check(a, M.zero(), ONE, 1)
    assert lhs == rhs == 2.0


def test_lowering_examples():
    gamma = MarkedConfiguration([(1.0, 0.1)])
    fhat = fhat_from({0.1: 2.0, 0.9: 3.0})
    lhs, rhs, _ = lowering_check(gamma, (1.0, 0.9), fhat, 2)
    assert lhs == pytest.approx(12.0) and rhs == pytest.approx(12.0)
    lhs, rhs, _ = lowering_check(gamma, (1.0, 0.9), fhat, 1)
    assert lhs == pytest.approx(3.0) and rhs == pytest.approx(3.0)
    zero = fhat_from({0.1: 2.0, 0.9: 0.0})
    assert lowering_check(gamma, (1.0, 0.9), zero, 2)[:2] == (0.0, 0.0)
    with pytest.raises(DuplicatePoint):
        lowering_check(gamma, (1.0, 0.1), fhat, 2)


def test_generating_function_examples(eta_ab):
    series, product, _ = generating_function_check(eta_ab, ONE)
    assert series == product == 12.0
    assert generating_function_check(M.zero(), ONE)[:2] == (1.0, 1.0)
    assert generating_function_check(eta_ab, ZERO_F)[:2] == (1.0, 1.0)
    with pytest.raises(ValueError):
        generating_function_check(eta_ab, ONE, N=1)


def test_gradient_examples(eta_ab):
    assert polynomial_birth_gradient(eta_ab, 1.0, 0.5, ONE, 2) == 10.0
    assert p_n_pairing(M.from_atoms([(2, 0.25), (3, 0.75), (1, 0.5)]), ONE, 2) == 22.0
    assert polynomial_death_gradient(eta_ab, 0.25, ONE, 2) == -12.0
    assert polynomial_birth_gradient(eta_ab, 1.5, 0.5, ONE, 1) == 1.5
    (b_formula, b_direct, _), (d_formula, d_direct, _) = gradient_checks(eta_ab, 1.0, 0.5, 0.25, ONE, 2)
    assert (b_formula, b_direct, d_formula, d_direct) == (10.0, 10.0, -12.0, -12.0)
    with pytest.raises(PositionOccupied):
        polynomial_birth_gradient(eta_ab, 1.0, 0.25, ONE, 2)
    with pytest.raises(NoAtomAt):
        polynomial_death_gradient(eta_ab, 0.5, ONE, 2)


def test_cap():
    eta = M(np.ones(21), np.linspace(0, 1, 21))
    kern = SymmetricTestFunction.symmetrized(lambda p: p[..., 0, 0], 2, 1.0)
    with pytest.raises(TooManyAtoms):
        p_n_pairing(eta, kern, 2)


def test_tabulated_kernel_symmetry(rng):
    table = rng.uniform(-1, 1, (4, 4, 4))
    kern = SymmetricTestFunction.tabulated(np.linspace(0, 1, 5), table)
    pts = rng.uniform(0, 1, (50, 3, 1))
    assert kern.symmetry_defect(pts, rng) <= 1e-15
    # zero outside the cells
    assert kern(np.array([[[1.5], [0.2], [0.3]]]))[0] == 0.0


def test_rank_one_table_matches_product(rng, eta_ab):
    v = np.array([1.0, 0.5])
    kern = SymmetricTestFunction.tabulated([0.0, 0.5, 1.0], np.multiply.outer(v, v))
    f = TestFunction.piecewise_constant([0.0, 0.5, 1.0], v)
    assert p_n_pairing(eta_ab, kern, 2) == pytest.approx(p_n_pairing(eta_ab, f, 2), rel=1e-14)


def random_instance(rng, m):
    eta = M(rng.uniform(0.1, 10, m), rng.uniform(0, 1, m))
    edges = np.r_[0.0, np.sort(rng.uniform(0, 1, 4)), 1.0]
    return eta, TestFunction.piecewise_constant(edges, rng.uniform(-2, 2, 5))


@pytest.mark.parametrize("n", range(4))
def test_subset_sum_matches_ordered_oracle(backend, rng, n):
    for _ in range(10):
        eta, f = random_instance(rng, int(rng.integers(0, 7)))
        assert p_n_pairing(eta, f, n) == pytest.approx(p_n_pairing_ordered(eta, f, n), rel=1e-10, abs=1e-12)


# positions on a grid so that shifted copies stay distinct
atoms = st.lists(st.tuples(st.floats(0.1, 10), st.integers(0, 1000).map(lambda k: k / 1000)),
                 max_size=8, unique_by=lambda a: a[1])
coeffs = st.lists(st.floats(-2, 2), min_size=3, max_size=3)


def _f(c):
    return TestFunction.piecewise_constant([0.0, 0.3, 0.7, 1.0], c)


@settings(max_examples=50, deadline=None)
@given(atoms, atoms, coeffs, st.integers(0, 5))
def test_binomial_property(a1, a2, c, n):
    eta = M.from_atoms(a1) if a1 else M.zero()
    other = [(s, x + 2.0) for s, x in a2]  # shifted so supports stay disjoint
    eta2 = M.from_atoms(other) if other else M.zero()
    f = TestFunction.piecewise_constant([0.0, 0.3, 0.7, 1.0, 3.0], c + [0.5])
    lhs, rhs, scale = binomial_check(eta, eta2, f, n)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), scale)


@settings(max_examples=50, deadline=None)
@given(atoms, coeffs, st.integers(0, 5), st.randoms(use_true_random=False))
def test_permutation_invariance_and_bound(a, c, n, r):
    f = _f(c)
    eta = M.from_atoms(a) if a else M.zero()
    shuffled = list(a)
    r.shuffle(shuffled)
    eta2 = M.from_atoms(shuffled) if shuffled else M.zero()
    assert p_n_pairing(eta, f, n) == p_n_pairing(eta2, f, n)
    value, bound = pairing_bound(eta, f, n)
    assert value <= bound * (1 + 1e-12) + 1e-300
    if n > len(a):
        assert p_n_pairing(eta, f, n) == 0.0


@settings(max_examples=60, deadline=None)
@given(atoms, coeffs)
def test_generating_function_property(a, c):
    eta = M.from_atoms(a) if a else M.zero()
    series, product, scale = generating_function_check(eta, _f(c))
    assert abs(series - product) <= 1e-10 * max(abs(series), abs(product), scale)
    lhs, rhs = cross_representation(eta, _f(c), min(len(a), 4))
    assert lhs == rhs
