import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radoncone.errors import (
    NoAtomAt,
    NonpositiveWeight,
    NotPinpointing,
    NotSubmeasure,
    OverlappingSupports,
    PositionOccupied,
    TooManyAtoms,
)
from radoncone.functions import TestFunction
from radoncone.measures import (
    Box,
    FiniteDiscreteMeasure,
    MarkedConfiguration,
    Window,
    add_atom,
    enumerate_submeasures,
    from_configuration,
    is_submeasure,
    pairing,
    project,
    read_measures,
    remove_atom,
    subtract,
    to_configuration,
    write_measures,
)

M = FiniteDiscreteMeasure
ZERO = M.zero()


def delta(s, x):
    return M.from_atoms([(s, x)])


# pairing -------------------------------------------------------------------


def test_pairing_examples(eta_ab):
    unit = TestFunction.box_indicator(Box.unit())
    assert pairing(eta_ab, unit) == 5.0
    assert pairing(ZERO, unit) == 0.0
    assert pairing(eta_ab, TestFunction.box_indicator(Box.interval(0, 0.5))) == 2.0


def test_pairing_accepts_plain_callables(eta_ab):
    assert pairing(eta_ab, lambda x: x) == pytest.approx(2 * 0.25 + 3 * 0.75)


# add / remove --------------------------------------------------------------


def test_add_atom_examples():
    assert add_atom(ZERO, 2, 0.25) == delta(2, 0.25)
    assert add_atom(delta(2, 0.25), 3, 0.75) == M.from_atoms([(2, 0.25), (3, 0.75)])
    with pytest.raises(PositionOccupied):
        add_atom(delta(2, 0.25), 1, 0.25)


@pytest.mark.parametrize("s", [0.0, -1.0, float("nan"), float("inf")])
def test_add_atom_rejects_bad_weights(s):
    with pytest.raises(NonpositiveWeight):
        add_atom(ZERO, s, 0.5)


def test_remove_atom_examples(eta_ab):
    assert remove_atom(eta_ab, 0.25) == delta(3, 0.75)
    assert remove_atom(delta(2, 0.25), 0.25) == ZERO
    with pytest.raises(NoAtomAt):
        remove_atom(ZERO, 0.25)
    with pytest.raises(NoAtomAt):
        remove_atom(eta_ab, 0.5)


def test_constructor_never_merges_weights():
    with pytest.raises(PositionOccupied):
        M([1.0, 2.0], [0.3, 0.3])


# submeasures ---------------------------------------------------------------


def test_submeasure_examples(eta_ab):
    xi = delta(2, 0.25)
    assert is_submeasure(xi, eta_ab)
    assert subtract(eta_ab, xi) == delta(3, 0.75)
    assert not is_submeasure(delta(1, 0.25), delta(2, 0.25))
    assert is_submeasure(ZERO, eta_ab)
    assert subtract(eta_ab, ZERO) == eta_ab
    with pytest.raises(NotSubmeasure):
        subtract(delta(2, 0.25), delta(1, 0.25))


def test_disjoint_sum(eta_ab):
    assert delta(2, 0.25) + delta(3, 0.75) == eta_ab
    with pytest.raises(OverlappingSupports):
        eta_ab + delta(1, 0.75)


# windows -------------------------------------------------------------------


def test_project_examples(eta_ab):
    assert project(eta_ab, Window(Box.interval(0, 0.5), 1, 5)) == delta(2, 0.25)
    assert project(eta_ab, Window(Box.unit(), 2.5, 5)) == delta(3, 0.75)
    assert project(ZERO, Window(Box.unit(), 1, 2)) == ZERO


def test_project_is_idempotent(rng):
    eta = M(rng.uniform(0.1, 10, 15), rng.uniform(0, 1, 15))
    w = Window(Box.interval(0.2, 0.8), 1.0, 6.0)
    once = project(eta, w)
    assert project(once, w) == once
    assert is_submeasure(once, eta)


def test_window_boundaries_are_closed():
    eta = M.from_atoms([(1.0, 0.0), (5.0, 1.0)])
    assert project(eta, Window(Box.unit(), 1.0, 5.0)) == eta


# configurations -------------------------------------------------------------


def test_configuration_round_trip():
    gamma = to_configuration(delta(2, 0.25))
    assert gamma.points == ((2.0, (0.25,)),)
    assert from_configuration(gamma) == delta(2, 0.25)
    assert len(to_configuration(ZERO)) == 0
    assert from_configuration(MarkedConfiguration()) == ZERO


def test_not_pinpointing():
    with pytest.raises(NotPinpointing):
        MarkedConfiguration([(1, 0.3), (2, 0.3)])


def test_configuration_order_matches_measure(rng):
    s, x = rng.uniform(0.1, 10, 8), rng.uniform(0, 1, 8)
    eta = M(s, x)
    gamma = MarkedConfiguration(zip(s[::-1], x[::-1]))
    np.testing.assert_array_equal(gamma.marks, eta.weights)
    np.testing.assert_array_equal(gamma.positions, eta.positions)


# enumeration ---------------------------------------------------------------


def test_enumerate_examples(eta_ab):
    subs = list(enumerate_submeasures(eta_ab))
    assert len(subs) == 4
    assert set(subs) == {ZERO, delta(2, 0.25), delta(3, 0.75), eta_ab}
    assert list(enumerate_submeasures(ZERO)) == [ZERO]


def test_enumerate_cap():
    eta = M(np.ones(21), np.linspace(0, 1, 21))
    with pytest.raises(TooManyAtoms):
        enumerate_submeasures(eta)
    assert sum(1 for _ in enumerate_submeasures(M(np.ones(10), np.linspace(0, 1, 10)))) == 1024


# serialization -------------------------------------------------------------


def test_json_round_trip(tmp_path, rng):
    etas = [ZERO, M(rng.uniform(0.1, 10, 5), rng.uniform(0, 1, 5))]
    path = tmp_path / "draws.jsonl"
    assert write_measures(path, etas, {"seed": 3}) == 2
    header, back = read_measures(path)
    assert header == {"seed": 3}
    assert back == etas
    assert M.loads(etas[1].dumps()) == etas[1]


def test_two_dimensional_positions():
    eta = M([1.0, 2.0], [[0.1, 0.9], [0.5, 0.5]])
    assert eta.dim == 2
    assert eta.mass(Box.from_bounds([[0, 1], [0, 0.6]])) == 2.0
    assert remove_atom(eta, (0.1, 0.9)).total_mass == 2.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(0, 1)), max_size=8, unique_by=lambda a: a[1]))
def test_permuted_atom_lists_give_equal_measures(atoms):
    a = M.from_atoms(atoms) if atoms else ZERO
    b = M.from_atoms(atoms[::-1]) if atoms else ZERO
    assert a == b and hash(a) == hash(b)
    assert a.total_mass == pytest.approx(sum(s for s, _ in atoms))
