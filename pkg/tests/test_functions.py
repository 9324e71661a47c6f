import json

import numpy as np
import pytest

from radoncone.functions import MarkedTestFunction, TestFunction
from radoncone.measures import Box, Window


@pytest.mark.parametrize("f", [
    TestFunction.box_indicator(Box.interval(0.2, 0.6), 2.5),
    TestFunction.bump(Box.unit(), 0.5),
    TestFunction.piecewise_constant([0.0, 0.3, 1.0], [1.0, -0.5]),
    TestFunction.polynomial(Box.unit(), [1.0, -2.0, 0.5]),
    TestFunction.zero(),
])
def test_json_round_trip(f):
    g = TestFunction.from_json(json.loads(json.dumps(f.to_json())))
    x = np.linspace(-0.5, 1.5, 41)[:, None]
    np.testing.assert_array_equal(f(x), g(x))
    assert g.bound == f.bound


def test_compact_support_and_bound():
    f = TestFunction.bump(Box.interval(0.2, 0.8), 1.5)
    x = np.linspace(-1, 2, 301)[:, None]
    v = f(x)
    assert np.all(v[(x[:, 0] < 0.2) | (x[:, 0] > 0.8)] == 0.0)
    assert np.max(np.abs(v)) <= f.bound
    assert f(np.array([[0.5]]))[0] == pytest.approx(1.5)


def test_marked_functions():
    lin = MarkedTestFunction.linear(TestFunction.box_indicator(Box.unit()))
    assert lin(np.array([2.0]), np.array([[0.5]]))[0] == 2.0
    ind = MarkedTestFunction.indicator(Window(Box.unit(), 0.5, 2.0))
    assert ind(np.array([0.4, 1.0]), np.array([[0.5], [0.5]])).tolist() == [0.0, 1.0]
