import numpy as np
import pytest

from risssk.rng import CHANNEL, NOISE, RngStream, as_generator


def test_same_key_same_draws():
    a = RngStream(7).child(NOISE, 3, 1).generator().standard_normal(5)
    b = RngStream(7, (NOISE, 3, 1)).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_distinct_keys_distinct_draws():
    base = RngStream(7)
    a = base.child(CHANNEL, 0).generator().random(4)
    b = base.child(CHANNEL, 1).generator().random(4)
    c = RngStream(8).child(CHANNEL, 0).generator().random(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_independent_of_call_order():
    s = RngStream(1)
    first = s.child(2).generator().random(3)
    s.child(5).generator().random(100)
    np.testing.assert_array_equal(first, s.child(2).generator().random(3))


def test_as_generator_inputs():
    gen = np.random.default_rng(0)
    assert as_generator(gen) is gen
    np.testing.assert_array_equal(as_generator(3).random(2), RngStream(3).generator().random(2))


def test_seed_range():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2 ** 64)
    RngStream(2 ** 64 - 1)
