
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randlyap.noise import (
    BoxIndexDist,
    DoublingLaw,
    RngStream,
    UniformCubeNoise,
    draw_uniform_pair,
    draw_uniform_pairs,
    mean_index,
    parse_seed,
    sample_box_index,
    spawn_stream,
)

from philox_ref import word


def test_words_match_reference_philox():
    s = RngStream(12345, 7)
    got = [int(x) for x in s.raw(10)]
    assert got == [word(12345, 7, c) for c in range(10)]
    assert s.counter == 10


@given(seed=st.integers(0, 2**64 - 1), tid=st.integers(0, 2**32), c=st.integers(0, 5000))
@settings(max_examples=40, deadline=None)
def test_word_is_function_of_seed_id_counter(seed, tid, c):
    s = RngStream(seed, tid, counter=c)
    assert s.counter == c
    assert int(s.raw(1)[0]) == word(seed, tid, c)


def test_frozen_first_doubles():
    # frozen from the reference Philox: (word >> 11) * 2^-53
    u = RngStream(12345, 7).uniform01(2)
    assert u.tolist() == [(word(12345, 7, 0) >> 11) * 2.0**-53, (word(12345, 7, 1) >> 11) * 2.0**-53]
    assert u[0] == 0.04075621842612909


def test_counter_skip_equals_sequential():
    full = RngStream(99).raw(13)
    for c in range(13):
        assert np.array_equal(RngStream(99, counter=c).raw(13 - c), full[c:])


def test_clone_forks_independently():
    a = RngStream(5)
    a.raw(3)
    b = a.clone()
    x = a.raw(4)
    y = b.raw(4)
    assert np.array_equal(x, y)
    assert a.counter == b.counter == 7


def test_uniform_pair_moments_and_range():
    s = RngStream(2024)
    d = draw_uniform_pairs(s, 10**6)
    assert s.counter == 2 * 10**6
    assert np.all(np.abs(d) <= 1.0)
    assert np.all(np.abs(d.mean(axis=0)) < 0.005)
    assert np.all(np.abs(d.var(axis=0) - 1.0 / 3.0) < 0.01)


def test_pair_equals_batched_pairs():
    s1, s2 = RngStream(8), RngStream(8)
    singles = [draw_uniform_pair(s1) for _ in range(5)]
    assert np.array_equal(np.array(singles), draw_uniform_pairs(s2, 5))
    assert s1.counter == s2.counter == 10


def test_cube_noise():
    with pytest.raises(ValueError):
        UniformCubeNoise(-1e-3)
    n = UniformCubeNoise(0.0, 3)
    assert n.draw(RngStream(1), 4).shape == (4, 3)


def test_spawn_determinism_and_independence():
    a = spawn_stream(77, 0).symmetric(2 * 10**4)
    assert np.array_equal(a, spawn_stream(77, 0).symmetric(2 * 10**4))
    b = spawn_stream(77, 1).symmetric(2 * 10**4)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
    firsts = {int(RngStream(s).raw(1)[0]) for s in range(100)}
    assert len(firsts) == 100


def test_parse_seed():
    assert parse_seed("42") == 42
    assert parse_seed("0xff") == 255
    assert parse_seed(" 0X10 ") == 16
    assert parse_seed(2**64 - 1) == 2**64 - 1
    for bad in ("-1", str(2**64), "abc"):
        with pytest.raises(ValueError):
            parse_seed(bad)


def test_box_index_point_mass():
    d = BoxIndexDist.point_mass(4)
    assert np.all(d.sample_many(RngStream(3), 1000) == 4)
    assert mean_index(d) == 4


def test_geometric_law():
    d = BoxIndexDist.geometric(0.5, n0=2)
    assert mean_index(d) == 3.0
    x = d.sample_many(RngStream(31337), 10**6)
    assert x.min() >= 2
    assert abs(x.mean() - 3.0) < 0.01
    assert abs(np.mean(x == 2) - 0.5) < 0.005
    assert abs(np.mean(x == 3) - d.pmf(3)) < 0.005


def test_explicit_law():
    d = BoxIndexDist.explicit([0.5, 0.0, 0.5], n0=2)
    assert mean_index(d) == 3.0
    x = d.sample_many(RngStream(4), 10**5)
    assert set(np.unique(x).tolist()) == {2, 4}
    assert d.pmf(3) == 0.0 and d.pmf(1) == 0.0 and d.pmf(9) == 0.0


@pytest.mark.parametrize("kwargs", [{"q": 0.0}, {"q": 1.0}, {"weights": [0.5, 0.4]}, {"weights": [1.5, -0.5]}, {"weights": []}])
def test_invalid_laws(kwargs):
    with pytest.raises(ValueError):
        BoxIndexDist(2, **kwargs)


def test_quantile_edges():
    d = BoxIndexDist.geometric(0.5, n0=2)
    # F(2) = 0.5, F(3) = 0.75
    assert d.quantile([0.0, 0.4999999, 0.5, 0.75 - 1e-12, 0.75]).tolist() == [2, 2, 3, 3, 4]
    e = BoxIndexDist.explicit([0.25, 0.75], n0=5)
    assert e.quantile([0.0, 0.25, np.nextafter(1.0, 0.0)]).tolist() == [5, 6, 6]
    with pytest.raises(ValueError):
        d.quantile([1.0])


@given(q=st.floats(0.05, 0.95), n0=st.integers(1, 50), seed=st.integers(0, 2**63))
@settings(max_examples=30, deadline=None)
def test_geometric_samples_respect_lower_bound(q, n0, seed):
    d = BoxIndexDist.geometric(q, n0)
    s = RngStream(seed)
    assert sample_box_index(d, s) >= n0
    assert s.counter == 1


def test_doubling_law():
    d = DoublingLaw()
    s = RngStream(0)
    assert d.sample(s, 7) == 14
    assert s.counter == 1
    with pytest.raises(ValueError):
        d.sample(s)
    with pytest.raises(ValueError):
        d.mean()
