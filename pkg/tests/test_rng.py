import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakmeas.rng import RandomSource, stream_block


def test_same_seed_same_draws():
    a = RandomSource(7, 3).pairs(100)
    b = RandomSource(7, 3).pairs(100)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_bulk_equals_one_at_a_time():
    bulk_u, bulk_z = RandomSource(11, 2).pairs(50)
    src = RandomSource(11, 2)
    single = [src.pair() for _ in range(50)]
    assert np.array_equal(bulk_u, [p[0] for p in single])
    assert np.array_equal(bulk_z, [p[1] for p in single])


def test_streams_differ():
    u0, z0 = RandomSource(1, 0).pairs(10)
    u1, z1 = RandomSource(1, 1).pairs(10)
    u2, _ = RandomSource(2, 0).pairs(10)
    assert not np.array_equal(u0, u1)
    assert not np.array_equal(z0, z1)
    assert not np.array_equal(u0, u2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 63), st.integers(0, 500), st.integers(1, 5), st.integers(1, 40))
def test_stream_block_matches_sources(seed, start, count, steps):
    u, z = stream_block(seed, start, start + count, steps)
    for row, k in enumerate(range(start, start + count)):
        ru, rz = RandomSource(seed, k).pairs(steps)
        assert np.array_equal(u[row], ru)
        assert np.array_equal(z[row], rz)


def test_seed_range_checked():
    with pytest.raises(ValueError):
        RandomSource(-1)
    with pytest.raises(ValueError):
        RandomSource(2 ** 64)


def test_distribution_moments():
    u, z = RandomSource(5).pairs(200_000)
    assert 0 <= u.min() and u.max() < 1
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / len(u))
    assert abs(z.mean()) < 4 / np.sqrt(len(z))
    assert abs(z.var() - 1) < 4 * np.sqrt(2 / len(z))
