import numpy as np

from gp_thermal.rng import as_generator, complex_normal, stream


def test_streams_are_keyed_and_reproducible():
    a = stream(1, 2, 3).normal(size=5)
    np.testing.assert_array_equal(a, stream(1, 2, 3).normal(size=5))
    assert not np.array_equal(a, stream(1, 2, 4).normal(size=5))
    assert not np.array_equal(a, stream(2, 2, 3).normal(size=5))


def test_as_generator_passthrough():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    np.testing.assert_array_equal(as_generator(7).normal(size=3), stream(7).normal(size=3))


def test_complex_normal_variance():
    z = complex_normal(stream(0), (200000, 2), np.array([2.0, 0.5]))
    np.testing.assert_allclose(np.mean(np.abs(z) ** 2, axis=0), [2.0, 0.5], rtol=0.02)
    assert abs(np.mean(z[:, 0] ** 2)) < 0.03
