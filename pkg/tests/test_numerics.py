import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from vofdm.numerics import RngStream, dft, gaussian_pair, idft, q_function

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def complex_vectors(max_len=64):
    return st.integers(1, max_len).flatmap(
        lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite))
    ).map(lambda t: t[0] + 1j * t[1])


class TestDft:
    def test_length_one_is_identity(self):
        np.testing.assert_allclose(dft([1 + 0j], inverse=True), [1 + 0j])

    def test_constant_maps_to_scaled_impulse(self):
        np.testing.assert_allclose(dft([1, 1, 1, 1], inverse=True), [2, 0, 0, 0], atol=1e-15)

    def test_roundtrip_length_8(self, rng):
        x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert np.max(np.abs(dft(idft(x)) - x)) < 1e-10

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="zero-length transform"):
            dft([])

    def test_inverse_kernel_sign(self):
        # q=1 sample of the inverse is sum_l x_l exp(+j 2 pi l / L) / sqrt(L)
        x = np.array([0, 1, 0, 0], dtype=complex)
        out = idft(x)
        np.testing.assert_allclose(out, np.exp(2j * np.pi * np.arange(4) / 4) / 2, atol=1e-15)

    @pytest.mark.parametrize("n", [3, 5, 6, 12, 100])
    def test_non_power_of_two_matches_direct_sum(self, rng, n):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        k = np.arange(n)
        expected = np.array([np.sum(x * np.exp(-2j * np.pi * q * k / n)) for q in k]) / math.sqrt(n)
        np.testing.assert_allclose(dft(x), expected, atol=1e-12)
        np.testing.assert_allclose(idft(dft(x)), x, atol=1e-12)

    def test_axis_argument(self, rng):
        x = rng.standard_normal((3, 8)) + 0j
        np.testing.assert_allclose(dft(x, axis=0), dft(x.T).T)

    @settings(max_examples=60, deadline=None)
    @given(complex_vectors())
    def test_parseval(self, x):
        norm = np.linalg.norm(x)
        for inverse in (False, True):
            y = dft(x, inverse=inverse)
            assert abs(np.linalg.norm(y) - norm) <= 1e-10 * max(norm, 1e-300)

    @settings(max_examples=60, deadline=None)
    @given(complex_vectors())
    def test_roundtrip_property(self, x):
        scale = max(np.max(np.abs(x)), 1e-300)
        assert np.max(np.abs(dft(idft(x)) - x)) <= 1e-10 * scale


class TestQFunction:
    def test_zero(self):
        assert q_function(0.0) == 0.5

    def test_far_tail(self):
        assert q_function(10.0) < 1e-20

    def test_one_matches_quadrature(self):
        # oracle: integrate the standard normal density over [1, inf)
        tail, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), 1.0, math.inf)
        assert round(tail, 6) == 0.158655
        assert q_function(1.0) == pytest.approx(tail, abs=1e-12)

    @given(st.floats(-30, 30))
    def test_bracket_and_symmetry(self, x):
        q = q_function(x)
        assert 0.0 <= q <= 1.0
        assert abs(q_function(-x) - (1 - q)) < 1e-12

    def test_monotone(self):
        xs = np.linspace(-8, 8, 1001)
        assert np.all(np.diff(q_function(xs)) <= 0)


class TestRng:
    def test_zero_variance(self, stream):
        assert gaussian_pair(stream, 0.0) == 0
        assert np.all(gaussian_pair(stream, 0.0, size=100) == 0)

    def test_negative_variance(self, stream):
        with pytest.raises(ValueError):
            gaussian_pair(stream, -1.0)

    def test_moments(self):
        z = gaussian_pair(RngStream(7, 1), 1.0, size=1_000_000)
        assert abs(z.mean()) < 0.01
        assert z.real.var() == pytest.approx(1.0, rel=0.01)
        assert z.imag.var() == pytest.approx(1.0, rel=0.01)
        assert abs(np.corrcoef(z.real, z.imag)[0, 1]) < 0.01

    def test_same_stream_same_draws(self):
        a = gaussian_pair(RngStream(5, 3), 2.0, size=50)
        b = gaussian_pair(RngStream(5, 3), 2.0, size=50)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = gaussian_pair(RngStream(5, 3), 1.0, size=10_000)
        b = gaussian_pair(RngStream(5, 4), 1.0, size=10_000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a.real, b.real)[0, 1]) < 0.05

    def test_child_streams_are_stable(self):
        s = RngStream(9, 0)
        assert s.child(1, 2) == s.child(1, 2)
        assert s.child(1, 2) != s.child(2, 1)
