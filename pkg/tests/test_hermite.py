import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gp_thermal.errors import ConfigurationError, ModeMismatchError
from gp_thermal.hermite import (
    SpectralField,
    analyze,
    apply_fractional_power,
    apply_smooth_cutoff,
    build_grid,
    cutoff_profile,
    eigenvalue_sq,
    hermite_functions,
    lp_norm,
    project,
    smooth_bump,
    synthesize,
)

H0_L4_FOURTH = 1.0 / np.sqrt(2.0 * np.pi)


@pytest.mark.parametrize("n, expected", [(0, 1), (1, 3), (10, 21)])
def test_eigenvalue_sq(n, expected):
    assert eigenvalue_sq(n) == expected


def test_eigenvalue_sq_rejects_negative():
    with pytest.raises(ValueError):
        eigenvalue_sq(-1)


def test_hermite_functions_match_closed_forms():
    x = np.linspace(-3, 3, 13)
    h = hermite_functions(2, x)
    g = np.pi ** -0.25 * np.exp(-x * x / 2)
    np.testing.assert_allclose(h[0], g, atol=1e-15)
    np.testing.assert_allclose(h[1], np.sqrt(2) * x * g, atol=1e-15)
    np.testing.assert_allclose(h[2], (2 * x * x - 1) / np.sqrt(2) * g, atol=1e-15)


def test_recurrence_stays_finite_at_high_order():
    h = hermite_functions(400, np.linspace(-40, 40, 101))
    assert np.all(np.isfinite(h))
    assert np.abs(h).max() < 1.0


@pytest.mark.parametrize("n, m", [(4, 10), (0, 2), (15, 32), (31, 66), (63, 128)])
def test_gram_is_identity(n, m):
    g = build_grid(n, m)
    assert np.abs(g.gram() - np.eye(n + 1)).max() <= 1e-10


def test_h0_normalized_on_smallest_grid():
    g = build_grid(0, 2)
    assert abs(np.sum(g.weights * g.basis_values[0] ** 2) - 1.0) < 1e-14


def test_build_grid_rejects_small_quad_size():
    with pytest.raises(ConfigurationError):
        build_grid(15, 20)


def test_build_grid_default_size():
    assert build_grid(7).quad_size == 16


def test_grid_arrays_are_read_only():
    g = build_grid(3)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0


def test_l4_decay_exponent():
    # |h_n|_{L^4} ~ lambda_n^{-1/6}
    g = build_grid(31, 66)
    ns = np.arange(8, 32)
    basis = g.quartic.basis
    l4 = (basis[ns] ** 4 @ g.quartic.weights) ** 0.25
    slope = np.polyfit(np.log(np.sqrt(2 * ns + 1.0)), np.log(l4), 1)[0]
    assert abs(slope + 1 / 6) <= 0.05


def test_synthesize_single_mode_and_zero(grid15):
    e0 = SpectralField.basis(0, 15)
    np.testing.assert_allclose(synthesize(e0, grid15), grid15.basis_values[0])
    assert np.all(synthesize(SpectralField.zeros(15), grid15) == 0)


def test_synthesize_mode_mismatch():
    g = build_grid(3)
    with pytest.raises(ModeMismatchError):
        synthesize(SpectralField.zeros(5), g)


def test_analyze_basis_rows(grid15):
    c = analyze(grid15.basis_values[1], grid15)
    expected = np.zeros(16)
    expected[1] = 1
    np.testing.assert_allclose(c.coeffs, expected, atol=1e-12)
    c2 = analyze(grid15.basis_values[0] + grid15.basis_values[2], grid15)
    expected = np.zeros(16)
    expected[[0, 2]] = 1
    np.testing.assert_allclose(c2.coeffs, expected, atol=1e-12)


def test_analyze_length_mismatch(grid15):
    with pytest.raises(ModeMismatchError):
        analyze(np.zeros(5), grid15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40), st.integers(0, 2 ** 31))
def test_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    g = build_grid(n)
    c = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    back = analyze(synthesize(c, g), g)
    assert np.abs(back.coeffs - c).max() <= 1e-10 * max(1.0, np.abs(c).max())


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2 ** 31))
def test_inner_product_exactness(n, seed):
    rng = np.random.default_rng(seed)
    g = build_grid(n)
    c = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    d = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    quad = np.sum(g.weights * synthesize(c, g) * np.conj(synthesize(d, g)))
    assert abs(quad - np.sum(c * np.conj(d))) <= 1e-10 * np.linalg.norm(c) * np.linalg.norm(d)


@pytest.mark.parametrize("n", [4, 10, 20])
def test_quartic_integral_invariant_under_refinement(n):
    rng = np.random.default_rng(n)
    c = np.zeros(n + 1, complex)
    c[: n // 2 + 1] = rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1)
    g1, g2 = build_grid(n), build_grid(n, 2 * (2 * n + 2))
    q1 = np.abs(synthesize(c, g1, "quartic")) ** 4 @ g1.quartic.weights
    q2 = np.abs(synthesize(c, g2, "quartic")) ** 4 @ g2.quartic.weights
    assert abs(q1 / q2 - 1) <= 1e-9


def test_quartic_of_h0_closed_form():
    g = build_grid(3)
    assert abs(g.quartic.basis[0] ** 4 @ g.quartic.weights - H0_L4_FOURTH) < 1e-14


def test_smooth_bump_profile():
    t = np.array([0.0, 0.3, 0.5, 0.75, 0.99, 1.0, 1.5])
    b = smooth_bump(t)
    assert b[0] == b[1] == b[2] == 1.0
    assert 0 < b[3] < 1 and 0 < b[4] < 1e-3
    assert b[5] == b[6] == 0.0
    assert np.all(np.diff(smooth_bump(np.linspace(0, 1.2, 500))) <= 0)


def test_cutoff_flat_region_and_support():
    n = 31
    prof = cutoff_profile(n)
    ratio = (2 * np.arange(n + 1) + 1) / (2 * n + 1)
    assert np.all(prof.values[ratio <= 0.5] == 1.0)
    assert np.all(prof.values[ratio >= 1.0] == 0.0)
    assert np.all(np.diff(prof.values) <= 0)
    u = SpectralField(np.arange(n + 1) + 1j)
    out = apply_smooth_cutoff(u, prof)
    np.testing.assert_array_equal(out.coeffs[ratio <= 0.5], u.coeffs[ratio <= 0.5])
    assert out.coeffs[-1] == 0


def test_cutoff_idempotent_on_flat_support():
    n = 15
    prof = cutoff_profile(n)
    c = np.where(np.isin(prof.values, (0.0, 1.0)), 1.0 + 2j, 0.0)
    once = apply_smooth_cutoff(c, prof)
    np.testing.assert_array_equal(apply_smooth_cutoff(once, prof), once)


def test_cutoff_accepts_custom_profile():
    prof = cutoff_profile(7, chi=lambda t: np.where(np.abs(t) < 1, 1.0, 0.0))
    assert np.all(prof.values[:-1] == 1.0)
    assert prof.values[-1] == 0.0


def test_cutoff_length_mismatch():
    with pytest.raises(ModeMismatchError):
        apply_smooth_cutoff(SpectralField.zeros(3), cutoff_profile(5))


def test_cutoff_lp_bounded_uniformly_in_n(random_field):
    g = build_grid(63)
    u = random_field(63, seed=3, size=200)
    q = lp_norm(u, 4, g)
    consts = []
    for n in (15, 31, 63):
        s = np.zeros(64)
        s[: n + 1] = cutoff_profile(n).values
        consts.append(np.max(lp_norm(u * s, 4, g) / q))
    assert max(consts) < 2.0


def test_fractional_power():
    u = SpectralField(np.array([1.0, 2.0, 3.0 + 1j]))
    np.testing.assert_array_equal(apply_fractional_power(u, 0).coeffs, u.coeffs)
    e0 = SpectralField.basis(0, 4)
    np.testing.assert_array_equal(apply_fractional_power(e0, 2).coeffs, e0.coeffs)
    back = apply_fractional_power(apply_fractional_power(u, 1), -1)
    np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-12)
    np.testing.assert_allclose(apply_fractional_power(u, 2).coeffs, u.coeffs * [1, 3, 5])


def test_project_is_sharp():
    c = np.ones(6, complex)
    np.testing.assert_array_equal(project(c, 2), [1, 1, 1, 0, 0, 0])


def test_spectral_field_validation():
    with pytest.raises(ValueError):
        SpectralField([1.0, np.nan])
    with pytest.raises(ValueError):
        SpectralField(np.zeros((2, 2)))
    f = SpectralField([1, 2])
    assert f.n_modes == 1
    with pytest.raises(ValueError):
        f.coeffs[0] = 3


def test_lp_norm_closed_forms():
    g = build_grid(4)
    e0 = np.zeros(5, complex)
    e0[0] = 1.0
    assert abs(lp_norm(e0, 2, g) - 1.0) < 1e-15
    c = 1.7 - 0.4j
    assert abs(lp_norm(c * e0, 4, g) - abs(c) * (2 * np.pi) ** -0.125) < 1e-13
    assert abs(lp_norm(e0, np.inf) - np.pi ** -0.25) < 1e-4


def test_lp_norm_p3_refinement(random_field):
    g = build_grid(31)
    u = random_field(31, seed=5)
    a = lp_norm(u, 3, g)
    b = lp_norm(u, 3, g, quad_size=2 * 4000)
    assert abs(a / b - 1) < 1e-6


def test_lp_norm_rejects_small_exponent(grid15):
    with pytest.raises(ValueError):
        lp_norm(np.zeros(16), 0.5, grid15)
