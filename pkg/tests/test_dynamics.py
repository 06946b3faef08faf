import numpy as np
import pytest

from gp_thermal.errors import ConfigurationError, IntegrationBlowUp
from gp_thermal.hermite import build_grid, cutoff_profile
from gp_thermal.measures import free_spec, sample_free_field
from gp_thermal.dynamics import (
    ModelParams,
    NoisePath,
    StepScheme,
    contraction_probe,
    dF1_dy,
    drift_dissipative,
    drift_eta_split,
    drift_galerkin,
    eta_dissipativity_check,
    integrate,
    integrate_shifted,
    linearized_probe,
    linearized_step,
    sample_stationary_ou,
    step,
    theta_cutoff,
    write_trajectory_csv,
)

N = 7


@pytest.fixture(scope="module")
def grid():
    return build_grid(N)


def field(seed, size=None, n=N):
    return np.asarray(sample_free_field(free_spec(n), seed, size).coeffs if size is None
                      else sample_free_field(free_spec(n), seed, size))


def test_params_validation():
    with pytest.raises(ConfigurationError):
        ModelParams(0.0, 3)
    with pytest.raises(ConfigurationError):
        ModelParams(1.0, 3, eta=-1)
    with pytest.raises(ConfigurationError):
        StepScheme("rk4")
    assert ModelParams(1.0, 3).cutoff.n_modes == 3


def test_linear_mode_is_exact(grid):
    # with the nonlinearity off and no noise each mode is a damped rotation
    p = ModelParams(1.0, N, nonlinearity_enabled=False)
    x0 = field(1)
    tr = integrate(x0, 0.5, StepScheme(dt=0.01), p, grid)
    lam2 = 2 * np.arange(N + 1) + 1
    expected = x0 * np.exp(-(1j + 1.0) * lam2 * 0.5)
    np.testing.assert_allclose(tr.states[-1], expected, atol=1e-13)


def test_zero_is_fixed_point(grid):
    p = ModelParams(1.0, N)
    tr = integrate(np.zeros(N + 1), 0.1, StepScheme(dt=0.01), p, grid)
    assert np.all(tr.states == 0)


def test_drift_shapes_and_hamiltonian_part(grid):
    p = ModelParams(1.0, N)
    x = field(2)
    g = drift_galerkin(x, p, grid)
    d = drift_dissipative(x, p, grid)
    # the Galerkin drift is (i+gamma)/gamma times the dissipative one
    np.testing.assert_allclose(g, (1j + 1.0) * d, atol=1e-12)


def test_noise_path_reproducible_and_coarsening():
    npath = NoisePath(5, 1e-3, 40, 3, chunk=7)
    a = npath.materialize()
    np.testing.assert_array_equal(a, npath.materialize())
    assert a.shape == (40, 4)
    c = npath.coarsen(4).materialize()
    np.testing.assert_allclose(c, a.reshape(10, 4, 4).sum(axis=1))
    with pytest.raises(ConfigurationError):
        npath.coarsen(3)


def test_noise_variance():
    a = NoisePath(1, 0.01, 20000, 1).materialize()
    assert abs(np.mean(a.real ** 2) / 0.01 - 1) < 0.05
    assert abs(np.mean(a.imag ** 2) / 0.01 - 1) < 0.05


def test_integrate_checks_horizon(grid):
    p = ModelParams(1.0, N)
    with pytest.raises(ConfigurationError):
        integrate(np.zeros(N + 1), 0.0105, StepScheme(dt=0.01), p, grid)
    with pytest.raises(ConfigurationError):
        integrate(np.zeros(N + 1), 0.1, StepScheme(dt=0.01), p, grid, NoisePath(0, 0.01, 5, N))


def test_blowup_reported(grid):
    p = ModelParams(1.0, N)
    x0 = np.zeros(N + 1, complex)
    x0[0] = 1e4
    with pytest.raises(IntegrationBlowUp) as err:
        integrate(x0, 0.1, StepScheme(dt=0.01), p, grid)
    assert err.value.step >= 1


def test_tamed_scheme_survives_large_data(grid):
    p = ModelParams(1.0, N)
    x0 = np.zeros(N + 1, complex)
    x0[0] = 50.0
    tr = integrate(x0, 0.1, StepScheme("tamed-exponential-euler", 0.01), p, grid)
    assert np.all(np.isfinite(tr.states))


def test_step_is_one_integrate_step(grid):
    p = ModelParams(1.0, N)
    sc = StepScheme(dt=1e-3)
    x0 = field(3)
    npath = NoisePath(9, 1e-3, 1, N)
    a = step(x0, sc, p, npath.materialize()[0], grid)
    b = integrate(x0, 1e-3, sc, p, grid, npath).states[-1]
    np.testing.assert_allclose(a, b)


def test_step_noise_free_dissipative_decays_norm(grid):
    p = ModelParams(1.0, N)
    x = field(4)
    y = step(x, StepScheme(dt=1e-3), p, None, grid, dissipative=True)
    assert np.linalg.norm(y) < np.linalg.norm(x)


def test_contraction_equal_starts(grid):
    p = ModelParams(1.0, N)
    x = field(5)
    out = contraction_probe(x, x, 0.05, StepScheme(dt=1e-3), p, NoisePath(1, 1e-3, 50, N), grid)
    assert np.all(out[:, 1] == 0)


def test_contraction_distance_decays(grid):
    p = ModelParams(1.0, N)
    y, z = field(6, 8), field(7, 8)
    npath = NoisePath(2, 1e-3, 1000, N, batch_shape=(8,))
    times, d = contraction_probe(y, z, 1.0, StepScheme(dt=1e-3), p, npath, grid, record_every=100)
    assert d.shape == (11, 8)
    # at least the linear rate of the lowest mode
    assert np.all(d[-1] <= d[0] * np.exp(-1.0 * 1.0) * 1.01)


def test_linearized_step_matches_finite_differences(grid):
    p = ModelParams(1.0, N)
    sc = StepScheme(dt=1e-2)
    y = field(8)
    h = field(9)
    eps = 1e-6
    f = lambda x: step(x, sc, p, None, grid, dissipative=True)
    fd = (f(y + eps * h) - f(y - eps * h)) / (2 * eps)
    np.testing.assert_allclose(linearized_step(h, y, sc, p, grid), fd, atol=1e-8)


def test_linearized_probe_decays(grid):
    p = ModelParams(1.0, N)
    npath = NoisePath(3, 1e-3, 500, N)
    t, sq = linearized_probe(field(10), field(11), 0.5, StepScheme(dt=1e-3), p, npath, grid, record_every=50)
    assert t[-1] == pytest.approx(0.5)
    assert sq[-1] <= sq[0] * np.exp(-2 * 0.5) * 1.01


def test_stationary_ou_variances():
    p = ModelParams(1.0, 3)
    t, z = sample_stationary_ou(0.2, 0.01, p, rng=0, size=20000, record_every=20)
    assert z.shape == (2, 20000, 4)
    var = np.mean(np.abs(z[-1]) ** 2, axis=0)
    np.testing.assert_allclose(var, free_spec(3).variances, rtol=0.05)


def test_energy_inequality_holds(grid):
    p = ModelParams(1.0, N)
    sc = StepScheme(dt=1e-3)
    _, z = sample_stationary_ou(0.2, 1e-3, p, rng=1)
    tr, rep = integrate_shifted(field(12), z, 0.2, sc, p, grid)
    assert rep.n_flagged == 0
    assert rep.excess.shape == (200,)
    with pytest.raises(ConfigurationError):
        integrate_shifted(field(12), z[:10], 0.2, sc, p, grid)


def test_theta_and_convexity():
    eta = 5.0
    x = np.array([0.0, np.sqrt(1.5 * eta), np.sqrt(1.75 * eta), np.sqrt(2 * eta), 10.0])
    th = theta_cutoff(x, eta)
    assert th[0] == th[1] == 0.0 and th[3] == th[4] == 1.0
    assert 0 < th[2] < 1
    ys = np.linspace(0, 3 * eta, 301)
    for xi in np.linspace(-5, 5, 21):
        assert np.all(np.diff(dF1_dy(xi, ys, eta)) >= -1e-15)


def test_eta_split_dissipativity():
    n, eta = 15, 5.0
    g = build_grid(n)
    p = ModelParams(1.0, n, eta=eta)
    w, z = 3 * field(13, 200, n), 3 * field(14, 200, n)
    assert np.all(eta_dissipativity_check(w, z, p, g) <= 1e-9)
    with pytest.raises(ConfigurationError):
        drift_eta_split(w[0], ModelParams(1.0, n), g)


def test_trajectory_csv(tmp_path, grid):
    p = ModelParams(1.0, N)
    tr = integrate(field(15), 0.002, StepScheme(dt=1e-3), p, grid, NoisePath(0, 1e-3, 2, N))
    path = tmp_path / "tr.csv"
    write_trajectory_csv(path, tr)
    lines = path.read_text().splitlines()
    assert lines[0] == "# gamma=1.0" and "t,n,re_c,im_c" in lines
    assert len(lines) == 6 + 1 + 3 * (N + 1)
