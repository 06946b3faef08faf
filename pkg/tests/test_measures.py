import numpy as np
import pytest

from gp_thermal.errors import ConfigurationError, DegenerateWeightsError
from gp_thermal.hermite import build_grid, cutoff_profile, lp_norm
from gp_thermal.measures import (
    GaussianSpec,
    PotentialSpec,
    build_eta_spec,
    eta_sandwich_constant,
    free_spec,
    importance_estimate,
    init_chain,
    integrated_autocorr_time,
    n0_for_eta,
    pcn_step,
    potential_V,
    quartic_spec,
    read_samples_csv,
    sample_free_field,
    sample_gibbs,
    tilde_potential,
    write_samples_csv,
)


def test_free_field_second_moments():
    c = sample_free_field(free_spec(7), 1, 100_000)
    a = np.abs(c) ** 2
    se = a.std(axis=0) / np.sqrt(len(a))
    assert abs(a[:, 0].mean() - 2.0) <= 3 * se[0]
    assert abs(a[:, 4].mean() - 2.0 / 9.0) <= 3 * se[4]
    cross = c[:, 0] * np.conj(c[:, 1])
    assert abs(cross.real.mean()) <= 3 * cross.real.std() / np.sqrt(len(c))
    re = c[:, 0].real
    assert abs(re.var() - 1.0) < 0.02


def test_free_field_single_draw_is_field():
    f = sample_free_field(free_spec(3), 0)
    assert f.n_modes == 3


def test_gaussian_spec_rejects_nonpositive():
    with pytest.raises(ConfigurationError):
        GaussianSpec([1.0, 0.0])


@pytest.mark.parametrize("eta, n0", [(0.0, -1), (0.5, -1), (1.0, 0), (2.0, 0), (3.0, 1), (5.0, 2), (10.0, 4)])
def test_n0_rule(eta, n0):
    assert n0_for_eta(eta) == n0
    if n0 >= 0:
        assert 2 * n0 + 1 <= eta < 2 * n0 + 3


def test_eta_zero_reduces_to_free_spec():
    gs, pot = build_eta_spec(0.0, 15)
    np.testing.assert_array_equal(gs.variances, free_spec(15).variances)
    assert pot.kind == "quartic-only"


def test_eta_spec_variances_positive():
    gs, pot = build_eta_spec(5.0, 15)
    assert pot.n0 == 2 and pot.kind == "eta-split"
    assert np.all(gs.variances > 0) and np.all(np.isfinite(gs.variances))
    # low modes keep the free variance, the cutoff band is widened
    np.testing.assert_allclose(gs.variances[:3], [2, 2 / 3, 2 / 5])


def test_eta_spec_needs_enough_modes():
    with pytest.raises(ConfigurationError):
        build_eta_spec(10.0, 8)


def test_potential_spec_consistency():
    with pytest.raises(ConfigurationError):
        PotentialSpec("quartic-only", 1.0, 0, cutoff_profile(3))
    with pytest.raises(ConfigurationError):
        PotentialSpec("eta-split", 5.0, 1, cutoff_profile(15))


def test_potential_zero_field_and_single_mode():
    g = build_grid(7)
    _, pot = quartic_spec(7)
    assert potential_V(np.zeros(8), pot, g) == 0.0
    c = 1.3 + 0.2j
    u = np.zeros(8, complex)
    u[0] = c
    assert abs(potential_V(u, pot, g) - 0.25 * abs(c) ** 4 / np.sqrt(2 * np.pi)) < 1e-13


@pytest.mark.parametrize("eta", [2.0, 5.0])
def test_eta_sandwich(eta):
    n = 31
    g = build_grid(n)
    gs, pot = build_eta_spec(eta, n)
    u = sample_free_field(gs, 4, 2000) * 1.5
    c_const = eta_sandwich_constant(eta, pot.n0)
    v = tilde_potential(u, eta, pot.n0, g)
    q = np.asarray(lp_norm(u, 4, g)) ** 4
    assert np.all(0.25 * q >= v - 1e-12)
    assert np.all(v >= 0.125 * q - c_const)
    small = 0.05 * u
    vs = tilde_potential(small, eta, pot.n0, g)
    qs = np.asarray(lp_norm(small, 4, g)) ** 4
    assert np.all(vs >= 0.125 * qs - c_const)


def test_two_eta_factorizations_agree_pointwise_up_to_constant():
    # log densities against Lebesgue differ only by a constant
    n, eta = 15, 5.0
    g = build_grid(n)
    g1, p1 = build_eta_spec(eta, n)
    g2, p2 = build_eta_spec(eta, n, reference="mu")
    u = sample_free_field(g1, 2, 50)

    def logdens(gs, pot):
        return -np.sum(np.abs(u) ** 2 / gs.variances, axis=-1) - potential_V(u, pot, g)

    d = logdens(g1, p1) - logdens(g2, p2)
    assert np.ptp(d) < 1e-9


def test_importance_zero_potential_gives_gamma_one():
    gs = free_spec(3)
    pot = PotentialSpec("zero", 0.0, -1, cutoff_profile(3))
    est = importance_estimate(gs, pot, build_grid(3), 1000, lambda c: np.abs(c[:, 0]) ** 2, rng=1)
    assert est.gamma == 1.0 and est.gamma_se == 0.0
    assert est.ess == pytest.approx(1000)


def test_importance_degenerate_weights():
    gs = GaussianSpec(np.full(4, 400.0))
    _, pot = quartic_spec(3)
    with pytest.raises(DegenerateWeightsError):
        importance_estimate(gs, pot, build_grid(3), 200, rng=0)


def test_pcn_zero_potential_always_accepts_and_keeps_law():
    n = 5
    gs = free_spec(n)
    g = build_grid(n)
    pot = PotentialSpec("zero", 0.0, -1, cutoff_profile(n))
    ch = init_chain(gs, 3, n_chains=4000, beta=0.3)
    for _ in range(30):
        ch = pcn_step(ch, gs, pot, g)
    assert ch.acceptance_rate == 1.0
    a = np.abs(ch.current) ** 2
    se = a.std(axis=0) / np.sqrt(len(a))
    assert np.all(np.abs(a.mean(axis=0) - gs.variances) <= 3 * se)


def test_pcn_rejects_bad_beta():
    n = 3
    gs, pot = quartic_spec(n)
    ch = init_chain(gs, 0, beta=1.5)
    with pytest.raises(ConfigurationError):
        pcn_step(ch, gs, pot, build_grid(n))


def test_independence_sampler_acceptance_matches_weights():
    n = 3
    g = build_grid(n)
    gs, pot = quartic_spec(n)
    ch = init_chain(gs, 7, n_chains=2000, beta=1.0)
    for _ in range(200):
        ch = pcn_step(ch, gs, pot, g)
    # stationary acceptance of the independence sampler: E[min(1, w'/w)]
    x = sample_free_field(gs, 8, 2000)
    y = sample_free_field(gs, 9, 2000)
    ch2 = init_chain(gs, 10, n_chains=2000, beta=1.0)
    ch2.current = ch.current
    ch2 = pcn_step(ch2, gs, pot, g)
    v_x, v_y = potential_V(x, pot, g), potential_V(y, pot, g)
    w = np.exp(-v_x)
    # x reweighted to rho, y from the proposal
    expected = np.sum(w * np.minimum(1.0, np.exp(v_x - v_y))) / np.sum(w)
    assert abs(ch2.acceptance_rate - expected) < 0.05


def test_pcn_matches_importance_sampling_small_n():
    n = 3
    g = build_grid(n)
    gs, pot = quartic_spec(n)
    ie = importance_estimate(gs, pot, g, 200_000, lambda c: np.abs(c[:, 0]) ** 2, rng=11)
    smp = sample_gibbs(gs, pot, g, 20_000, burn_in=1000, thinning=5, rng=12, n_chains=200)
    m, se = smp.chain_mean_se(np.abs(smp.fields[:, 0]) ** 2)
    assert abs(m - ie.mean) <= 3 * np.hypot(se, ie.mean_se)


def test_gibbs_variances_shrink_relative_to_free():
    n = 7
    g = build_grid(n)
    gs, pot = quartic_spec(n)
    smp = sample_gibbs(gs, pot, g, 8000, burn_in=1000, thinning=5, rng=2, n_chains=200)
    m, se = smp.chain_mean_se(np.abs(smp.fields) ** 2)
    # the quartic weight mostly acts on the low modes
    assert np.all(m[:4] + 3 * se[:4] < gs.variances[:4])
    assert np.all(np.diff(m) < 0)


def test_gibbs_mean_potential_stable_across_seeds():
    n = 7
    g = build_grid(n)
    gs, pot = quartic_spec(n)
    runs = [sample_gibbs(gs, pot, g, 4000, burn_in=500, thinning=5, rng=s, n_chains=100) for s in (1, 2)]
    ms = [r.chain_mean_se(r.potential) for r in runs]
    assert abs(ms[0][0] - ms[1][0]) <= 3 * np.hypot(ms[0][1], ms[1][1])
    for r in runs:
        assert r.iact >= 1.0 and 0.05 <= r.acceptance_rate <= 0.95


def test_gibbs_eta_positive_samples_finite():
    gs, pot = build_eta_spec(5.0, 15)
    smp = sample_gibbs(gs, pot, build_grid(15), 500, burn_in=200, thinning=2, rng=3, n_chains=50)
    assert np.all(np.isfinite(smp.fields))


def test_gibbs_warns_on_extreme_acceptance():
    gs, pot = quartic_spec(3)
    with pytest.warns(RuntimeWarning):
        smp = sample_gibbs(gs, pot, build_grid(3), 20, burn_in=0, thinning=1, rng=0, beta=1e-4, adapt=False)
    assert smp.warnings


def test_gibbs_argument_checks():
    gs, pot = quartic_spec(3)
    with pytest.raises(ConfigurationError):
        sample_gibbs(gs, pot, build_grid(3), 10, burn_in=-1)


def test_iact_of_ar1():
    rng = np.random.default_rng(0)
    phi = 0.8
    x = np.empty((20, 5000))
    x[:, 0] = rng.normal(size=20)
    for t in range(1, 5000):
        x[:, t] = phi * x[:, t - 1] + np.sqrt(1 - phi ** 2) * rng.normal(size=20)
    assert integrated_autocorr_time(x) == pytest.approx((1 + phi) / (1 - phi), rel=0.1)
    assert integrated_autocorr_time(rng.normal(size=4000)) == pytest.approx(1.0, abs=0.2)


def test_samples_csv_round_trip(tmp_path):
    c = sample_free_field(free_spec(4), 0, 3)
    path = tmp_path / "s.csv"
    write_samples_csv(path, c)
    assert path.read_text().splitlines()[0] == "sample_index,n,re_c,im_c"
    np.testing.assert_array_equal(read_samples_csv(path), c)
