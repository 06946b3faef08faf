"""Functionals of fields and Monte-Carlo estimators built on the flows.

Gradients of functionals are taken in the real coordinates ``c_n = a_n + i b_n``
and stored as complex arrays ``dphi/da_n + i dphi/db_n``, so that
``|D phi|^2 = sum_n |grad_n|^2``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import (
    ModelParams,
    NoisePath,
    StepScheme,
    integrate,
)
from .errors import ConfigurationError
from .hermite import QuadratureGrid, analyze, as_coeffs, lp_norm, synthesize
from .rng import as_generator, complex_normal

__all__ = [
    "lp_norm",
    "hamiltonian_S",
    "finite_energy_I",
    "ObservableSeries",
    "TestFunctional",
    "default_battery",
    "jackknife",
    "two_replica_variance",
    "variance_decay",
    "fit_decay_rate",
    "PoincareResult",
    "poincare_check",
    "theta_exponent",
    "structure_function",
    "fit_power_law",
    "FellerResult",
    "feller_probe",
    "write_series_csv",
    "write_report_json",
]


def _lam2(n_modes):
    return 2.0 * np.arange(n_modes + 1) + 1.0


def _quartic(c, grid):
    v = synthesize(c, grid, "quartic")
    return ((v.real ** 2 + v.imag ** 2) ** 2) @ grid.quartic.weights


def hamiltonian_S(u, eta: float, grid: QuadratureGrid):
    """``1/2 |(-H)^{1/2} u|^2 - eta/2 |u|^2 + 1/4 int |u|^4``."""
    c = as_coeffs(u)
    a = np.abs(c) ** 2
    out = 0.5 * np.sum((_lam2(c.shape[-1] - 1) - eta) * a, axis=-1) + 0.25 * _quartic(c, grid)
    return float(out) if np.ndim(out) == 0 else out


def finite_energy_I(y, grid: QuadratureGrid, cutoff=None):
    """``1/2 |(-H)^{1/2} y|^2 + 1/4 int |S_N y|^4`` (the Gibbs exponent on ``E_N``)."""
    c = as_coeffs(y)
    s = np.ones(c.shape[-1]) if cutoff is None else cutoff.values
    out = 0.5 * np.sum(_lam2(c.shape[-1] - 1) * np.abs(c) ** 2, axis=-1) + 0.25 * _quartic(c * s, grid)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class ObservableSeries:
    """Time-stamped Monte-Carlo estimates with standard errors."""

    times: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    n_samples: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.std_errors = np.asarray(self.std_errors, dtype=float)
        if not (self.times.shape == self.values.shape == self.std_errors.shape):
            raise ValueError("times, values and std_errors must have equal lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(~np.isfinite(self.std_errors)) or np.any(self.std_errors < 0):
            raise ValueError("std_errors must be finite and non-negative")

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "values": self.values.tolist(),
                "std_errors": self.std_errors.tolist(), "n_samples": int(self.n_samples)}


@dataclass(frozen=True)
class TestFunctional:
    """Bounded-or-square-integrable test functional with a computable gradient.

    kind
        ``"mode-re"`` (``a_n``), ``"mode-im"`` (``b_n``), ``"l4-capped"``
        (``cap * tanh(|u|_{L^4}^4 / cap)``) or ``"lipschitz-custom"``
        (``func`` on coefficient batches, gradient by central differences).
    """

    __test__ = False

    kind: str
    mode_index: int = 0
    cap: float = 10.0
    func: Callable | None = field(default=None, compare=False)
    name: str | None = None
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.kind not in ("mode-re", "mode-im", "l4-capped", "lipschitz-custom"):
            raise ConfigurationError(f"unknown functional kind {self.kind!r}")
        if self.kind == "lipschitz-custom" and self.func is None:
            raise ConfigurationError("lipschitz-custom needs func")
        if self.cap <= 0:
            raise ConfigurationError("cap must be > 0")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "mode-re":
            return f"a{self.mode_index}"
        if self.kind == "mode-im":
            return f"b{self.mode_index}"
        return self.kind

    def __call__(self, u, grid: QuadratureGrid | None = None):
        c = as_coeffs(u)
        if self.kind == "mode-re":
            return c[..., self.mode_index].real
        if self.kind == "mode-im":
            return c[..., self.mode_index].imag
        if self.kind == "l4-capped":
            return self.cap * np.tanh(_quartic(c, grid) / self.cap)
        return np.asarray(self.func(c), dtype=float)

    def gradient(self, u, grid: QuadratureGrid | None = None) -> np.ndarray:
        c = np.asarray(as_coeffs(u), dtype=complex)
        g = np.zeros_like(c)
        if self.kind == "mode-re":
            g[..., self.mode_index] = 1.0
        elif self.kind == "mode-im":
            g[..., self.mode_index] = 1j
        elif self.kind == "l4-capped":
            v = synthesize(c, grid, "quartic")
            q = ((v.real ** 2 + v.imag ** 2) ** 2) @ grid.quartic.weights
            dq = 4.0 * as_coeffs(analyze((v.real ** 2 + v.imag ** 2) * v, grid, "quartic",
                                         n_modes=c.shape[-1] - 1))
            g = (1.0 / np.cosh(q / self.cap) ** 2)[..., None] * dq
        else:
            h = self.fd_step
            for n in range(c.shape[-1]):
                for unit, part in ((1.0, 1.0), (1j, 1j)):
                    e = np.zeros(c.shape[-1], dtype=complex)
                    e[n] = unit
                    d = (np.asarray(self.func(c + h * e)) - np.asarray(self.func(c - h * e))) / (2 * h)
                    g[..., n] += part * d
        return g


def default_battery(cap: float = 10.0) -> list:
    """``{a_0, b_0, a_4, capped L^4}``."""
    return [TestFunctional("mode-re", 0), TestFunctional("mode-im", 0),
            TestFunctional("mode-re", 4), TestFunctional("l4-capped", cap=cap)]


def jackknife(stat: Callable, *columns):
    """Bias-corrected delete-one jackknife estimate and standard error.

    ``stat`` maps sample means of ``columns`` (each of shape ``(n, ...)``) to
    the statistic; leave-one-out means are formed in closed form.
    """
    cols = [np.asarray(c, dtype=float) for c in columns]
    n = cols[0].shape[0]
    means = [c.mean(axis=0) for c in cols]
    loo = [(n * m - c) / (n - 1) for m, c in zip(means, cols)]
    full = stat(*means)
    parts = stat(*loo)
    pbar = parts.mean(axis=0)
    est = n * full - (n - 1) * pbar
    se = np.sqrt((n - 1) / n * np.sum((parts - pbar) ** 2, axis=0))
    return est, se


def two_replica_variance(phi1, phi2, weights_t=None):
    """Jackknife estimate of ``Var(P_t phi)`` from two conditionally independent replicas.

    ``phi1``, ``phi2`` have shape ``(n_outer, n_times)``:
    ``E[phi(X1_t) phi(X2_t)] = E[(P_t phi)^2]`` and the mean is estimated
    from both replicas.  If ``weights_t`` is given the statistic is
    ``V(t) - weights_t * V(0)`` instead.
    """
    prod = phi1 * phi2
    avg = 0.5 * (phi1 + phi2)

    def stat(mp, ma):
        v = mp - ma ** 2
        if weights_t is None:
            return v
        return v - weights_t * v[..., :1]

    return jackknife(stat, prod, avg)


def fit_decay_rate(times, values, std_errors, t_min: float = 0.2, t_max: float = 2.0):
    """Weighted least squares of ``log V`` on ``t``; returns ``(rate, rate_se)``.

    Weights are ``(V / se)^2`` from the delta method; points with
    ``V <= 2 se`` are dropped.
    """
    t = np.asarray(times)
    v = np.asarray(values)
    se = np.asarray(std_errors)
    sel = (t >= t_min - 1e-12) & (t <= t_max + 1e-12) & (v > 2 * se) & (se > 0)
    if sel.sum() < 2:
        return float("nan"), float("nan")
    x, y, w = t[sel], np.log(v[sel]), (v[sel] / se[sel]) ** 2
    A = np.column_stack([np.ones_like(x), x])
    cov = np.linalg.inv(A.T @ (w[:, None] * A))
    beta = cov @ (A.T @ (w * y))
    return float(-beta[1]), float(np.sqrt(cov[1, 1]))


def variance_decay(phi: TestFunctional, T: float, dt_obs: float, n_outer: int, p: ModelParams,
                   grid: QuadratureGrid, rng=None, initial=None, scheme: StepScheme | None = None,
                   seed: int = 0):
    """Two-replica estimate of ``V(t) = int |P_t phi - phi_bar|^2 d rho_N``.

    ``initial`` holds ``n_outer`` samples of the invariant measure; when
    omitted it is only available in closed form for the linear model, where
    exact free-field draws are used.  Two trajectories with independent noise
    start from each sample.

    Returns
    -------
    series : ObservableSeries
        ``V(t)`` with jackknife standard errors.
    excess : ObservableSeries
        ``V(t) - exp(-2 gamma t) V(0)`` with jackknife standard errors.
    """
    if n_outer < 100:
        raise ConfigurationError("n_outer must be >= 100")
    if initial is None:
        if p.nonlinearity_enabled:
            raise ConfigurationError("initial Gibbs samples are required for the nonlinear model")
        rng = as_generator(rng)
        initial = complex_normal(rng, (n_outer, p.n_modes + 1), 2.0 / _lam2(p.n_modes))
    y = np.asarray(as_coeffs(initial))[:n_outer]
    if y.shape[0] < n_outer:
        raise ConfigurationError("not enough initial samples")
    scheme = scheme or StepScheme(dt=dt_obs if not p.nonlinearity_enabled else 1e-3)
    every = int(round(dt_obs / scheme.dt))
    if every < 1 or abs(every * scheme.dt - dt_obs) > 1e-9:
        raise ConfigurationError("dt_obs must be a multiple of the integration step")
    n_steps = int(round(T / scheme.dt))
    noise = NoisePath(seed, scheme.dt, n_steps, p.n_modes, (2, n_outer))
    x0 = np.broadcast_to(y, (2,) + y.shape).copy()
    tr = integrate(x0, T, scheme, p, grid, noise, every)
    vals = np.stack([phi(tr.states[k], grid) for k in range(tr.times.size)], axis=-1)
    phi1, phi2 = vals[0], vals[1]
    v, se = two_replica_variance(phi1, phi2)
    bound = np.exp(-2.0 * p.gamma * tr.times)
    ex, ex_se = two_replica_variance(phi1, phi2, bound)
    return (ObservableSeries(tr.times, v, se, n_outer),
            ObservableSeries(tr.times, ex, ex_se, n_outer))


@dataclass
class PoincareResult:
    label: str
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    diff_se: float

    @property
    def passed(self) -> bool:
        return self.lhs >= self.rhs - 3.0 * self.diff_se

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else float("inf")

    def to_dict(self) -> dict:
        return {"functional": self.label, "lhs": self.lhs, "lhs_se": self.lhs_se, "rhs": self.rhs,
                "rhs_se": self.rhs_se, "joint_se": self.diff_se, "ratio": self.ratio, "pass": self.passed}


def poincare_check(phi_set, samples, grid: QuadratureGrid, iact: float = 1.0) -> list:
    """Compare ``int |D phi|^2`` with ``Var(phi)`` on (approximately independent) samples.

    Standard errors are inflated by ``sqrt(iact)`` for correlated chains.  The
    joint error is that of the per-sample difference
    ``|D phi|^2 - (phi - phi_bar)^2``.
    """
    c = np.asarray(as_coeffs(samples))
    n = c.shape[0]
    infl = np.sqrt(max(iact, 1.0))
    out = []
    for phi in phi_set:
        f = np.asarray(phi(c, grid), dtype=float)
        g = np.sum(np.abs(phi.gradient(c, grid)) ** 2, axis=-1)
        lhs, lhs_se = g.mean(), g.std(ddof=1) / np.sqrt(n) * infl
        rhs, rhs_se = jackknife(lambda m2, m1: m2 - m1 ** 2, f * f, f)
        diff, diff_se = jackknife(lambda mg, m2, m1: mg - m2 + m1 ** 2, g, f * f, f)
        out.append(PoincareResult(phi.label, float(lhs), float(lhs_se), float(rhs), float(rhs_se * infl),
                                  float(diff_se * infl)))
    return out


def theta_exponent(p_exp: float) -> float:
    """``theta(p)``: ``2 - 4/p`` on ``[2, 4]`` and ``1`` beyond."""
    if p_exp < 2:
        raise ValueError("theta is defined for p >= 2")
    return 1.0 if p_exp >= 4 else 2.0 - 4.0 / p_exp


def fit_power_law(x, y, n_boot: int = 0, rng=None, level: float = 0.95):
    """Least-squares slope of ``log y`` on ``log x``.

    With ``n_boot > 0``, ``y`` may be per-sample values of shape
    ``(n_samples, len(x))``; samples are resampled to produce a percentile CI.

    Returns
    -------
    slope : float
    ci : tuple of float or None
    """
    x = np.log(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)

    def slope(mean_y):
        return float(np.polyfit(x, np.log(mean_y), 1)[0])

    if y.ndim == 1:
        return slope(y), None
    s = slope(y.mean(axis=0))
    if n_boot <= 0:
        return s, None
    rng = as_generator(rng)
    n = y.shape[0]
    boots = np.array([slope(y[rng.integers(0, n, n)].mean(axis=0)) for _ in range(n_boot)])
    a = (1 - level) / 2
    return s, (float(np.quantile(boots, a)), float(np.quantile(boots, 1 - a)))


def structure_function(p_exp: float, m: int, tau_grid, T: float, p: ModelParams, rng=None,
                       n_samples: int = 2000, return_samples: bool = False):
    """``E |Z(t + tau) - Z(t)|_{L^p}^{2m}`` for the stationary OU process.

    By stationarity each pair ``(Z(t), Z(t + tau))`` is drawn exactly: ``Z(t)``
    from the free measure and ``Z(t + tau)`` through the exact transition.
    ``T`` bounds the admissible ``tau``.
    """
    if p_exp <= 2:
        raise ValueError("p_exp must be > 2")
    tau = np.asarray(tau_grid, dtype=float)
    if np.any(tau <= 0) or np.any(tau > T) or np.any(np.diff(tau) <= 0):
        raise ValueError("tau_grid must be increasing within (0, T]")
    rng = as_generator(rng)
    lam2 = _lam2(p.n_modes)
    var = 2.0 / lam2
    z0 = complex_normal(rng, (n_samples, p.n_modes + 1), var)
    vals = np.empty((n_samples, tau.size))
    for j, t in enumerate(tau):
        E = np.exp(-(1j + p.gamma) * lam2 * t)
        inc = complex_normal(rng, (n_samples, p.n_modes + 1), var * -np.expm1(-2.0 * p.gamma * lam2 * t))
        d = (E - 1.0) * z0 + inc
        vals[:, j] = np.asarray(lp_norm(d, p_exp)) ** (2 * m)
    series = ObservableSeries(tau, vals.mean(axis=0), vals.std(axis=0, ddof=1) / np.sqrt(n_samples), n_samples)
    return (series, vals) if return_samples else series


@dataclass
class FellerResult:
    h_norms: np.ndarray
    differences: np.ndarray
    std_errors: np.ndarray
    inconclusive: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return np.abs(self.differences) / self.h_norms

    def to_dict(self) -> dict:
        return {"h_norm": self.h_norms.tolist(), "difference": self.differences.tolist(),
                "std_error": self.std_errors.tolist(), "ratio": self.ratios.tolist(),
                "inconclusive": self.inconclusive.tolist()}


def feller_probe(phi: TestFunctional, X0, h_dirs, T: float, n_mc: int, p: ModelParams,
                 grid: QuadratureGrid, rng=None, scheme: StepScheme | None = None, seed: int = 0):
    """Monte-Carlo estimate of ``P_T phi(X0 + h) - P_T phi(X0)`` for each ``h``.

    The trajectories from ``X0`` and from every ``X0 + h`` share their noise
    (common random numbers), which cancels most of the Monte-Carlo error in
    the difference.  An entry is flagged inconclusive when its magnitude is
    below two standard errors.
    """
    scheme = scheme or StepScheme(dt=1e-3)
    c0 = np.asarray(as_coeffs(X0), dtype=complex)
    hs = np.atleast_2d(np.asarray([as_coeffs(h) for h in h_dirs], dtype=complex))
    norms = np.linalg.norm(hs, axis=-1)
    if np.any(norms > 0.1 + 1e-12):
        raise ConfigurationError("perturbations must satisfy |h| <= 0.1")
    starts = np.concatenate([c0[None], c0[None] + hs])
    x0 = np.broadcast_to(starts[:, None, :], (starts.shape[0], n_mc, c0.size)).copy()
    n_steps = int(round(T / scheme.dt))
    noise = NoisePath(seed, scheme.dt, n_steps, p.n_modes, (1, n_mc))
    tr = integrate(x0, T, scheme, p, grid, noise, n_steps)
    f = np.asarray(phi(tr.states[-1], grid))
    d = f[1:] - f[:1]
    diff = d.mean(axis=1)
    se = d.std(axis=1, ddof=1) / np.sqrt(n_mc)
    return FellerResult(norms, diff, se, np.abs(diff) < 2 * se)


def write_series_csv(path, series: ObservableSeries, meta: dict | None = None,
                     columns=("t", "value", "std_error")) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(list(columns))
        for t, v, s in zip(series.times, series.values, series.std_errors):
            w.writerow([repr(float(t)), repr(float(v)), repr(float(s))])


def write_report_json(path, record: dict) -> None:
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")
