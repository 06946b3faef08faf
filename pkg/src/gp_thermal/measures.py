"""Gaussian free measures, Gibbs measures on ``E_N`` and their samplers.

The free measure ``mu_N`` makes the coefficients independent circular complex
Gaussians with ``E|c_n|^2 = 2 / lambda_n^2``.  The Gibbs measure reweights it
by ``exp(-V)`` with ``V(u) = 1/4 |S_N u|_{L^4}^4`` (no chemical potential), or
by the shifted potential of the ``eta > 0`` construction.

Two samplers are provided: self-normalized importance sampling from the
Gaussian reference (cheap, exact in the limit, only usable at small ``N``),
and preconditioned Crank-Nicolson Metropolis chains, vectorized over chains.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DegenerateWeightsError
from .hermite import (
    CutoffProfile,
    QuadratureGrid,
    SpectralField,
    as_coeffs,
    build_grid,
    cutoff_profile,
    gauss_hermite_rule,
    synthesize,
)
from .rng import as_generator, complex_normal

__all__ = [
    "GaussianSpec",
    "PotentialSpec",
    "ChainState",
    "GibbsSamples",
    "ImportanceEstimate",
    "free_spec",
    "n0_for_eta",
    "build_eta_spec",
    "quartic_spec",
    "sample_free_field",
    "quartic_energy",
    "tilde_potential",
    "potential_V",
    "eta_sandwich_constant",
    "importance_estimate",
    "init_chain",
    "pcn_step",
    "sample_gibbs",
    "integrated_autocorr_time",
    "write_samples_csv",
    "read_samples_csv",
]


def _lam2(n_modes):
    return 2.0 * np.arange(n_modes + 1) + 1.0


@dataclass(frozen=True)
class GaussianSpec:
    """Independent circular complex Gaussian modes with ``E|c_n|^2 = variances[n]``."""

    variances: np.ndarray

    def __post_init__(self):
        v = np.array(self.variances, dtype=float)
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise ConfigurationError("all mode variances must be positive and finite")
        v.setflags(write=False)
        object.__setattr__(self, "variances", v)

    @property
    def n_modes(self) -> int:
        return self.variances.size - 1


@dataclass(frozen=True)
class PotentialSpec:
    """Density exponent relative to a Gaussian reference.

    ``kind`` is ``"quartic-only"`` (``eta == 0``), ``"eta-split"`` or ``"zero"``
    (``V = 0``, used to check that samplers leave the reference invariant).
    For ``eta-split`` the reference is ``"mu_tilde"`` (Gaussian of
    ``A_N = -H - eta (S_N - Pi_{N0})``, potential ``-eta/2 |Pi_{N0} S_N u|^2
    + 1/4 |S_N u|^4``) or ``"mu"`` (free ``mu_N``, potential
    ``-eta/2 <S_N u, u> + 1/4 |S_N u|^4``); both define the same measure.
    """

    kind: str
    eta: float
    n0: int
    cutoff: CutoffProfile
    reference: str = "mu_tilde"

    def __post_init__(self):
        if self.kind not in ("quartic-only", "eta-split", "zero"):
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        if self.eta < 0:
            raise ConfigurationError("eta must be >= 0")
        if (self.kind == "quartic-only") != (self.eta == 0) and self.kind != "zero":
            raise ConfigurationError("kind 'quartic-only' is exactly the eta == 0 case")
        if self.n0 != n0_for_eta(self.eta):
            raise ConfigurationError(f"n0={self.n0} inconsistent with eta={self.eta}")
        if self.reference not in ("mu_tilde", "mu"):
            raise ConfigurationError(f"unknown reference {self.reference!r}")

    @property
    def n_modes(self) -> int:
        return self.cutoff.n_modes


def free_spec(n_modes: int) -> GaussianSpec:
    return GaussianSpec(2.0 / _lam2(n_modes))


def n0_for_eta(eta: float) -> int:
    """Largest ``n`` with ``lambda_n^2 <= eta`` (``-1`` when ``eta < 1``)."""
    if eta < 1:
        return -1
    return int(np.floor((eta - 1.0) / 2.0))


def quartic_spec(n_modes: int, cutoff: CutoffProfile | None = None) -> tuple[GaussianSpec, PotentialSpec]:
    cutoff = cutoff_profile(n_modes) if cutoff is None else cutoff
    return free_spec(n_modes), PotentialSpec("quartic-only", 0.0, -1, cutoff)


def build_eta_spec(eta: float, n_modes: int, cutoff: CutoffProfile | None = None,
                   reference: str = "mu_tilde") -> tuple[GaussianSpec, PotentialSpec]:
    """Gaussian reference and potential for chemical potential ``eta``."""
    cutoff = cutoff_profile(n_modes) if cutoff is None else cutoff
    if eta == 0:
        return quartic_spec(n_modes, cutoff)
    if eta < 0:
        raise ConfigurationError("eta must be >= 0")
    n0 = n0_for_eta(eta)
    if (2 * n0 + 1) / (2 * n_modes + 1) > 0.25:
        raise ConfigurationError(
            f"n_modes={n_modes} too small for eta={eta}: need (2*N0+1)/(2N+1) <= 1/4 with N0={n0}"
        )
    pot = PotentialSpec("eta-split", float(eta), n0, cutoff, reference)
    if reference == "mu":
        return free_spec(n_modes), pot
    lam2 = _lam2(n_modes)
    low = (np.arange(n_modes + 1) <= n0).astype(float)
    return GaussianSpec(2.0 / (lam2 - eta * (cutoff.values - low))), pot


def sample_free_field(spec: GaussianSpec, rng, size=None):
    """Draw from the Gaussian reference; a :class:`SpectralField` when ``size`` is None."""
    rng = as_generator(rng)
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    c = complex_normal(rng, shape + (spec.n_modes + 1,), spec.variances)
    return SpectralField(c) if size is None else c


def quartic_energy(c, grid: QuadratureGrid) -> np.ndarray:
    """``int |u|^4 dx`` for coefficient arrays (exact on the quartic rule)."""
    v = synthesize(c, grid, "quartic")
    a = v.real ** 2 + v.imag ** 2
    return (a * a) @ grid.quartic.weights


def tilde_potential(u, eta: float, n0: int, grid: QuadratureGrid):
    """``-eta/2 |Pi_{N0} u|_{L^2}^2 + 1/4 |u|_{L^4}^4`` (no cutoff applied)."""
    c = as_coeffs(u)
    q = 0.25 * quartic_energy(c, grid)
    if n0 >= 0:
        q = q - 0.5 * eta * np.sum(np.abs(c[..., : n0 + 1]) ** 2, axis=-1)
    return q


def potential_V(u, pot: PotentialSpec, grid: QuadratureGrid):
    """Exponent of the Gibbs density relative to the matching Gaussian reference."""
    c = as_coeffs(u)
    if pot.kind == "zero":
        out = np.zeros(c.shape[:-1])
    else:
        s = pot.cutoff.values
        w = c * s
        if pot.kind == "quartic-only":
            out = 0.25 * quartic_energy(w, grid)
        elif pot.reference == "mu_tilde":
            out = tilde_potential(w, pot.eta, pot.n0, grid)
        else:
            out = 0.25 * quartic_energy(w, grid) - 0.5 * pot.eta * np.sum(s * np.abs(c) ** 2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def eta_sandwich_constant(eta: float, n0: int, quad_size: int = 400) -> float:
    """``C`` with ``tilde_V(u) >= 1/8 |u|_{L^4}^4 - C`` for every ``u``.

    From Hoelder, ``|Pi_{N0} u|_{L^2}^2 <= K |u|_{L^4}^2`` with
    ``K = sum_{n <= N0} |h_n|_{L^{4/3}}^2``, and ``a x^2 - x^4/8 <= 2 a^2``.
    """
    if n0 < 0:
        return 0.0
    r = gauss_hermite_rule(n0, quad_size, float(np.sqrt(2.0 / 3.0)))
    norms = (np.abs(r.basis) ** (4.0 / 3.0) @ r.weights) ** 0.75
    k = float(np.sum(norms ** 2))
    return 0.5 * (eta * k) ** 2


@dataclass(frozen=True)
class ImportanceEstimate:
    mean: float
    mean_se: float
    gamma: float
    gamma_se: float
    ess: float
    n_samples: int


def importance_estimate(gauss: GaussianSpec, pot: PotentialSpec, grid: QuadratureGrid,
                        n_samples: int, functional: Callable | None = None, rng=None,
                        batch: int = 20000) -> ImportanceEstimate:
    """Self-normalized importance sampling of ``E_rho[F]`` and of ``Gamma_N``.

    ``functional`` maps a coefficient batch ``(n, N+1)`` to ``(n,)`` values.
    Standard errors use the delta method for the ratio estimator.
    """
    rng = as_generator(rng)
    lws, fs = [], []
    left = n_samples
    while left > 0:
        k = min(batch, left)
        c = sample_free_field(gauss, rng, k)
        lws.append(-np.asarray(potential_V(c, pot, grid), dtype=float))
        fs.append(np.zeros(k) if functional is None else np.asarray(functional(c), dtype=float))
        left -= k
    lw = np.concatenate(lws)
    f = np.concatenate(fs)
    # the effective sample size is scale free, so rescale before exponentiating
    wr = np.exp(lw - lw.max())
    ess = wr.sum() ** 2 / np.sum(wr * wr)
    if ess < 10:
        raise DegenerateWeightsError(f"effective sample size {ess:.1f} < 10")
    w = np.exp(lw)
    gamma = float(w.mean())
    gamma_se = float(w.std(ddof=1) / np.sqrt(w.size))
    mean = float(np.sum(wr * f) / wr.sum())
    mean_se = float(np.sqrt(np.sum(wr * wr * (f - mean) ** 2)) / wr.sum())
    return ImportanceEstimate(mean, mean_se, gamma, gamma_se, float(ess), int(w.size))


@dataclass
class ChainState:
    """State of one or several (vectorized) pCN chains sharing a step size."""

    current: np.ndarray
    pcn_beta: float
    accepted: np.ndarray
    proposed: int
    rng_stream: np.random.Generator = field(repr=False)
    current_V: np.ndarray | None = None

    @property
    def acceptance_rate(self) -> float:
        if self.proposed == 0:
            return 0.0
        return float(np.mean(self.accepted) / self.proposed)


def init_chain(gauss: GaussianSpec, rng, n_chains: int = 1, beta: float = 0.5,
               start=None) -> ChainState:
    rng = as_generator(rng)
    cur = sample_free_field(gauss, rng, n_chains) if start is None else np.array(as_coeffs(start), dtype=complex)
    cur = np.atleast_2d(cur)
    return ChainState(cur, float(beta), np.zeros(cur.shape[0], dtype=np.int64), 0, rng)


def pcn_step(chain: ChainState, gauss: GaussianSpec, pot: PotentialSpec, grid: QuadratureGrid) -> ChainState:
    """One pCN Metropolis update of every chain in ``chain``.

    The proposal ``sqrt(1 - b^2) u + b xi`` with ``xi`` from the reference is
    reversible for the reference, so the acceptance ratio is ``exp(V(u) - V(u'))``.
    """
    b = chain.pcn_beta
    if not 0 < b <= 1:
        raise ConfigurationError("pcn_beta must lie in (0, 1]")
    rng = chain.rng_stream
    u = chain.current
    v_old = potential_V(u, pot, grid) if chain.current_V is None else chain.current_V
    xi = sample_free_field(gauss, rng, u.shape[0])
    prop = np.sqrt(1.0 - b * b) * u + b * xi
    v_new = np.atleast_1d(potential_V(prop, pot, grid))
    v_old = np.atleast_1d(v_old)
    log_u = np.log(rng.random(u.shape[0]))
    acc = log_u < (v_old - v_new)
    cur = np.where(acc[:, None], prop, u)
    return replace(chain, current=cur, accepted=chain.accepted + acc, proposed=chain.proposed + 1,
                   current_V=np.where(acc, v_new, v_old))


def integrated_autocorr_time(x, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's adaptive window.

    ``x`` has shape ``(n_steps,)`` or ``(n_chains, n_steps)``; the
    autocorrelation is averaged over chains.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    if n < 4:
        return 1.0
    y = x - x.mean(axis=1, keepdims=True)
    f = np.fft.rfft(y, n=2 * n, axis=1)
    acf = np.fft.irfft(f * np.conj(f), axis=1)[:, :n].mean(axis=0)
    if acf[0] <= 0:
        return 1.0
    rho = acf / acf[0]
    tau = 2.0 * np.cumsum(rho) - 1.0
    window = np.arange(n) >= c * tau
    m = int(np.argmax(window)) if window.any() else n - 1
    return float(max(tau[m], 1.0))


@dataclass
class GibbsSamples:
    """Thinned post-burn-in pCN output and its diagnostics."""

    fields: np.ndarray
    acceptance_rate: float
    pcn_beta: float
    iact: float
    potential: np.ndarray
    warnings: list = field(default_factory=list)
    n_chains: int = 1

    @property
    def n_samples(self) -> int:
        return self.fields.shape[0]

    def chain_mean_se(self, values) -> tuple[float, float]:
        """Mean of per-sample ``values`` and its standard error from per-chain means.

        Chains are independent, so the spread of their means gives an error
        bar that accounts for autocorrelation within each chain.  Samples are
        stored chain-major.
        """
        v = np.asarray(values, dtype=float)
        k = self.n_chains
        if k < 2 or v.shape[0] % k:
            return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.shape[0]))
        m = v.reshape((k, -1) + v.shape[1:]).mean(axis=1)
        return m.mean(axis=0), m.std(axis=0, ddof=1) / np.sqrt(k)


def sample_gibbs(gauss: GaussianSpec, pot: PotentialSpec, grid: QuadratureGrid, n_samples: int,
                 burn_in: int = 10_000, thinning: int = 10, rng=None, n_chains: int = 1,
                 beta: float = 0.5, target_accept: float = 0.25, adapt: bool = True) -> GibbsSamples:
    """Draw approximately rho-distributed fields with vectorized pCN chains.

    During burn-in the shared step size follows a Robbins-Monro recursion
    toward ``target_accept``; it is frozen afterwards.  Every chain then
    contributes every ``thinning``-th state until ``n_samples`` are collected.
    """
    if burn_in < 0 or thinning < 1 or n_samples < 1 or n_chains < 1:
        raise ConfigurationError("need burn_in >= 0, thinning >= 1, n_samples >= 1, n_chains >= 1")
    chain = init_chain(gauss, rng, n_chains, beta)
    log_b = np.log(beta)
    for k in range(burn_in):
        before = chain.accepted.copy()
        chain = pcn_step(chain, gauss, pot, grid)
        if adapt:
            rate = float(np.mean(chain.accepted - before))
            log_b = min(0.0, max(np.log(1e-4), log_b + (rate - target_accept) / (k + 1) ** 0.6))
            chain.pcn_beta = float(np.exp(log_b))
    chain = replace(chain, accepted=np.zeros_like(chain.accepted), proposed=0)
    per_chain = -(-n_samples // n_chains)
    out, vtrace = [], []
    for _ in range(per_chain):
        for _ in range(thinning):
            chain = pcn_step(chain, gauss, pot, grid)
            vtrace.append(chain.current_V)
        out.append(chain.current.copy())
    fields = np.stack(out, axis=1).reshape(-1, gauss.n_modes + 1)[:n_samples]
    trace = np.asarray(vtrace).T
    notes = []
    rate = chain.acceptance_rate
    if not 0.05 <= rate <= 0.95:
        notes.append(f"acceptance rate {rate:.3f} outside [0.05, 0.95]")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    return GibbsSamples(fields, rate, chain.pcn_beta, integrated_autocorr_time(trace),
                        np.asarray(potential_V(fields, pot, grid)), notes, n_chains)


def write_samples_csv(path, fields) -> None:
    """Dump fields as rows ``(sample_index, n, re_c, im_c)``."""
    c = np.atleast_2d(as_coeffs(fields))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_index", "n", "re_c", "im_c"])
        for i, row in enumerate(c):
            for n, z in enumerate(row):
                w.writerow([i, n, repr(float(z.real)), repr(float(z.imag))])


def read_samples_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    n_s = 1 + max(int(r["sample_index"]) for r in rows)
    n_m = 1 + max(int(r["n"]) for r in rows)
    out = np.zeros((n_s, n_m), dtype=complex)
    for r in rows:
        out[int(r["sample_index"]), int(r["n"])] = complex(float(r["re_c"]), float(r["im_c"]))
    return out
