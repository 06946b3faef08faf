"""Mehler kernel of the complex harmonic-oscillator semigroup ``e^{t(i+gamma)H}``.

For ``0 < t < pi/4`` the kernel is

    K_t(x, y) = sqrt(delta/pi) exp(-(beta-delta) x^2) exp(-delta (x-y)^2) exp(-(beta-delta) y^2)

with ``delta = 1 / (2 sinh(2(gamma+i)t))`` and ``beta = coth(2(gamma+i)t) / 2``.
The spectral representation (multiply mode ``n`` by ``exp(-(i+gamma)(2n+1)t)``)
is branch-free and serves as the cross-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .hermite import (
    SpectralField,
    _like,
    as_coeffs,
    gauss_hermite_rule,
    lp_norm,
)

__all__ = [
    "KernelParams",
    "kernel_params",
    "kernel_value",
    "apply_semigroup_spectral",
    "apply_semigroup_kernel",
    "smoothing_ratio_scan",
    "write_scan_csv",
]

T_MAX = np.pi / 4


@dataclass(frozen=True)
class KernelParams:
    t: float
    gamma: float
    delta: complex
    beta: complex


def kernel_params(t: float, gamma: float) -> KernelParams:
    """Complex Gaussian parameters of ``K_t``; only defined for ``0 < t < pi/4``."""
    if not 0 < t < T_MAX:
        raise DomainError(f"t={t} outside (0, pi/4); split the time step")
    if gamma <= 0:
        raise DomainError("gamma must be > 0")
    z = 2.0 * (gamma * 1j - 1.0) * t
    s = np.sin(z)
    delta = -1.0 / (2j * s)
    beta = -np.cos(z) / (2j * s)
    if delta.real <= 0 or (beta - delta).real <= 0:
        raise DomainError(f"kernel parameters lost positivity at t={t}, gamma={gamma}")
    return KernelParams(float(t), float(gamma), complex(delta), complex(beta))


def kernel_value(p: KernelParams, x, y):
    """``K_t(x, y)`` with the principal branch of ``sqrt(delta/pi)``; broadcasts."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = p.beta - p.delta
    return np.sqrt(p.delta / np.pi) * np.exp(-a * x * x - p.delta * (x - y) ** 2 - a * y * y)


def apply_semigroup_spectral(u, t: float, gamma: float):
    """``e^{t(i+gamma)H} u``: mode ``n`` picks up ``exp(-(i+gamma)(2n+1)t)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    c = as_coeffs(u)
    lam2 = 2.0 * np.arange(c.shape[-1]) + 1.0
    return _like(u, c * np.exp(-(1j + gamma) * lam2 * t))


def apply_semigroup_kernel(u, t: float, gamma: float, quad_size: int = 400,
                           max_substep: float = np.pi / 8):
    """``e^{t(i+gamma)H} u`` by quadrature against the Mehler kernel.

    The time is split into ``k`` equal sub-steps of length at most
    ``max_substep`` (which must stay below ``pi/4``).  Each sub-step integrates
    ``K(x_i, y_j) u(y_j)`` on a Gauss-Hermite rule of ``quad_size`` nodes, the
    Gaussian factors of the kernel being part of the integrand, and the result
    is projected back onto the Hermite modes on the same nodes.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not 0 < max_substep < T_MAX:
        raise DomainError("max_substep must lie in (0, pi/4)")
    c = as_coeffs(u)
    if t == 0:
        return _like(u, c.copy())
    n = c.shape[-1] - 1
    r = gauss_hermite_rule(n, quad_size, 1.0)
    k = int(np.ceil(t / max_substep - 1e-12))
    p = kernel_params(t / k, gamma)
    kmat = kernel_value(p, r.nodes[:, None], r.nodes[None, :]) * r.weights
    vals = c @ r.basis
    for _ in range(k):
        vals = vals @ kmat.T
    out = (vals * r.weights) @ r.basis.T
    return _like(u, out)


def smoothing_ratio_scan(f, r: float, s: float, gamma: float, t_grid, grid=None,
                         exponent: float | None = None):
    """Ratios ``|e^{t(i+gamma)H} f|_{L^r} / (t^{-1/(2l)} |f|_{L^s})``.

    ``1/l = 1/s - 1/r`` and requires ``0 <= 1/r <= 1/s <= 1``; ``r`` or ``s``
    may be ``inf``.  Passing ``exponent`` replaces ``1/(2l)`` and lifts the
    ordering requirement, which covers the ``L^p -> L^2`` estimate
    (``r = 2``, ``s = p``, ``exponent = 1/2 - 1/p``) made possible by the
    confining potential.  The semigroup is applied spectrally and the norms
    are taken by quadrature.

    Returns
    -------
    numpy.ndarray
        Array of shape ``(len(t_grid), 2)`` with columns ``(t, ratio)``.
    """
    inv_r = 0.0 if np.isinf(r) else 1.0 / r
    inv_s = 0.0 if np.isinf(s) else 1.0 / s
    if exponent is None:
        if not 0 <= inv_r <= inv_s <= 1:
            raise ValueError(f"need 0 <= 1/r <= 1/s <= 1, got r={r}, s={s}")
        exponent = 0.5 * (inv_s - inv_r)
    elif not (0 <= inv_r <= 1 and 0 <= inv_s <= 1):
        raise ValueError("exponents r, s must be >= 1")
    c = as_coeffs(f)
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t_grid must be positive")
    fs = lp_norm(c, s, grid)
    evolved = np.stack([apply_semigroup_spectral(c, ti, gamma) for ti in t])
    num = np.asarray(lp_norm(evolved, r, grid))
    return np.column_stack([t, num / (t ** (-exponent) * fs)])


def write_scan_csv(path, scan, meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(["t", "ratio"])
        for t, q in np.asarray(scan):
            w.writerow([repr(float(t)), repr(float(q))])
