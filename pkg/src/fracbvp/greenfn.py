"""Structural constants, boundary coefficient functions and the Green kernel.

Sign convention: the kernel is oriented so that the solution of the linear
problem ``D^alpha u = f`` reads

    u(t) = int_0^T G(t, s) f(s) ds - sum_i theta_i(t) lam_i int_0^T g_i,

with ``theta_0 = -omega0`` and ``theta_i = omega_i`` for ``i = 1, 2``.  The
first boundary row fixes the sign of the ``i = 0`` term: for ``f = 0`` and
``a0 = b0 = 1`` the solution is the constant ``lam0 * int g0 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fracops import DomainError, rgamma
from .problem import ProblemSpec


@dataclass(frozen=True)
class StructuralConstants:
    mu_beta1: float
    mu_beta2: float
    nu_beta1: float
    omega0: float

    @property
    def mu_ratio(self) -> float:
        return self.mu_beta2 / self.mu_beta1


def structural_constants(spec: ProblemSpec) -> StructuralConstants:
    a, b, eta, T = spec.a, spec.b, spec.eta, spec.T
    b1, b2 = spec.beta1, spec.beta2
    d_mu1 = 2 * (a[1] * eta ** (2 - b1) + b[1] * T ** (2 - b1))
    d_mu2 = 2 * (a[2] * eta ** (2 - b2) + b[2] * T ** (2 - b2))
    d_nu = a[1] * eta ** (1 - b1) + b[1] * T ** (1 - b1)
    d_om = a[0] + b[0]
    for name, d in (("mu^beta1", d_mu1), ("mu^beta2", d_mu2), ("nu^beta1", d_nu), ("omega0", d_om)):
        if d == 0:
            raise DomainError(f"zero denominator in {name}")
    return StructuralConstants(
        mu_beta1=math.gamma(3 - b1) / d_mu1,
        mu_beta2=math.gamma(3 - b2) / d_mu2,
        nu_beta1=math.gamma(2 - b1) / d_nu,
        omega0=1.0 / d_om,
    )


def _check_t(spec: ProblemSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > spec.T * (1 + 1e-14)):
        raise DomainError(f"time outside [0, {spec.T}]")
    return t


def omega(spec: ProblemSpec, i: int, t, sc: StructuralConstants | None = None):
    """Coefficient functions ``omega_0`` (constant), ``omega_1(t)``, ``omega_2(t)``."""
    sc = sc or structural_constants(spec)
    t = _check_t(spec, t)
    b0, T = spec.b[0], spec.T
    w0 = sc.omega0
    if i == 0:
        return np.full_like(t, w0) if t.ndim else w0
    if i == 1:
        return sc.nu_beta1 * (b0 * T * w0 - t)
    if i == 2:
        nr = sc.nu_beta1 * sc.mu_ratio
        return b0 * T**2 * w0 * sc.mu_beta2 - b0 * T * w0 * nr + nr * t - sc.mu_beta2 * t**2
    raise DomainError(f"omega index must be 0, 1 or 2, got {i!r}")


def omega_d(spec: ProblemSpec, i: int, which: int, t, sc: StructuralConstants | None = None):
    """Caputo derivative of ``omega_i`` of order ``beta1`` (``which=1``) or ``beta2`` (``which=2``)."""
    sc = sc or structural_constants(spec)
    t = _check_t(spec, t)
    if which not in (1, 2):
        raise DomainError("which must be 1 (beta1) or 2 (beta2)")
    zero = np.zeros_like(t) if t.ndim else 0.0
    if i == 0:
        return zero
    b1, b2 = spec.beta1, spec.beta2
    if i == 1:
        if which == 2:
            return zero
        return -sc.nu_beta1 * t ** (1 - b1) * rgamma(2 - b1)
    if i == 2:
        if which == 1:
            return (sc.nu_beta1 * sc.mu_ratio * t ** (1 - b1) * rgamma(2 - b1)
                    - 2 * sc.mu_beta2 * t ** (2 - b1) * rgamma(3 - b1))
        return -2 * sc.mu_beta2 * t ** (2 - b2) * rgamma(3 - b2)
    raise DomainError(f"omega index must be 0, 1 or 2, got {i!r}")


def theta(spec: ProblemSpec, i: int, t, sc: StructuralConstants | None = None):
    """Signed coefficient functions of the solution representation."""
    w = omega(spec, i, t, sc)
    return -w if i == 0 else w


def _kernel_power(x, p: float):
    """``x**p / Gamma(p + 1)`` for ``x >= 0``; infinite at ``x = 0`` when ``p < 0``."""
    with np.errstate(divide="ignore"):
        return np.power(np.asarray(x, dtype=float), p) * rgamma(p + 1)


def green_g0(spec: ProblemSpec, t, s, sc: StructuralConstants | None = None):
    """Boundary part ``G0(t, s)`` of the kernel.

    The ``eta``-terms carry the indicator of the open interval ``(0, eta)``.
    """
    sc = sc or structural_constants(spec)
    t = _check_t(spec, t)
    s = _check_t(spec, s)
    a, b, T, eta, alpha = spec.a, spec.b, spec.T, spec.eta, spec.alpha
    out = 0.0
    for i, beta in enumerate(spec.betas):
        p = alpha - beta - 1
        if b[i] != 0:
            out = out + theta(spec, i, t, sc) * b[i] * _kernel_power(T - s, p)
        if i > 0 and a[i] != 0:
            chi = (s > 0) & (s < eta)
            out = out + np.where(chi, theta(spec, i, t, sc) * a[i] * _kernel_power(np.where(chi, eta - s, 1.0), p), 0.0)
    return out + np.zeros(np.broadcast(t, s).shape)


def green(spec: ProblemSpec, t, s, sc: StructuralConstants | None = None):
    """Green kernel ``G(t, s) = [s <= t] (t-s)^(alpha-1)/Gamma(alpha) + G0(t, s)``."""
    sc = sc or structural_constants(spec)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    causal = np.where(s <= t, _kernel_power(np.clip(t - s, 0, None), spec.alpha - 1), 0.0)
    return causal + green_g0(spec, t, s, sc)
