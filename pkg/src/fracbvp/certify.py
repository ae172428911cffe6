"""Bound constants and the uniqueness / existence checks built on them.

``delta_bounds`` returns the Delta constants *without* any Lipschitz factor;
the certificates multiply by the relevant norm of ``l_f`` once.  Row 0 has no
``eta``-term, matching the operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fracops import DomainError, SampledFunction, trapezoid
from .greenfn import structural_constants
from .problem import GrowthData, LipschitzData, ProblemSpec, Weight


@dataclass(frozen=True)
class RhoBounds:
    rho: tuple[float, float, float]
    rho_tilde: tuple[float, float, float]
    rho_hat: tuple[float, float, float]


@dataclass(frozen=True)
class BoundBundle:
    rho: tuple[float, float, float]
    rho_tilde: tuple[float, float, float]
    rho_hat: tuple[float, float, float]
    delta: tuple[float, float, float]
    tau: float
    holder_lf: float
    l1_lg: tuple[float, float, float]
    constant_lf: bool = False


@dataclass(frozen=True)
class CertificateReport:
    kind: str  # "uniqueness" | "existence"
    certified: bool
    bounds: BoundBundle
    contraction_constant: Optional[float] = None
    K_threshold: Optional[float] = None
    terms: dict = field(default_factory=dict)
    note: str = ""

    @property
    def verdict(self) -> str:
        return "certified" if self.certified else "not-certified"

    def lines(self) -> list[str]:
        """``key: value`` lines for the plain-text report."""
        b = self.bounds
        out = [f"kind: {self.kind}", f"verdict: {self.verdict}"]
        if self.contraction_constant is not None:
            out.append(f"contraction_constant: {self.contraction_constant:.12g}")
        if self.kind == "existence":
            out.append("K_threshold: " + ("none" if self.K_threshold is None else f"{self.K_threshold:.12g}"))
        out.append(f"tau: {b.tau:.12g}")
        out.append(f"constant_lf: {str(b.constant_lf).lower()}")
        for name in ("rho", "rho_tilde", "rho_hat", "delta", "l1_lg"):
            for i, v in enumerate(getattr(b, name)):
                out.append(f"{name}{i}: {v:.12g}")
        out.append(f"holder_lf: {b.holder_lf:.12g}")
        for k, v in self.terms.items():
            out.append(f"term.{k}: {v:.12g}")
        if self.note:
            out.append(f"note: {self.note}")
        return out


def default_tau(spec: ProblemSpec) -> float:
    return min(1.0, spec.alpha - spec.beta2) / 2


def _check_tau(spec: ProblemSpec, tau: float) -> float:
    hi = min(1.0, spec.alpha - spec.beta2)
    if not 0 < tau < hi:
        raise DomainError(f"tau must lie in (0, {hi:g}), got {tau!r}")
    return float(tau)


def rho_bounds(spec: ProblemSpec) -> RhoBounds:
    sc = structural_constants(spec)
    a, b, T = spec.a, spec.b, spec.T
    b1, b2 = spec.beta1, spec.beta2
    nu, mu1, mu2 = abs(sc.nu_beta1), abs(sc.mu_beta1), abs(sc.mu_beta2)
    s0 = abs(a[0] + b[0])
    rho0 = 1.0 / s0
    rho1 = nu * (rho0 * abs(b[0]) + 1) * T
    rho2 = (abs(b[0]) * mu2 / s0 * T**2 + abs(b[0]) * nu / s0 * mu2 / mu1 * T
            + nu * mu2 / mu1 * T + mu2 * T**2)
    rt1 = nu * T ** (1 - b1) / math.gamma(2 - b1)
    rt2 = mu2 * nu * T ** (1 - b1) / (mu1 * math.gamma(2 - b1)) + 2 * mu2 * T ** (2 - b1) / math.gamma(3 - b1)
    # Gamma(3 - beta1) in the denominator as displayed in the source bound table;
    # the exact sup of |D^beta2 omega_2| has Gamma(3 - beta2) instead.
    rh2 = 2 * mu2 * T ** (2 - b2) / math.gamma(3 - b1)
    return RhoBounds((rho0, rho1, rho2), (0.0, rt1, rt2), (0.0, 0.0, rh2))


def _holder_factor(x: float, tau: float, T: float) -> float:
    """Bound on ``int_0^T (T-s)^(x-1) l(s) ds / (Gamma(x) |l|_{1/tau})``."""
    return T ** (x - tau) / math.gamma(x) * ((1 - tau) / (x - tau)) ** (1 - tau)


def _simple_factor(x: float, T: float) -> float:
    return T**x / math.gamma(x + 1)


def delta_bounds(spec: ProblemSpec, tau: Optional[float] = None, constant_lf: bool = False,
                 rb: Optional[RhoBounds] = None) -> tuple[float, float, float]:
    """Delta_0, Delta_1, Delta_2.

    With ``constant_lf`` the simple form ``T^x/Gamma(x+1)`` is used and the
    result multiplies a constant ``l_f``; otherwise the Hoelder form, which
    multiplies ``|l_f|_{1/tau}``.
    """
    rb = rb or rho_bounds(spec)
    if constant_lf:
        k = lambda x, t_end: _simple_factor(x, t_end)  # noqa: E731
    else:
        tau = _check_tau(spec, default_tau(spec) if tau is None else tau)
        k = lambda x, t_end: _holder_factor(x, tau, t_end)  # noqa: E731
    a, b, T, eta, al = spec.a, spec.b, spec.T, spec.eta, spec.alpha
    betas = spec.betas

    def row_term(i: int) -> float:
        x = al - betas[i]
        term = abs(b[i]) * k(x, T)
        if i > 0:
            term += abs(a[i]) * k(x, eta)
        return term

    d0 = k(al, T) + sum(rb.rho[i] * row_term(i) for i in range(3))
    d1 = k(al - spec.beta1, T) + sum(rb.rho_tilde[i] * row_term(i) for i in (1, 2))
    d2 = k(al - spec.beta2, T) + rb.rho_hat[2] * row_term(2)
    return (d0, d1, d2)


def holder_norm(l: Weight, tau: float, T: float) -> float:
    """``(int_0^T l^(1/tau))^tau``; exact for constants."""
    if not 0 < tau < 1:
        raise DomainError(f"tau must lie in (0, 1), got {tau!r}")
    if isinstance(l, SampledFunction):
        if np.any(l.values < 0):
            raise DomainError("weight must be nonnegative")
        return trapezoid(SampledFunction(l.grid, l.values ** (1 / tau))) ** tau
    c = float(l)
    if c < 0:
        raise DomainError("weight must be nonnegative")
    return c * T**tau


def l1_norm(l: Weight, T: float) -> float:
    if isinstance(l, SampledFunction):
        if np.any(l.values < 0):
            raise DomainError("weight must be nonnegative")
        return trapezoid(l)
    c = float(l)
    if c < 0:
        raise DomainError("weight must be nonnegative")
    return c * T


def bound_bundle(spec: ProblemSpec, l_f: Weight, l_g, tau: Optional[float] = None,
                 constant_lf: bool = False) -> BoundBundle:
    tau = _check_tau(spec, default_tau(spec) if tau is None else tau)
    if constant_lf and isinstance(l_f, SampledFunction):
        raise DomainError("constant_lf requires a constant l_f")
    rb = rho_bounds(spec)
    delta = delta_bounds(spec, tau, constant_lf, rb)
    lf_norm = float(l_f) if constant_lf else holder_norm(l_f, tau, spec.T)
    return BoundBundle(rb.rho, rb.rho_tilde, rb.rho_hat, delta, tau, lf_norm,
                       tuple(l1_norm(x, spec.T) for x in l_g), constant_lf)


def uniqueness_certificate(spec: ProblemSpec, lip: LipschitzData, constant_lf: bool = False,
                           tau: Optional[float] = None) -> CertificateReport:
    """Contraction constant of the fixed-point map in the beta-norm; certified iff < 1."""
    tau = lip.tau if tau is None else tau
    bb = bound_bundle(spec, lip.l_f, lip.l_g, tau, constant_lf)
    lam = [abs(x) for x in spec.lam]
    terms = {
        "delta_lf": sum(bb.delta) * bb.holder_lf,
        "rho_lg": sum(bb.rho[i] * lam[i] * bb.l1_lg[i] for i in range(3)),
        "rho_tilde_lg": sum(bb.rho_tilde[i] * lam[i] * bb.l1_lg[i] for i in (1, 2)),
        "rho_hat_lg": bb.rho_hat[2] * lam[2] * bb.l1_lg[2],
    }
    q = sum(terms.values())
    return CertificateReport("uniqueness", q < 1, bb, contraction_constant=q, terms=terms)


def existence_ratio(bb: BoundBundle, spec: ProblemSpec, growth: GrowthData, K: float) -> float:
    lam = [abs(x) for x in spec.lam]
    den = growth.phi(K) * bb.holder_lf * sum(bb.delta) + sum(
        (bb.rho[i] + bb.rho_tilde[i] + bb.rho_hat[i]) * lam[i] * growth.psi[i](K) * bb.l1_lg[i]
        for i in range(3)
    )
    if den == 0:
        return math.inf
    return K / den


def existence_certificate(spec: ProblemSpec, growth: GrowthData, constant_lf: bool = False,
                          tau: Optional[float] = None, K_start: float = 1e-3, K_cap: float = 1e8,
                          decimals: int = 3) -> CertificateReport:
    """Search for the smallest ``K`` with ratio ``> 1``.

    Geometric ladder ``K_start * 2**k`` up to ``K_cap``, then bisection on the
    bracketing rung to ``10**-decimals``.  ``K_threshold`` is the upper end of
    the final bracket, so the ratio exceeds 1 there.
    """
    tau = growth.tau if tau is None else tau
    bb = bound_bundle(spec, growth.l_f, growth.l_g, tau, constant_lf)
    ratio = lambda K: existence_ratio(bb, spec, growth, K)  # noqa: E731

    if all(math.isinf(ratio(K)) for K in (K_start, 1.0, K_cap)):
        return CertificateReport("existence", True, bb, K_threshold=0.0,
                                 terms={"ratio_at_threshold": math.inf},
                                 note="growth bounds vanish; any K > 0 works")
    lo, K = 0.0, K_start
    while K <= K_cap:
        if ratio(K) > 1:
            break
        lo, K = K, 2 * K
    else:
        return CertificateReport("existence", False, bb, K_threshold=None,
                                 note=f"no K <= {K_cap:g} with ratio > 1")
    hi = K
    step = 10.0 ** (-decimals)
    while hi - lo > step:
        mid = 0.5 * (lo + hi)
        if ratio(mid) > 1:
            hi = mid
        else:
            lo = mid
    return CertificateReport("existence", True, bb, K_threshold=hi,
                             terms={"ratio_at_threshold": ratio(hi), "ratio_below": ratio(lo) if lo > 0 else 0.0})
