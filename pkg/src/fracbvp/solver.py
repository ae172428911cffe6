"""Linear solves, the fixed-point operator and Picard iteration.

The iteration runs on the triple ``(u, D^beta1 u, D^beta2 u)``: both
derivative channels are produced by their own integral representations
rather than by differentiating ``u`` again.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fracops import (
    DomainError,
    SampledFunction,
    UniformGrid,
    caputo_derivative,
    rgamma,
    rl_integral,
    rl_weights_at,
    trapezoid,
)
from .greenfn import StructuralConstants, omega_d, structural_constants, theta
from .problem import ProblemSpec

log = logging.getLogger(__name__)

Triple = tuple[SampledFunction, SampledFunction, SampledFunction]


class EvaluationError(RuntimeError):
    """The nonlinearity or a boundary integrand produced a non-finite value."""


@dataclass(frozen=True)
class KCoefficients:
    k0: float
    k1: float
    k2: float


@dataclass(frozen=True)
class Residuals:
    ode_residual_sup: float
    boundary_residuals: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    u: SampledFunction
    du_beta1: SampledFunction
    du_beta2: SampledFunction
    iterations: int = 0
    history: tuple[float, ...] = ()
    converged: bool = True
    residuals: Optional[Residuals] = None

    @property
    def triple(self) -> Triple:
        return (self.u, self.du_beta1, self.du_beta2)

    @property
    def beta_norm(self) -> float:
        return beta_norm(self.triple)

    @property
    def grid(self) -> UniformGrid:
        return self.u.grid


def beta_norm(triple: Triple) -> float:
    """``sup|u| + sup|D^beta1 u| + sup|D^beta2 u|`` over the nodes."""
    return sum(x.sup() for x in triple)


def _diff_norm(x: Triple, y: Triple) -> float:
    return sum(float(np.max(np.abs(p.values - q.values))) for p, q in zip(x, y))


# -- shared quadrature pieces ------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Functionals:
    """Point values ``I^(alpha-beta_i) F`` at ``T`` and ``eta`` for the three rows."""

    at_T: tuple[float, float, float]
    at_eta: tuple[float, float, float]


def _row_functionals(spec: ProblemSpec, F: SampledFunction) -> _Functionals:
    at_T, at_eta = [], []
    for beta in spec.betas:
        order = spec.alpha - beta
        at_T.append(float(rl_weights_at(F.grid, order, spec.T) @ F.values))
        at_eta.append(float(rl_weights_at(F.grid, order, spec.eta) @ F.values))
    return _Functionals(tuple(at_T), tuple(at_eta))


def _row_constants(spec: ProblemSpec, fun: _Functionals, g_integrals) -> tuple[float, float, float]:
    """``C_i = b_i I F(T) + a_i I F(eta) - lam_i int g_i``; no ``a``-term in row 0."""
    C = []
    for i in range(3):
        c = spec.b[i] * fun.at_T[i] - spec.lam[i] * g_integrals[i]
        if i > 0:
            c += spec.a[i] * fun.at_eta[i]
        C.append(c)
    return tuple(C)


def _check_grid(spec: ProblemSpec, grid: UniformGrid) -> None:
    if abs(grid.T - spec.T) > 1e-12 * spec.T:
        raise DomainError(f"grid horizon {grid.T} does not match problem horizon {spec.T}")


# -- linear problems ---------------------------------------------------------


def k_coefficients(spec: ProblemSpec, f: SampledFunction, g_integrals) -> KCoefficients:
    """Closed-form constants of ``u = I^alpha f - k0 - k1 t - k2 t^2``."""
    _check_grid(spec, f.grid)
    sc = structural_constants(spec)
    fun = _row_functionals(spec, f)
    C0, C1, C2 = _row_constants(spec, fun, g_integrals)
    b0, T = spec.b[0], spec.T
    w0 = sc.omega0
    k2 = sc.mu_beta2 * C2
    k1 = sc.nu_beta1 * C1 - sc.nu_beta1 * sc.mu_ratio * C2
    k0 = (w0 * C0 - b0 * sc.nu_beta1 * T * w0 * C1
          + b0 * sc.nu_beta1 * T * w0 * sc.mu_ratio * C2 - b0 * sc.mu_beta2 * T**2 * w0 * C2)
    return KCoefficients(k0, k1, k2)


def linear_direct_solve(spec: ProblemSpec, f: SampledFunction, g_integrals) -> SolutionBundle:
    """Solve ``D^alpha u = f`` with the boundary integrals given as numbers."""
    k = k_coefficients(spec, f, g_integrals)
    t = f.grid.nodes
    b1, b2 = spec.beta1, spec.beta2
    u = rl_integral(f, spec.alpha).values - k.k0 - k.k1 * t - k.k2 * t**2
    v = (rl_integral(f, spec.alpha - b1).values
         - k.k1 * t ** (1 - b1) * rgamma(2 - b1) - 2 * k.k2 * t ** (2 - b1) * rgamma(3 - b1))
    w = rl_integral(f, spec.alpha - b2).values - 2 * k.k2 * t ** (2 - b2) * rgamma(3 - b2)
    g = f.grid
    return SolutionBundle(SampledFunction(g, u), SampledFunction(g, v), SampledFunction(g, w))


def representation_solve(spec: ProblemSpec, f: SampledFunction, g_integrals,
                         sc: StructuralConstants | None = None) -> Triple:
    """Evaluate the integral representation (the Green-kernel form) for a given forcing."""
    _check_grid(spec, f.grid)
    sc = sc or structural_constants(spec)
    fun = _row_functionals(spec, f)
    C = _row_constants(spec, fun, g_integrals)
    t = f.grid.nodes
    u = rl_integral(f, spec.alpha).values + sum(theta(spec, i, t, sc) * C[i] for i in range(3))
    v = rl_integral(f, spec.alpha - spec.beta1).values + sum(
        omega_d(spec, i, 1, t, sc) * C[i] for i in (1, 2))
    w = rl_integral(f, spec.alpha - spec.beta2).values + omega_d(spec, 2, 2, t, sc) * C[2]
    g = f.grid
    return (SampledFunction(g, u), SampledFunction(g, v), SampledFunction(g, w))


# -- nonlinear operator ------------------------------------------------------


def _evaluate(name: str, fn, *args) -> np.ndarray:
    vals = np.asarray(fn(*args), dtype=float)
    vals = np.broadcast_to(vals, np.shape(args[0]))
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise EvaluationError(f"{name} is not finite at node {int(bad[0])}")
    return vals


def forcing_trace(spec: ProblemSpec, triple: Triple) -> SampledFunction:
    """``f(t, u, D^beta1 u, D^beta2 u)`` evaluated nodewise."""
    u, v, w = triple
    t = u.grid.nodes
    return SampledFunction(u.grid, _evaluate("f", spec.f, t, u.values, v.values, w.values))


def boundary_integrals(spec: ProblemSpec, u: SampledFunction) -> tuple[float, float, float]:
    """Trapezoidal values of ``int_0^T g_i(s, u(s)) ds``."""
    t = u.grid.nodes
    return tuple(
        trapezoid(SampledFunction(u.grid, _evaluate(f"g{i}", gi, t, u.values)))
        for i, gi in enumerate(spec.g)
    )


def apply_operator(spec: ProblemSpec, triple: Triple, sc: StructuralConstants | None = None) -> Triple:
    """One application of the fixed-point map to ``(u, D^beta1 u, D^beta2 u)``."""
    F = forcing_trace(spec, triple)
    return representation_solve(spec, F, boundary_integrals(spec, triple[0]), sc)


def zero_triple(grid: UniformGrid) -> Triple:
    z = SampledFunction.constant(grid, 0.0)
    return (z, z, z)


def picard_solve(spec: ProblemSpec, grid: UniformGrid, tol: float = 1e-10, max_iter: int = 100,
                 initial: Optional[Triple] = None) -> SolutionBundle:
    """Iterate the fixed-point map until successive iterates differ by less than
    ``tol`` in the beta-norm.

    Non-convergence is reported through ``converged=False`` on the returned
    bundle rather than raised.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    _check_grid(spec, grid)
    sc = structural_constants(spec)
    current = initial if initial is not None else zero_triple(grid)
    history = []
    converged = False
    for it in range(1, max_iter + 1):
        new = apply_operator(spec, current, sc)
        d = _diff_norm(new, current)
        history.append(d)
        current = new
        log.debug("picard iteration %d: |du|_beta = %.3e", it, d)
        if d < tol:
            converged = True
            break
    bundle = SolutionBundle(*current, iterations=it, history=tuple(history), converged=converged)
    return SolutionBundle(*current, iterations=it, history=tuple(history), converged=converged,
                          residuals=residual_check(spec, bundle))


# -- verification ------------------------------------------------------------


def _interp4(x: SampledFunction, t: float) -> float:
    """Four-point Lagrange interpolation at an off-grid point."""
    g = x.grid
    j = int(math.floor(t / g.h))
    if abs(t - j * g.h) < 1e-14 * g.T:
        return float(x.values[j])
    lo = min(max(j - 1, 0), g.N - 4)
    idx = np.arange(lo, lo + 4)
    nodes = g.nodes[idx]
    vals = x.values[idx]
    out = 0.0
    for m in range(4):
        others = np.delete(nodes, m)
        out += vals[m] * np.prod((t - others) / (nodes[m] - others))
    return float(out)


def residual_check(spec: ProblemSpec, bundle: SolutionBundle) -> Residuals:
    """Defects of the differential equation and of the three boundary rows.

    ``D^alpha u`` is recomputed from ``u`` alone; the sup is taken over interior
    nodes.  The rows use the bundle's derivative channels and trapezoidal
    integrals of ``g_i``.
    """
    u, v, w = bundle.triple
    Da = caputo_derivative(u, spec.alpha)
    F = forcing_trace(spec, bundle.triple)
    ode = float(np.max(np.abs(Da.values[1:-1] - F.values[1:-1])))
    gi = boundary_integrals(spec, u)
    a, b, lam = spec.a, spec.b, spec.lam
    rows = (
        a[0] * u.values[0] + b[0] * u.values[-1] - lam[0] * gi[0],
        a[1] * _interp4(v, spec.eta) + b[1] * v.values[-1] - lam[1] * gi[1],
        a[2] * _interp4(w, spec.eta) + b[2] * w.values[-1] - lam[2] * gi[2],
    )
    return Residuals(ode, tuple(abs(float(r)) for r in rows))
