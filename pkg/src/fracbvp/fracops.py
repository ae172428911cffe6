"""Grid-based fractional calculus on uniform meshes.

Riemann-Liouville integrals use product trapezoidal quadrature: the data is
interpolated piecewise linearly and the kernel ``(t - s)**(order - 1)`` is
integrated exactly on every panel, so the weak singularity at ``s = t`` never
gets evaluated pointwise.  Caputo derivatives follow the definition literally,
``D^beta u = I^(n - beta) u^(n)``, with second-order finite differences for
``u^(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def gamma(x: float) -> float:
    """Gamma function for positive arguments."""
    if not x > 0:
        raise DomainError(f"gamma requires x > 0, got {x!r}")
    return math.gamma(x)


def rgamma(x: float) -> float:
    """Reciprocal gamma, zero at the poles 0, -1, -2, ..."""
    if x <= 0 and float(x).is_integer():
        return 0.0
    return 1.0 / math.gamma(x)


@dataclass(frozen=True)
class UniformGrid:
    """Nodes ``t_j = j*T/(N-1)`` on ``[0, T]``."""

    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"grid horizon must be positive, got {self.T!r}")
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"grid needs N >= 2 nodes, got {self.N!r}")

    @property
    def h(self) -> float:
        return self.T / (self.N - 1)

    @property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.N) * self.h
        t[-1] = self.T
        return t

    def refine(self) -> "UniformGrid":
        """Grid with every panel halved."""
        return UniformGrid(self.T, 2 * self.N - 1)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function at the nodes of a grid."""

    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise DomainError(
                f"expected {self.grid.N} values, got array of shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("sampled values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: UniformGrid, fn: Callable) -> "SampledFunction":
        t = grid.nodes
        return cls(grid, np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape))

    @classmethod
    def constant(cls, grid: UniformGrid, c: float) -> "SampledFunction":
        return cls(grid, np.full(grid.N, float(c)))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            _same_grid(self, other)
            other = other.values
        return SampledFunction(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SampledFunction):
            _same_grid(self, other)
            other = other.values
        return SampledFunction(self.grid, self.values - other)

    def __mul__(self, c):
        if isinstance(c, SampledFunction):
            _same_grid(self, c)
            c = c.values
        return SampledFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)


def _same_grid(a: SampledFunction, b: SampledFunction) -> None:
    if a.grid != b.grid:
        raise DomainError("sampled functions live on different grids")


def _check_integral_order(order: float) -> float:
    order = float(order)
    if not order > 0:
        raise DomainError(f"integral order must be positive, got {order!r}")
    return order


# -- product trapezoidal weights ---------------------------------------------


@lru_cache(maxsize=64)
def _rl_matrix(N: int, order: float) -> np.ndarray:
    """Lower-triangular weights ``W`` with ``(I^order f)(t_n) ~ h**order * W @ f``.

    Integer-step form of the product trapezoidal rule; row ``n`` integrates the
    hat basis of each node ``j <= n`` against ``(n - x)**(order - 1)/Gamma(order)``.
    """
    a = order
    n = np.arange(N, dtype=float)[:, None]
    j = np.arange(N, dtype=float)[None, :]
    k = n - j  # distance in steps from node j to evaluation node n
    kp = np.clip(k, 0.0, None)
    interior = (kp + 1) ** (a + 1) - 2 * kp ** (a + 1) + np.clip(k - 1, 0.0, None) ** (a + 1)
    W = np.where(k > 0, interior, 0.0)
    # first column only sees the panel to its right
    nn = n[:, 0]
    W[:, 0] = np.where(nn > 0, np.clip(nn - 1, 0, None) ** (a + 1) - (nn - 1 - a) * nn**a, 0.0)
    np.fill_diagonal(W, 1.0)
    W[0, :] = 0.0
    W /= math.gamma(a + 2)
    W.setflags(write=False)
    return W


def rl_weights_at(grid: UniformGrid, order: float, t: float) -> np.ndarray:
    """Quadrature weights ``w`` with ``(I^order f)(t) ~ w @ f`` for any ``t`` in ``[0, T]``.

    Used for evaluation points that need not be nodes (the interior point of
    the boundary conditions).
    """
    a = _check_integral_order(order)
    if t < 0 or t > grid.T * (1 + 1e-14):
        raise DomainError(f"evaluation point {t!r} outside [0, {grid.T}]")
    h = grid.h
    w = np.zeros(grid.N)
    if t == 0.0:
        return w
    x = t / h  # evaluation point in step units
    m = min(int(math.floor(x)), grid.N - 1)
    # panels [j, j+1] fully below x, plus a partial panel [m, x]
    for j in range(0, min(m + 1, grid.N - 1)):
        lo, hi = float(j), min(float(j + 1), x)
        if hi <= lo:
            break
        # distances from x: u in [x - hi, x - lo]
        u1, u0 = x - hi, x - lo
        m0 = (u0**a - u1**a) / a
        # integral of (x - s)**(a-1) * (s - j) ds over [lo, hi]
        m1 = (x - j) * m0 - (u0 ** (a + 1) - u1 ** (a + 1)) / (a + 1)
        w[j] += m0 - m1
        w[j + 1] += m1
    return w * h**a / math.gamma(a)


def rl_integral(f: SampledFunction, order: float) -> SampledFunction:
    """Riemann-Liouville integral ``I^order f`` at every node."""
    a = _check_integral_order(order)
    g = f.grid
    return SampledFunction(g, g.h**a * (_rl_matrix(g.N, a) @ f.values))


def rl_integral_at(f: SampledFunction, order: float, t: float) -> float:
    """Riemann-Liouville integral ``I^order f`` at an arbitrary point of ``[0, T]``."""
    return float(rl_weights_at(f.grid, order, t) @ f.values)


def trapezoid(f: SampledFunction) -> float:
    """Plain trapezoidal integral over the whole grid."""
    return float(np.trapezoid(f.values, dx=f.grid.h)) if hasattr(np, "trapezoid") else float(
        np.trapz(f.values, dx=f.grid.h)
    )


# -- finite differences ------------------------------------------------------


@lru_cache(maxsize=None)
def _fd_weights(offsets: tuple[int, ...], deriv: int) -> np.ndarray:
    k = np.arange(len(offsets))
    V = np.array(offsets, dtype=float)[None, :] ** k[:, None]
    rhs = np.zeros(len(offsets))
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(V, rhs)


# (offsets near the left end, interior offsets); right end is mirrored.
_STENCILS = {
    1: ([(0, 1, 2)], (-1, 0, 1)),
    2: ([(0, 1, 2, 3)], (-1, 0, 1)),
    3: ([(0, 1, 2, 3, 4), (-1, 0, 1, 2, 3)], (-2, -1, 0, 1, 2)),
}


def derivative(u: SampledFunction, n: int) -> SampledFunction:
    """n-th derivative (n = 1, 2, 3) by second-order finite differences.

    Central stencils in the interior, one-sided second-order stencils at the
    ends.
    """
    if n not in _STENCILS:
        raise DomainError(f"finite-difference derivative of order {n} not supported")
    edge, interior = _STENCILS[n]
    N = u.grid.N
    need = max(len(interior), max(len(e) for e in edge))
    if N < need:
        raise DomainError(f"derivative of order {n} needs at least {need} nodes, got {N}")
    v = u.values
    out = np.empty(N)
    wi = _fd_weights(interior, n)
    r = -interior[0]
    out[r : N - r] = sum(w * v[r + o : N - r + o] for w, o in zip(wi, interior))
    sign = (-1) ** n
    for j, offs in enumerate(edge):
        w = _fd_weights(offs, n)
        idx = np.array(offs) + j
        out[j] = w @ v[idx]
        out[N - 1 - j] = sign * (w @ v[N - 1 - idx])
    return SampledFunction(u.grid, out / u.grid.h**n)


def caputo_derivative(u: SampledFunction, beta: float) -> SampledFunction:
    """Caputo derivative ``D^beta u`` for ``0 < beta <= 3``.

    ``n = ceil(beta)`` classical derivatives are taken by finite differences
    and then integrated with ``I^(n - beta)``; integer orders skip the
    integral.
    """
    beta = float(beta)
    if not 0 < beta <= 3:
        raise DomainError(f"Caputo order must lie in (0, 3], got {beta!r}")
    if u.grid.N < 4:
        raise DomainError("Caputo derivative needs at least 4 nodes")
    n = math.ceil(beta)
    du = derivative(u, n)
    if n - beta == 0:
        return du
    return rl_integral(du, n - beta)


def caputo_monomial(gamma_exp: float, alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """Exact Caputo derivative of ``t**gamma_exp`` as a function of ``t``.

    Zero when the exponent is one of ``0, ..., n-1`` (``n = ceil(alpha)``),
    ``Gamma(g+1)/Gamma(g-alpha+1) * t**(g-alpha)`` otherwise.
    """
    g, a = float(gamma_exp), float(alpha)
    if g < 0 or not a > 0:
        raise DomainError("need gamma_exp >= 0 and alpha > 0")
    n = math.ceil(a)  # floor(alpha) + 1 for non-integer orders
    if g.is_integer() and g <= n - 1:
        return lambda t: np.zeros_like(np.asarray(t, dtype=float))
    shifted = g - a + 1
    if shifted <= 0 and shifted.is_integer():
        raise DomainError(f"Gamma({shifted}) is a pole: t^{g} has no Caputo derivative of order {a}")
    if g < n - 1:
        # the n-th classical derivative is not integrable at 0
        raise DomainError(f"t^{g} is not regular enough for a Caputo derivative of order {a}")
    c = math.gamma(g + 1) * rgamma(shifted)
    return lambda t: c * np.asarray(t, dtype=float) ** (g - a)
