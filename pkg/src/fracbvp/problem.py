"""Problem definitions for the three-point / integral-condition fractional BVP.

The equation is ``D^alpha u = f(t, u, D^beta1 u, D^beta2 u)`` on ``[0, T]``
with ``2 < alpha <= 3`` and boundary rows

    a0 u(0)          + b0 u(T)          = lam0 * int_0^T g0(s, u(s)) ds
    a1 D^beta1 u(eta) + b1 D^beta1 u(T) = lam1 * int_0^T g1(s, u(s)) ds
    a2 D^beta2 u(eta) + b2 D^beta2 u(T) = lam2 * int_0^T g2(s, u(s)) ds
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .fracops import DomainError, SampledFunction, UniformGrid, caputo_monomial

Nonlinearity = Callable[..., np.ndarray]  # (t, u, v, w) -> f, vectorised over nodes
BoundaryIntegrand = Callable[..., np.ndarray]  # (t, u) -> g
Weight = Union[float, SampledFunction]


def _zero_f(t, u, v, w):
    return np.zeros_like(np.asarray(t, dtype=float))


def _zero_g(t, u):
    return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ProblemSpec:
    alpha: float
    beta1: float
    beta2: float
    T: float
    eta: float
    a: tuple[float, float, float]
    b: tuple[float, float, float]
    lam: tuple[float, float, float]
    f: Nonlinearity = _zero_f
    g: tuple[BoundaryIntegrand, BoundaryIntegrand, BoundaryIntegrand] = (_zero_g,) * 3
    # registry names, kept so a spec can be written back to a problem file
    f_name: str = "zero"
    g_names: tuple[str, str, str] = ("zero", "zero", "zero")

    def __post_init__(self):
        for name in ("a", "b", "lam"):
            val = tuple(float(x) for x in getattr(self, name))
            if len(val) != 3:
                raise DomainError(f"{name} must have three entries")
            object.__setattr__(self, name, val)
        if len(self.g) != 3:
            raise DomainError("g must have three integrands")

    @property
    def betas(self) -> tuple[float, float, float]:
        """Orders of the three boundary rows (the first row has order 0)."""
        return (0.0, self.beta1, self.beta2)

    def with_f(self, f: Nonlinearity, name: str = "custom") -> "ProblemSpec":
        return replace(self, f=f, f_name=name)

    def with_g(self, g, names=("custom",) * 3) -> "ProblemSpec":
        return replace(self, g=tuple(g), g_names=tuple(names))


@dataclass(frozen=True)
class ValidationReport:
    failures: tuple[tuple[str, float], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok

    def lines(self) -> list[str]:
        return [f"violated: {cond} (computed {val:.12g})" for cond, val in self.failures]


def validate(spec: ProblemSpec) -> ValidationReport:
    """Check the order ranges and the non-degeneracy inequalities."""
    fails = []
    s = spec
    if not 2 < s.alpha <= 3:
        fails.append(("2 < alpha <= 3", s.alpha))
    if not 0 < s.beta1 <= 1:
        fails.append(("0 < beta1 <= 1", s.beta1))
    if not 1 < s.beta2 <= 2:
        fails.append(("1 < beta2 <= 2", s.beta2))
    if not s.T > 0:
        fails.append(("T > 0", s.T))
    if not 0 < s.eta < s.T:
        fails.append(("0 < eta < T", s.eta))
    if fails:
        return ValidationReport(tuple(fails))
    a, b, eta, T = s.a, s.b, s.eta, s.T
    checks = [
        ("a0 + b0 != 0", a[0] + b[0]),
        ("a1*eta^(1-beta1) + b1*T^(1-beta1) != 0", a[1] * eta ** (1 - s.beta1) + b[1] * T ** (1 - s.beta1)),
        ("a1*eta^(2-beta1) + b1*T^(2-beta1) != 0", a[1] * eta ** (2 - s.beta1) + b[1] * T ** (2 - s.beta1)),
        ("a2*eta^(2-beta2) + b2*T^(2-beta2) != 0", a[2] * eta ** (2 - s.beta2) + b[2] * T ** (2 - s.beta2)),
    ]
    fails = [(cond, val) for cond, val in checks if val == 0 or not math.isfinite(val)]
    return ValidationReport(tuple(fails))


@dataclass(frozen=True)
class LipschitzData:
    """Lipschitz weights of ``f`` (in L^(1/tau)) and of the ``g_i`` (in L^1)."""

    l_f: Weight
    l_g: tuple[Weight, Weight, Weight]
    tau: Optional[float] = None

    def __post_init__(self):
        for w in (self.l_f, *self.l_g):
            _check_weight(w)
        if self.tau is not None and not 0 < self.tau < 1:
            raise DomainError(f"tau must lie in (0, 1), got {self.tau!r}")

    def scaled(self, c: float) -> "LipschitzData":
        """Same data with ``l_f`` multiplied by ``c``."""
        return replace(self, l_f=self.l_f * c)


@dataclass(frozen=True)
class GrowthData:
    """Growth bounds ``|f| <= l_f * phi(|u|+|v|+|w|)``, ``|g_i| <= l_gi * psi_i(|u|)``.

    ``phi`` and ``psi`` must be nondecreasing and nonnegative on ``[0, inf)``;
    the weights ``l_f``, ``l_g`` enter through their norms.
    """

    phi: Callable[[float], float]
    psi: tuple[Callable[[float], float], Callable[[float], float], Callable[[float], float]]
    l_f: Weight = 1.0
    l_g: tuple[Weight, Weight, Weight] = (1.0, 1.0, 1.0)
    tau: Optional[float] = None


def _check_weight(w: Weight) -> None:
    if isinstance(w, SampledFunction):
        if np.any(w.values < 0):
            raise DomainError("Lipschitz/growth weights must be nonnegative")
    elif not (float(w) >= 0):
        raise DomainError(f"Lipschitz/growth weights must be nonnegative, got {w!r}")


# -- builtin examples --------------------------------------------------------

EXAMPLE1_DEFAULT_LF = 0.05


def example1_f(lf: float = EXAMPLE1_DEFAULT_LF) -> Nonlinearity:
    def f(t, u, v, w):
        au, av = np.abs(u), np.abs(v)
        return lf * (au / (1 + au) + av / (1 + av) + np.arctan(w))

    return f


def example1_g() -> tuple[BoundaryIntegrand, BoundaryIntegrand, BoundaryIntegrand]:
    return (
        lambda t, u: u / (1 + t) ** 2,
        lambda t, u: np.exp(t) * u / (1 + 2 * np.exp(t)) + 0.5,
        lambda t, u: u / (1 + np.exp(t)) + 0.75,
    )


def example2_f(t, u, v, w):
    au3 = np.abs(u) ** 3
    sv = np.abs(np.sin(v))
    return au3 / (9 * (au3 + 3)) + sv / (9 * (sv + 1)) + 1.0 / 12


def example2_g() -> tuple[BoundaryIntegrand, BoundaryIntegrand, BoundaryIntegrand]:
    return (
        lambda t, u: u / (3 * (1 + t) ** 2),
        lambda t, u: np.exp(t) * u / (3 * (1 + np.exp(t)) ** 2),
        lambda t, u: u / (3 * (1 + np.exp(t)) ** 2),
    )


def _example_base() -> dict:
    return dict(
        alpha=2.5, beta1=0.5, beta2=1.5, T=1.0, eta=0.1,
        a=(1.0, 1.0, 1.0), b=(1.0, 1.0, 1.0), lam=(1.0, 0.5, 1.0 / 3),
    )


def example(id: int, lf: float = EXAMPLE1_DEFAULT_LF):
    """The two worked examples.

    ``example(1, lf)`` returns ``(spec, LipschitzData)`` with ``f`` scaled by
    ``lf``; ``example(2)`` returns ``(spec, GrowthData)``.
    """
    if id == 1:
        spec = ProblemSpec(
            **_example_base(), f=example1_f(lf), g=example1_g(),
            f_name=f"example1({lf!r})", g_names=("example1_g0", "example1_g1", "example1_g2"),
        )
        return spec, LipschitzData(l_f=float(lf), l_g=(1.0, 1.0, 1.0))
    if id == 2:
        spec = ProblemSpec(
            **_example_base(), f=example2_f, g=example2_g(),
            f_name="example2", g_names=("example2_g0", "example2_g1", "example2_g2"),
        )
        ident = lambda K: K  # noqa: E731
        growth = GrowthData(
            phi=lambda K: 11.0 / 12, psi=(ident, ident, ident),
            l_f=1.0 / 3, l_g=(1.0 / 3, 1.0 / 3, 1.0 / 3),
        )
        return spec, growth
    raise DomainError(f"unknown example id {id!r}; expected 1 or 2")


# -- manufactured solutions --------------------------------------------------


@dataclass(frozen=True)
class Manufactured:
    """Exact data for ``u*(t) = t**gamma_exp``.

    ``spec`` is the input problem with the forcing replaced by ``D^alpha u*``
    and each ``g_i`` replaced by the constant for which ``lam_i * int g_i``
    equals the boundary value of row ``i``.
    """

    spec: ProblemSpec
    gamma_exp: float
    forcing: SampledFunction
    rows: tuple[float, float, float]
    u: Callable[[np.ndarray], np.ndarray]
    du_beta1: Callable[[np.ndarray], np.ndarray]
    du_beta2: Callable[[np.ndarray], np.ndarray]

    def exact(self, grid: UniformGrid) -> tuple[SampledFunction, SampledFunction, SampledFunction]:
        return tuple(SampledFunction.from_callable(grid, fn) for fn in (self.u, self.du_beta1, self.du_beta2))


def manufactured(spec: ProblemSpec, gamma_exp: float, grid: UniformGrid) -> Manufactured:
    g = float(gamma_exp)
    Dalpha = caputo_monomial(g, spec.alpha)
    D1 = caputo_monomial(g, spec.beta1)
    D2 = caputo_monomial(g, spec.beta2)
    u = lambda t: np.asarray(t, dtype=float) ** g  # noqa: E731
    T, eta, a, b = spec.T, spec.eta, spec.a, spec.b
    rows = (
        a[0] * float(u(0.0)) + b[0] * float(u(T)),
        a[1] * float(D1(eta)) + b[1] * float(D1(T)),
        a[2] * float(D2(eta)) + b[2] * float(D2(T)),
    )
    consts = []
    for i, (row, lam) in enumerate(zip(rows, spec.lam)):
        if lam == 0:
            if row != 0:
                raise DomainError(f"row {i} needs value {row:.6g} but lambda{i} = 0")
            consts.append(0.0)
        else:
            consts.append(row / (lam * T))
    gfuncs = tuple(_const_g(c) for c in consts)
    f = lambda t, uu, v, w: Dalpha(t)  # noqa: E731
    new_spec = replace(
        spec, f=f, g=gfuncs, f_name=f"monomial({g!r})",
        g_names=tuple(f"const({c!r})" for c in consts),
    )
    forcing = SampledFunction.from_callable(grid, Dalpha)
    return Manufactured(new_spec, g, forcing, rows, u, D1, D2)


def _const_g(c: float) -> BoundaryIntegrand:
    return lambda t, u: np.full_like(np.asarray(t, dtype=float), c)


# -- registry used by problem files ------------------------------------------


def _parse_call(name: str) -> tuple[str, list[float]]:
    name = name.strip()
    if "(" not in name:
        return name, []
    if not name.endswith(")"):
        raise DomainError(f"malformed registry entry {name!r}")
    head, args = name[:-1].split("(", 1)
    vals = [float(x) for x in args.split(",") if x.strip()]
    return head.strip(), vals


def resolve_f(name: str, alpha: float) -> Nonlinearity:
    """Nonlinearity registry: ``zero``, ``example1(lf)``, ``example2``,
    ``const(c)``, ``monomial(gamma)`` (forcing ``D^alpha t^gamma``)."""
    head, args = _parse_call(name)
    if head == "zero" and not args:
        return _zero_f
    if head == "example1" and len(args) <= 1:
        return example1_f(*args)
    if head == "example2" and not args:
        return example2_f
    if head == "const" and len(args) == 1:
        c = args[0]
        return lambda t, u, v, w: np.full_like(np.asarray(t, dtype=float), c)
    if head == "monomial" and len(args) == 1:
        D = caputo_monomial(args[0], alpha)
        return lambda t, u, v, w: D(t)
    raise DomainError(f"unknown nonlinearity {name!r}")


def resolve_g(name: str, index: int) -> BoundaryIntegrand:
    """Boundary-integrand registry: ``zero``, ``const(c)``, ``example1_gi``, ``example2_gi``."""
    head, args = _parse_call(name)
    if head == "zero" and not args:
        return _zero_g
    if head == "const" and len(args) == 1:
        return _const_g(args[0])
    for ex, table in (("example1", example1_g), ("example2", example2_g)):
        for i in range(3):
            if head == f"{ex}_g{i}" and not args:
                return table()[i]
    raise DomainError(f"unknown boundary integrand {name!r} for g{index}")
