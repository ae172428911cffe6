import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fracbvp.certify import rho_bounds
from fracbvp.fracops import DomainError, SampledFunction, UniformGrid, caputo_derivative
from fracbvp.greenfn import green, green_g0, omega, omega_d, structural_constants, theta
from fracbvp.problem import ProblemSpec, example


def ex1():
    return example(1)[0]


def test_example1_constants():
    sc = structural_constants(ex1())
    assert sc.omega0 == 0.5
    assert sc.nu_beta1 == pytest.approx(math.gamma(1.5) / (0.1**0.5 + 1), rel=1e-14)
    assert sc.nu_beta1 == pytest.approx(0.673, abs=5e-4)
    # frozen from a 20-digit mpmath evaluation
    assert sc.mu_beta1 == pytest.approx(0.64429577280087715, rel=1e-13)
    assert sc.mu_beta2 == pytest.approx(0.33665409146270088, rel=1e-13)


def test_integer_order_limits():
    spec = replace(ex1(), beta1=1.0, beta2=2.0, a=(1.0, 0.0, 0.0), b=(1.0, 1.0, 1.0))
    sc = structural_constants(spec)
    assert sc.nu_beta1 == pytest.approx(1.0)
    assert sc.mu_beta2 == pytest.approx(0.5)


def test_omega1_root():
    spec = ex1()
    root = spec.b[0] * spec.T / (spec.a[0] + spec.b[0])
    assert omega(spec, 1, root) == pytest.approx(0.0, abs=1e-15)


def test_omega_derivatives_at_origin():
    spec = ex1()
    assert omega_d(spec, 2, 2, 0.0) == 0.0
    assert omega_d(spec, 1, 2, 0.7) == 0.0
    assert omega_d(spec, 0, 1, 0.7) == 0.0


def test_omega_sup_below_rho():
    spec = ex1()
    t = np.linspace(0, spec.T, 1001)
    rb = rho_bounds(spec)
    for i in range(3):
        assert np.max(np.abs(omega(spec, i, t))) <= rb.rho[i] + 1e-12
    for i in (1, 2):
        assert np.max(np.abs(omega_d(spec, i, 1, t))) <= rb.rho_tilde[i] + 1e-12


def test_omega_rejects_outside_horizon():
    with pytest.raises(DomainError):
        omega(ex1(), 1, 1.5)
    with pytest.raises(DomainError):
        omega(ex1(), 3, 0.5)


@pytest.mark.parametrize("i, which", [(1, 1), (2, 1), (2, 2)])
def test_omega_derivative_matches_numeric(i, which):
    spec = ex1()
    beta = spec.betas[which]
    errs = []
    for N in (129, 257, 513):
        grid = UniformGrid(spec.T, N)
        w = SampledFunction(grid, omega(spec, i, grid.nodes))
        errs.append(np.max(np.abs(caputo_derivative(w, beta).values - omega_d(spec, i, which, grid.nodes))))
    assert errs[-1] < 1e-8 or errs[-1] < errs[0]


def test_omega_rows_are_dual():
    # row functional of omega_j picks out the j-th boundary row
    spec = ex1()
    a, b, T, eta = spec.a, spec.b, spec.T, spec.eta
    rows = np.zeros((3, 3))
    for j in range(3):
        Th = lambda t, j=j: theta(spec, j, t)  # noqa: E731
        rows[0, j] = a[0] * Th(0.0) + b[0] * Th(T)
        for i in (1, 2):
            D = lambda t, j=j, i=i: omega_d(spec, j, i, t) * (-1 if j == 0 else 1)  # noqa: E731
            rows[i, j] = a[i] * D(eta) + b[i] * D(T)
    np.testing.assert_allclose(rows, -np.eye(3), atol=1e-13)


def test_g0_finite_at_origin():
    spec = ex1()
    v = green(spec, 0.0, 0.0)
    assert np.isfinite(v) and v == pytest.approx(green_g0(spec, 0.0, 0.0))


def test_kernel_vanishes_for_pure_a_terms_after_eta():
    spec = replace(ex1(), b=(0.0, 0.0, 0.0), a=(1.0, 1.0, 1.0), lam=(3.0, -2.0, 5.0))
    t = np.linspace(0, 0.5, 6)
    s = 0.7
    assert np.all(green(spec, t, s) == 0.0)


def reduced_spec(alpha=3.0):
    return ProblemSpec(
        alpha=alpha, beta1=1.0, beta2=2.0, T=1.0, eta=0.3,
        a=(1.0, 0.0, 1.0), b=(0.0, 1.0, 0.0), lam=(1.0, 1.0, 1.0),
    )


def test_reduced_third_order_kernel():
    # u''' = f, u(0) = 0, u'(T) = 0, u''(eta) = 0. A point load at s > eta makes
    # u'' vanish left of s, so u(t) = -(T - s) t for t <= s.
    spec = reduced_spec()
    for t, s in [(0.1, 0.5), (0.4, 0.9), (0.5, 0.5)]:
        expected = -t * (spec.T - s) ** (spec.alpha - 2) / math.gamma(spec.alpha - 1)
        assert green(spec, t, s) == pytest.approx(expected, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    t=st.floats(0, 1), s=st.floats(0.11, 0.99),
    da=st.tuples(*[st.floats(-2, 2)] * 3),
)
def test_indicator_hides_a_terms_after_eta(t, s, da):
    spec = replace(ex1(), eta=0.1)
    moved = replace(spec, a=tuple(x + d for x, d in zip(spec.a, da)))
    # mu, nu depend on a, so compare the a-part only through the eta terms:
    # with b fixed and the same constants the b-part is unchanged
    sc = structural_constants(spec)
    assert green_g0(moved, t, s, sc) == pytest.approx(green_g0(spec, t, s, sc), abs=1e-12)


def test_kernel_representation_quad_oracle():
    # u(t) = int G(t, s) f(s) ds for the linear problem with g = 0, checked
    # against the k-coefficient solution for f = 1 (plain adaptive quadrature)
    from fracbvp.solver import linear_direct_solve

    spec = ex1()
    grid = UniformGrid(spec.T, 129)
    f = SampledFunction.constant(grid, 1.0)
    direct = linear_direct_solve(spec, f, (0.0, 0.0, 0.0))
    for j in (0, 17, 64, 100, 128):
        t = grid.nodes[j]
        pts = sorted({spec.eta, t} - {0.0, spec.T})
        val, _ = integrate.quad(lambda s: float(green(spec, t, s)), 0, spec.T, points=pts, limit=200)
        assert val == pytest.approx(direct.u.values[j], abs=1e-9)
