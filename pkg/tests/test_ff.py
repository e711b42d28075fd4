import math

import mpmath
import numpy as np
import pytest
import scipy.special
from hypothesis import given
from hypothesis import strategies as st

from thermokms.errors import DivergenceError, FunctionClassError, ParameterError
from thermokms.ff import (
    FFParams,
    eigen_residuals,
    ff_eigenfunction,
    ff_eigenmeasure,
    ff_equilibria,
    ff_kms_functional,
    ff_potential,
    ff_pressure,
    power_tail,
    surrogate_error_bound,
    surrogate_weight,
    zeta_truncated,
)
from thermokms.transfer import leading_triple


@pytest.fixture(scope="module")
def params3():
    return FFParams(3.0)


@given(st.floats(1.2, 8.0), st.integers(16, 200))
def test_power_tail_against_hurwitz_zeta(s, N):
    assert power_tail(s, N) == pytest.approx(scipy.special.zeta(s, N + 1), rel=1e-12)


@given(st.floats(1.5, 10.0))
def test_zeta_against_scipy(gamma):
    assert zeta_truncated(gamma, 1e-12) == pytest.approx(scipy.special.zeta(gamma), abs=1e-12)


def test_zeta_divergence():
    with pytest.raises(DivergenceError):
        zeta_truncated(1.0)
    with pytest.raises(DivergenceError):
        power_tail(0.5, 10)


def test_parameter_validation():
    with pytest.raises(ParameterError):
        FFParams(2.0)
    with pytest.raises(ParameterError):
        FFParams(3.0, k_max=4)
    with pytest.raises(ParameterError):
        FFParams(3.0, tol=0.0)


def test_zeta3_value(params3):
    assert abs(params3.zeta - 1.2020569032) <= 1e-10


def test_eigenmeasure_masses(params3):
    nu = ff_eigenmeasure(params3)
    assert nu.partition_masses[0] == pytest.approx(1 / params3.zeta, rel=1e-15)
    t = np.arange(1, 6)
    np.testing.assert_allclose(nu.partition_masses[:5], t**-3.0 / params3.zeta, rtol=1e-15)
    # full mass: tabulated atoms plus closed-form tail
    assert nu.tails[0] == pytest.approx(1.0, abs=1e-13)
    assert 0 < nu.mass_deficit <= params3.mass_tail_bound


def test_cylinder_masses_are_consistent(params3):
    nu = ff_eigenmeasure(params3)
    # [w] = [w0] + [w1] for every word w
    for word in [(), (0,), (1,), (1, 1), (0, 1), (1, 0, 1)]:
        whole = nu.cylinder_mass(word) if word else 1.0
        split = nu.cylinder_mass(word + (0,)) + nu.cylinder_mass(word + (1,))
        assert split == pytest.approx(whole, abs=1e-13)
    with pytest.raises(ValueError):
        nu.cylinder_mass((2,))


def test_potential_mass_deficit(params3):
    pot = ff_potential(params3)
    assert pot.s[0] == pytest.approx(-math.log(params3.zeta))
    # e^{s_k} = (k+1)^-gamma / zeta
    np.testing.assert_allclose(np.exp(pot.s[:10]), np.arange(1, 11) ** -3.0 / params3.zeta, rtol=1e-13)
    assert 0 < pot.mass_deficit <= params3.mass_tail_bound


def test_eigenfunction_closed_forms(params3):
    ef = ff_eigenfunction(params3)
    assert ef.u == pytest.approx(scipy.special.zeta(3) / scipy.special.zeta(2), abs=1e-12)
    assert ef.u == pytest.approx(0.7307629695, abs=1e-10)
    assert abs(ef.u - ef.u_series) <= 1e-8
    assert eigen_residuals(params3).max() <= 1e-10
    assert ef.h_tilde[0] == pytest.approx(params3.zeta, rel=1e-12)


@given(st.floats(2.2, 6.0))
def test_eigenfunction_residual_other_gammas(gamma):
    params = FFParams(gamma, k_max=2000)
    assert eigen_residuals(params).max() <= 1e-10


def polylog_pressure(gamma, beta):
    # sum_n n^{-gamma beta} z^n = zeta(gamma)^beta with z = e^{-P}
    target = mpmath.zeta(gamma) ** beta
    f = lambda P: mpmath.polylog(gamma * beta, mpmath.e ** (-P)) - target
    return float(mpmath.findroot(f, (mpmath.mpf("1e-6"), mpmath.mpf(3)), solver="anderson"))


@pytest.mark.parametrize("beta", [0.2, 0.5, 0.8])
def test_pressure_against_polylog_oracle(params3, beta):
    assert ff_pressure(params3, beta) == pytest.approx(polylog_pressure(3.0, beta), abs=1e-9)


def test_pressure_shape(params3):
    assert ff_pressure(params3, 0.0) == pytest.approx(math.log(2), abs=1e-10)
    for beta in (1.0, 1.5, 2.0, 5.0):
        assert ff_pressure(params3, beta) == 0.0
    grid = np.linspace(0, 1, 50, endpoint=False)
    P = [ff_pressure(params3, b) for b in grid]
    assert all(b < a for a, b in zip(P, P[1:]))
    assert P[-1] > 0


def test_equilibria_at_transition(params3):
    eq = ff_equilibria(params3)
    mt = eq["mu_tilde"]
    assert eq["pressure"] == 0.0
    assert mt["total_mass"] == pytest.approx(1.0, abs=1e-10)
    assert 0 < mt["entropy"] < math.log(2)
    assert mt["variational_value"] == pytest.approx(eq["dirac_111"]["variational_value"], abs=1e-12)


def test_kms_functional_on_partition_functions(params3):
    nu = ff_eigenmeasure(params3)
    assert ff_kms_functional(params3, 1.0, 0, 1.0, nu) == pytest.approx(1.0, abs=1e-13)
    assert ff_kms_functional(params3, [1.0, 0.0], 2, 1.0, nu) == pytest.approx(nu.partition_masses[0] / 4)
    with pytest.raises(ValueError):
        ff_kms_functional(params3, 1.0, -1, 1.0, nu)
    with pytest.raises(FunctionClassError):
        ff_kms_functional(params3, [np.nan], 0, 1.0, nu)


@pytest.mark.parametrize("beta,depth", [(0.3, 8), (0.6, 10)])
def test_surrogate_pressure_within_bound(params3, beta, depth):
    W = surrogate_weight(params3, depth, beta)
    P = leading_triple(W, depth - 1).pressure
    assert abs(P - ff_pressure(params3, beta)) <= beta * surrogate_error_bound(params3, depth)
