import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermokms.algebra import (
    AlgebraContext,
    AlgebraElement,
    GeneratorTerm,
    ModularFlow,
    StateFunctional,
    battery_functions,
    check_budget,
    expectation_matrix,
    kms_battery,
    kms_residual,
    koopman_matrix,
    perturbed_measure,
    random_element,
    relation_suite,
    ruelle_matrix,
    sigma,
    state_axioms_check,
    to_matrix,
    uniqueness_probe,
    weighted_adjoint,
)
from thermokms.errors import DepthBudgetExceeded
from thermokms.gibbs import conditional_expectation
from thermokms.measures import CylinderMeasure, integrate
from thermokms.shift import CylinderFunction, birkhoff_product
from thermokms.transfer import beta_weight, leading_triple, normalize_potential

from tests.strategies import random_positive


def make_context(seed, k=2, D=4, p_depth=2):
    rng = np.random.default_rng(seed)
    p = normalize_potential(random_positive(rng, k, p_depth))
    return rng, AlgebraContext(p, D)


# -- multiplication, adjoint, matrices -------------------------------------------


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_product_matches_matrix_composition(seed, k):
    rng, ctx = make_context(seed, k=k, D=3 if k == 3 else 4)
    a = random_element(rng, ctx, 2)
    b = random_element(rng, ctx, 2)
    np.testing.assert_allclose(to_matrix(a * b), to_matrix(a) @ to_matrix(b), atol=1e-12)


@given(st.integers(0, 10_000))
def test_multiplication_is_associative(seed):
    rng, ctx = make_context(seed)
    a, b, c = (random_element(rng, ctx, 2) for _ in range(3))
    np.testing.assert_allclose(to_matrix((a * b) * c), to_matrix(a * (b * c)), atol=1e-12)


@given(st.integers(0, 10_000))
def test_adjoint_is_weighted_matrix_adjoint(seed):
    rng, ctx = make_context(seed)
    a = random_element(rng, ctx, 3)
    np.testing.assert_allclose(to_matrix(a.adjoint()), weighted_adjoint(to_matrix(a), ctx.mu), atol=1e-12)


def test_linear_structure(rng):
    _, ctx = make_context(1)
    a = random_element(rng, ctx, 2)
    b = random_element(rng, ctx, 2)
    np.testing.assert_allclose(to_matrix(a + b), to_matrix(a) + to_matrix(b), atol=1e-13)
    np.testing.assert_allclose(to_matrix(2.5 * a - b), 2.5 * to_matrix(a) - to_matrix(b), atol=1e-13)
    np.testing.assert_allclose(to_matrix(AlgebraElement.identity(ctx) * a), to_matrix(a), atol=1e-13)


def test_expectation_matrix_matches_function_route(rng):
    _, ctx = make_context(2, D=4)
    p = ctx.p
    for n in range(0, 4):
        E = expectation_matrix(p, 4, n)
        eta = CylinderFunction(2, 4, rng.normal(size=16))
        np.testing.assert_allclose(E @ eta.values, conditional_expectation(p, eta, n).lift(4).values, atol=1e-12)


def test_koopman_and_ruelle_matrices_are_adjoint(rng):
    # <S u, v>_mu = <u, L_p v>_mu at matching depths
    _, ctx = make_context(3, D=4)
    p = ctx.p
    mu = AlgebraContext(p, 5).mu
    S = koopman_matrix(2, 3, 1)
    L, d = ruelle_matrix(p, 4)
    u = rng.normal(size=8)
    v = rng.normal(size=16)
    lhs = np.dot(mu.masses, np.repeat(S @ u, 2) * np.repeat(v, 2))
    Lv = (L @ v).reshape(-1)
    rhs = np.dot(mu.marginal(3).masses, u * np.repeat(Lv, 8 // Lv.size))
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert d == 3


def test_budget_rule():
    ctx = AlgebraContext(CylinderFunction.constant(2, 0.5), 3)
    one = CylinderFunction.constant(2)
    check_budget(GeneratorTerm(one, 3, one), ctx)
    with pytest.raises(DepthBudgetExceeded):
        check_budget(GeneratorTerm(one, 4, one), ctx)
    with pytest.raises(DepthBudgetExceeded):
        AlgebraElement.term(CylinderFunction(2, 4, np.ones(16)), 0, one, ctx)
    with pytest.raises(ValueError):
        GeneratorTerm(one, -1, one)


# -- relations ------------------------------------------------------------------------


@pytest.mark.parametrize("k,D", [(2, 3), (2, 5), (3, 3), (3, 4)])
def test_relation_suite(k, D):
    _, ctx = make_context(k * 10 + D, k=k, D=D)
    res = relation_suite(ctx.p, D, seed=D)
    assert res, "no relation evaluated"
    assert max(res.values()) <= 1e-12, res


# -- modular flow ---------------------------------------------------------------------


@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2))
def test_flow_is_a_one_parameter_group_of_automorphisms(seed, s, t):
    rng, ctx = make_context(seed)
    H = random_positive(rng, 2, 1, lo=0.5, hi=3.0)
    a = random_element(rng, ctx, 2)
    b = random_element(rng, ctx, 2)
    Fs, Ft, Fst = ModularFlow(H, s), ModularFlow(H, t), ModularFlow(H, s + t)
    np.testing.assert_allclose(to_matrix(sigma(sigma(a, Ft), Fs)), to_matrix(sigma(a, Fst)), atol=1e-12)
    np.testing.assert_allclose(to_matrix(sigma(a * b, Ft)), to_matrix(sigma(a, Ft) * sigma(b, Ft)), atol=1e-11)
    np.testing.assert_allclose(to_matrix(sigma(a.adjoint(), Ft)), to_matrix(sigma(a, Ft).adjoint()), atol=1e-12)


def test_flow_fixes_multiplication_operators(rng):
    _, ctx = make_context(4)
    H = random_positive(rng, 2, 2)
    f = CylinderFunction(2, 2, rng.normal(size=4))
    a = AlgebraElement.multiplication(f, ctx)
    np.testing.assert_allclose(to_matrix(sigma(a, ModularFlow(H, 0.7))), to_matrix(a), atol=1e-14)


def test_imaginary_flow_factor(H12):
    flow = ModularFlow.imaginary(H12, 2.0)
    # H^{it[m]} at t = i beta is H^{-beta[m]}
    assert flow.factor(2).allclose(birkhoff_product(H12 ** -2.0, 2), atol=1e-15)


# -- states -----------------------------------------------------------------------------


@pytest.fixture
def psi_beta1(H12, p_half):
    triple = leading_triple(beta_weight(H12, 1.0), 5)
    return StateFunctional(triple.eigenmeasure, p_half)


def test_state_on_simple_elements(psi_beta1, rng):
    nu = psi_beta1.nu
    f = CylinderFunction(2, 2, rng.normal(size=4))
    one = CylinderFunction.constant(2)
    ctx = psi_beta1.context
    assert psi_beta1(AlgebraElement.identity(ctx)) == pytest.approx(1.0, abs=1e-14)
    assert psi_beta1(AlgebraElement.multiplication(f, ctx)) == pytest.approx(integrate(nu, f), abs=1e-14)
    # psi(e_n) = int p^[n] dnu = 2^-n for p = 1/2
    for n in range(4):
        assert psi_beta1(GeneratorTerm(one, n, one)) == pytest.approx(0.5**n, abs=1e-14)


def test_state_axioms(psi_beta1):
    rep = state_axioms_check(psi_beta1, trials=30, seed=3)
    assert rep["passed"], rep


def test_kms_condition_on_small_battery(H12, psi_beta1):
    funcs = battery_functions(2, 1)
    rep = kms_battery(psi_beta1, H12, 1.0, funcs, n_max=2)
    assert rep.battery_size == (3 * 3 * 3) ** 2
    assert rep.passed and rep.max_residual <= 1e-12


def test_kms_residual_random_elements(H12, p_half, rng):
    for beta in (-1.0, 0.5, 2.0):
        triple = leading_triple(beta_weight(H12, beta), 5)
        psi = StateFunctional(triple.eigenmeasure, p_half)
        for _ in range(5):
            a = random_element(rng, psi.context, 2)
            b = random_element(rng, psi.context, 2)
            assert kms_residual(psi, H12, beta, a, b) <= 1e-10


def test_wrong_measure_breaks_kms(H12, p_half):
    triple = leading_triple(beta_weight(H12, 1.0), 5)
    psi = StateFunctional(perturbed_measure(triple.eigenmeasure, 0.1), p_half)
    rep = kms_battery(psi, H12, 1.0, battery_functions(2, 1), n_max=2)
    assert rep.max_residual > 1e-4
    assert not rep.passed


def test_uniqueness_probe_contracts(H12, p_half):
    nu = leading_triple(beta_weight(H12, 1.0), 6).eigenmeasure
    start = CylinderMeasure.uniform(2, 6)
    prof = uniqueness_probe(H12, 1.0, start, 6, p_half, nu)
    assert prof[0][1] > 1e-2
    assert prof[-1][1] <= 1e-6
    # nu_beta is a fixed point of the iteration
    fixed = uniqueness_probe(H12, 1.0, nu, 4, p_half, nu)
    assert max(tv for _, tv, _ in fixed) <= 1e-12


def test_constant_potential_is_tracial(rng):
    k = 3
    p = CylinderFunction.constant(k, 1.0 / k)
    ctx = AlgebraContext(p, 3)
    psi = StateFunctional(ctx.mu, p)
    H = CylinderFunction.constant(k, 1.0)
    for _ in range(10):
        a = random_element(rng, ctx, 2)
        b = random_element(rng, ctx, 2)
        np.testing.assert_allclose(to_matrix(sigma(a, ModularFlow(H, 1.3))), to_matrix(a), atol=1e-12)
        assert abs(psi(a * b) - psi(b * a)) <= 1e-10


def test_uniqueness_probe_geometric_for_deeper_potential():
    # depth-2 H: no finite-step exactness, the coarse marginals contract geometrically
    H = CylinderFunction(2, 2, [1.0, 2.0, 3.0, 1.5])
    p = CylinderFunction.constant(2, 0.5)
    nu = leading_triple(beta_weight(H, 1.0), 12).eigenmeasure
    prof = uniqueness_probe(H, 1.0, CylinderMeasure.uniform(2, 12), 11, p, nu, observe_depth=2)
    tv = np.array([t for _, t, _ in prof])
    assert tv[-1] <= 1e-6
    ratios = tv[4:] / tv[3:-1]
    assert np.all(ratios < 0.5)
    with pytest.raises(ValueError):
        uniqueness_probe(H, 1.0, CylinderMeasure.uniform(2, 3), 1, p, nu, observe_depth=4)
