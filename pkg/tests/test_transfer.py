import itertools
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from thermokms.errors import ConvergenceError, DepthError, PositivityError
from thermokms.shift import CylinderFunction
from thermokms.transfer import (
    beta_weight,
    build_transfer_matrix,
    convergence_profile,
    gap_estimate,
    leading_triple,
    normalize_potential,
    pressure,
    pressure_curve,
    ruelle_apply,
    ruelle_power,
    vector_angle,
)

from tests.strategies import cylinder_functions, random_positive


def branch_sum(W, f, x):
    """``sum_i W(i x) f(i x)`` evaluated on words."""
    return sum(W((i,) + x) * f((i,) + x) for i in range(1, W.k + 1))


def dense_perron(M):
    """Leading eigenpair of a nonnegative matrix by a full dense eigensolve."""
    vals, vecs = scipy.linalg.eig(M)
    j = int(np.argmax(vals.real))
    v = np.abs(vecs[:, j].real)
    return float(vals[j].real), v / np.linalg.norm(v), np.sort(np.abs(vals))[::-1]


@given(cylinder_functions(max_depth=3, positive=True), st.data())
def test_ruelle_apply_matches_branch_sums(W, data):
    f = data.draw(cylinder_functions(k=W.k, max_depth=3))
    g = ruelle_apply(W, f)
    d = max(W.depth, f.depth)
    assert g.depth == max(d - 1, 0)
    for x in itertools.product(range(1, W.k + 1), repeat=max(d - 1, 0)):
        assert g(x) == pytest.approx(branch_sum(W, f, x), rel=1e-12, abs=1e-12)


@given(cylinder_functions(max_depth=2, positive=True), st.integers(1, 3), st.data())
def test_matrix_apply_equals_operator(W, extra, data):
    D = max(W.depth - 1, 1) + extra - 1
    D = max(D, W.depth - 1, 1)
    M = build_transfer_matrix(W, D)
    f = data.draw(cylinder_functions(k=W.k, max_depth=D))
    lhs = M.apply(f)
    rhs = ruelle_apply(W, f)
    assert lhs.allclose(rhs, atol=1e-12)
    dense = M.matrix
    v = f.lift(D).values
    np.testing.assert_allclose(dense @ v, M.matvec(v), atol=1e-12)
    np.testing.assert_allclose(dense.T @ v, M.rmatvec(v), atol=1e-12)


def test_matrix_depth_checks():
    W = CylinderFunction(2, 3, np.ones(8))
    with pytest.raises(DepthError):
        build_transfer_matrix(W, 1)
    with pytest.raises(DepthError):
        build_transfer_matrix(W, 2).apply(CylinderFunction(2, 3, np.ones(8)))


def test_constant_weight_is_trivial():
    t = leading_triple(CylinderFunction.constant(3, 0.5), 2)
    assert t.eigenvalue == pytest.approx(1.5, abs=1e-14)
    assert np.allclose(t.eigenfunction.values, 1.0)
    assert np.allclose(t.eigenmeasure.masses, 1 / 9)


def test_two_valued_weight_closed_form():
    W = CylinderFunction(2, 1, [1.0, 2.0])
    t = leading_triple(W, 1)
    assert t.eigenvalue == pytest.approx(3.0, abs=1e-12)
    assert np.allclose(t.eigenfunction.values, 1.0)
    assert t.eigenmeasure.masses.tolist() == pytest.approx([1 / 3, 2 / 3], abs=1e-12)
    assert t.pressure == pytest.approx(math.log(3))


@given(st.floats(-3, 3))
def test_pressure_closed_form(beta):
    # H = (1, 2) depth 1: lambda = 1 + 2^-beta
    H = CylinderFunction(2, 1, [1.0, 2.0])
    assert pressure(H, beta) == pytest.approx(math.log1p(2.0**-beta), abs=1e-11)


def test_vector_angle_small_and_sign_blind():
    u = np.array([1.0, 0.0])
    assert vector_angle(u, [1.0, 1e-10]) == pytest.approx(1e-10, rel=1e-6)
    assert vector_angle(u, [-2.0, 0.0]) == 0.0
    assert vector_angle(u, [0.0, 1.0]) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("k,depth", [(2, 1), (2, 3), (3, 2), (2, 5), (4, 2)])
def test_dense_eigensolver_oracle(k, depth, rng):
    for _ in range(5):
        W = random_positive(rng, k, min(depth + 1, 2 + (depth > 1)))
        D = max(depth, W.depth - 1)
        t = leading_triple(W, D)
        lam, v, _ = dense_perron(build_transfer_matrix(W, D).matrix)
        assert abs(t.eigenvalue - lam) <= 1e-9 * max(1, lam)
        assert vector_angle(t.eigenfunction.values, v) <= 1e-8


@given(cylinder_functions(max_depth=3, positive=True))
def test_eigen_equations_hold(W):
    D = max(W.depth - 1, 1)
    t = leading_triple(W, D)
    M = build_transfer_matrix(W, D)
    h, nu = t.eigenfunction.values, t.eigenmeasure.masses
    lam = t.eigenvalue
    assert np.max(np.abs(M.matvec(h) - lam * h)) <= 1e-10 * lam * np.max(h)
    assert np.abs(M.rmatvec(nu) - lam * nu).sum() <= 1e-10 * lam
    assert nu @ h == pytest.approx(1.0, abs=1e-12)
    assert np.all(h > 0) and np.all(nu >= 0)


def test_nonpositive_weight_rejected():
    with pytest.raises(PositivityError):
        leading_triple(CylinderFunction(2, 1, [1.0, 0.0]))


def test_convergence_error_reports_residual():
    W = CylinderFunction(2, 2, [1.0, 2.0, 3.0, 0.5])
    with pytest.raises(ConvergenceError) as err:
        leading_triple(W, 3, max_iter=2)
    assert err.value.iterations == 2
    assert err.value.residual > 0


@given(cylinder_functions(max_depth=3, positive=True))
def test_normalization_gives_unit_fixed_point(W):
    p = normalize_potential(W)
    one = ruelle_apply(p, CylinderFunction.constant(W.k, 1.0))
    assert np.max(np.abs(one.values - 1.0)) <= 1e-10
    assert p.is_positive()
    assert p.depth <= max(W.depth, 1)
    assert leading_triple(p, max(p.depth, 1)).eigenvalue == pytest.approx(1.0, abs=1e-10)


def test_normalization_of_two_valued_weight():
    p = normalize_potential(CylinderFunction(2, 1, [1.0, 2.0]))
    assert p.depth == 1
    assert p.values.tolist() == pytest.approx([1 / 3, 2 / 3], abs=1e-14)


def test_ruelle_power_linear(rng):
    W = random_positive(rng, 2, 2)
    f = CylinderFunction(2, 3, rng.normal(size=8))
    g = CylinderFunction(2, 2, rng.normal(size=4))
    lhs = ruelle_power(W, 2.0 * f + g, 3)
    rhs = 2.0 * ruelle_power(W, f, 3) + ruelle_power(W, g, 3)
    assert lhs.allclose(rhs, atol=1e-12)


def test_pressure_curve_rows():
    H = CylinderFunction(2, 1, [1.0, 2.0])
    rows = pressure_curve(H, [0.0, 1.0])
    assert rows[0][1] == pytest.approx(math.log(2))
    assert rows[1][2] == pytest.approx(1.5)
    assert beta_weight(H, 1.0).values.tolist() == [1.0, 0.5]


def test_convergence_rate_matches_subleading_eigenvalue(rng):
    W = random_positive(rng, 2, 3, lo=0.5, hi=1.5)
    D = 2
    f = CylinderFunction(2, 2, rng.uniform(0, 1, 4))
    prof = convergence_profile(W, f, D, n_max=30)
    _, _, mods = dense_perron(build_transfer_matrix(W, D).matrix)
    ratio = mods[1] / mods[0]
    est = gap_estimate(prof)
    assert prof[-1][1] < prof[0][1]
    assert est == pytest.approx(ratio, rel=0.05)


def test_gap_estimate_nilpotent_remainder():
    # second eigenvalue 0: the error vanishes after one step
    W = CylinderFunction(2, 1, [1.0, 2.0])
    f = CylinderFunction(2, 1, [1.0, -1.0])
    prof = convergence_profile(W, f, 1, n_max=5)
    assert prof[1][1] <= 1e-15
    assert gap_estimate(prof) == 0.0
