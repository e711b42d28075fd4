"""Reference Gibbs measure, conditional expectations, cocycles and equilibrium states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthError
from .measures import CylinderMeasure, integrate
from .shift import CylinderFunction, birkhoff_product, shift_compose
from .transfer import (
    DEFAULT_TOL,
    beta_weight,
    leading_triple,
    ruelle_apply,
    ruelle_power,
)

__all__ = [
    "CocycleBundle",
    "CylinderMeasure",
    "EquilibriumState",
    "cocycles",
    "conditional_expectation",
    "equilibrium_state",
    "integrate",
    "invariance_defect",
    "is_normalized",
    "cocycle_conditional_residual",
    "stationary_measure",
    "thermo_table",
]


def is_normalized(p, atol=1e-10):
    one = ruelle_apply(p, CylinderFunction.constant(p.k, 1.0))
    return p.is_positive() and bool(np.max(np.abs(one.values - 1.0)) <= atol)


def stationary_measure(p, depth, tol=DEFAULT_TOL):
    """The fixed point ``L_p^* mu = mu`` restricted to depth-``depth`` cylinders."""
    if not is_normalized(p):
        raise ValueError("p is not a normalized Jacobian (L_p 1 != 1)")
    work = max(depth, p.depth, 1)
    return leading_triple(p, work, tol).eigenmeasure.marginal(depth)


def conditional_expectation(p, f, n):
    """``E_mu(f | F_n) = alpha^n(L_p^n f)`` with ``mu`` the Gibbs measure of ``p``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return shift_compose(ruelle_power(p, f, n), n)


@dataclass(frozen=True)
class CocycleBundle:
    """``lambda^[n]``, ``H^{beta[n]}`` and ``Lambda_n = H^{-beta[n]} lambda^[n]``."""

    p: CylinderFunction
    H: CylinderFunction
    beta: float
    n: int
    lambda_n: CylinderFunction
    h_beta_n: CylinderFunction
    Lambda_n: CylinderFunction
    identity_residual: float


def cocycles(p, H, beta, n, seed=0):
    """Birkhoff cocycles at level ``n``.

    ``identity_residual`` records ``sup |L_beta^n f - L_p^n(Lambda_n f)|`` for
    one random real ``f`` drawn from ``seed``.
    """
    p.require_positive("p")
    H.require_positive("H")
    lam_n = 1.0 / birkhoff_product(p, n)
    hb_n = birkhoff_product(H ** float(beta), n)
    Lam = lam_n / hb_n
    depth = max(Lam.depth, 1)
    rng = np.random.default_rng(seed)
    f = CylinderFunction(p.k, depth, rng.uniform(-1, 1, p.k**depth))
    lhs = ruelle_power(beta_weight(H, beta), f, n)
    rhs = ruelle_power(p, Lam * f, n)
    return CocycleBundle(p, H, float(beta), n, lam_n, hb_n, Lam, lhs.sup_distance(rhs))


def _needs_depth(fn, nu, what):
    if fn.depth > nu.depth:
        raise DepthError(f"{what} has depth {fn.depth}; measure only reaches {nu.depth}")


def cocycle_conditional_residual(p, H, beta, f, n, triple):
    """``|int f dnu - int Lambda_n^{-1} E_mu(Lambda_n f | F_n) dnu|`` with ``nu = nu_beta``."""
    nu = triple.eigenmeasure
    Lam = cocycles(p, H, beta, n).Lambda_n
    rhs_fn = conditional_expectation(p, Lam * f, n) / Lam
    _needs_depth(f, nu, "f")
    _needs_depth(rhs_fn, nu, "Lambda_n^-1 E_n(Lambda_n f)")
    return abs(integrate(nu, f) - integrate(nu, rhs_fn))


def invariance_defect(m):
    """``max_w |m(T^{-1}[w]) - m([w])|`` over depth-``(D-1)`` cylinders.

    Equivalent to the largest ``|int f o T dm - int f dm|`` over indicator
    functions of depth ``D - 1``.
    """
    if m.depth < 1:
        return 0.0
    pushed = m.masses.reshape(m.k, -1).sum(axis=0)
    return float(np.max(np.abs(pushed - m.marginal(m.depth - 1).masses)))


@dataclass(frozen=True)
class EquilibriumState:
    """``mu_beta = h_beta nu_beta`` with its entropy, pressure and energy.

    Entropy comes from the variational identity
    ``entropy = pressure + beta * energy``, ``energy = int log H dmu``.
    """

    measure: CylinderMeasure
    entropy: float
    pressure: float
    energy: float
    beta: float
    eigenvalue: float


def equilibrium_state(H, beta, depth=None, tol=DEFAULT_TOL, triple=None):
    H.require_positive("H")
    if triple is None:
        if depth is None:
            depth = max(H.depth, 1)
        triple = leading_triple(beta_weight(H, beta), depth, tol)
    h, nu = triple.eigenfunction, triple.eigenmeasure
    masses = h.lift(nu.depth).values * nu.masses
    mu = CylinderMeasure.from_weights(nu.k, nu.depth, masses)
    logH = H.log()
    if logH.depth > mu.depth:
        raise DepthError(f"log H has depth {logH.depth} > measure depth {mu.depth}")
    energy = integrate(mu, logH)
    P = triple.pressure
    return EquilibriumState(mu, P + beta * energy, P, energy, float(beta), triple.eigenvalue)


def thermo_table(H, betas, depth=None, tol=DEFAULT_TOL):
    """Rows ``(beta, pressure, lambda, entropy, energy)`` ordered as ``betas``."""
    rows = []
    for beta in betas:
        eq = equilibrium_state(H, float(beta), depth, tol)
        rows.append((eq.beta, eq.pressure, eq.eigenvalue, eq.entropy, eq.energy))
    return rows
