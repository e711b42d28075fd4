"""Fisher-Felderhof renewal potential on the two-symbol shift.

The model uses symbols ``{0, 1}`` and the partition ``M_0 = [0]``,
``M_k = [1^k 0]``.  ``T`` maps ``M_k`` onto ``M_{k-1}`` for ``k >= 1`` and
``M_0`` onto the whole space.  The potential is ``g = a_k`` on ``M_k`` with
``a_0 = -log zeta(gamma)`` and ``a_k = -gamma log((k+1)/k)``, and
``H = e^{-g}``.

Everything is tabulated up to ``k_max``; series tails beyond ``k_max`` are
added in closed form (Euler-Maclaurin) so results do not carry the slow
polynomial truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import (
    ConvergenceError,
    DivergenceError,
    FunctionClassError,
    IntegrabilityError,
    ParameterError,
)
from .shift import CylinderFunction


def power_tail(s, N):
    """``sum_{n > N} n^{-s}`` for ``s > 1`` by Euler-Maclaurin at ``N``.

    Accurate to about ``s^(7) N^{-s-7} / 1.2e6`` (rising factorial), which is
    below ``1e-13`` relative for ``N >= 16``.
    """
    if s <= 1:
        raise DivergenceError(f"sum n^-s diverges for s={s} <= 1")
    N = float(N)
    r3 = s * (s + 1) * (s + 2)
    r5 = r3 * (s + 3) * (s + 4)
    return (
        N ** (1 - s) / (s - 1)
        - 0.5 * N**-s
        + s * N ** (-s - 1) / 12
        - r3 * N ** (-s - 3) / 720
        + r5 * N ** (-s - 5) / 30240
    )


def _em_error(s, N):
    r7 = s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * (s + 5) * (s + 6)
    return r7 * N ** (-s - 7) / 1_209_600


def zeta_truncated(gamma, tol=1e-12):
    """``zeta(gamma)`` as a partial sum plus a closed-form tail, within ``tol``."""
    if gamma <= 1:
        raise DivergenceError(f"zeta(gamma) diverges for gamma={gamma} <= 1")
    N = 16
    while _em_error(gamma, N) > tol / 10:
        N *= 2
    n = np.arange(1, N + 1, dtype=np.float64)
    # sum smallest terms first
    return float(np.sum((n**-gamma)[::-1]) + power_tail(gamma, N))


@dataclass(frozen=True)
class FFParams:
    """Model parameters.

    ``k_max`` is the last tabulated partition index; the mass-series tail
    beyond it is exposed as :attr:`mass_tail_bound` and added back in closed
    form wherever a full sum is needed.
    """

    gamma: float
    k_max: int = 10_000
    tol: float = 1e-10

    def __post_init__(self):
        if not self.gamma > 2:
            raise ParameterError(f"gamma must be > 2, got {self.gamma}")
        if int(self.k_max) != self.k_max or self.k_max < 8:
            raise ParameterError(f"k_max must be an integer >= 8, got {self.k_max}")
        if not self.tol > 0:
            raise ParameterError("tol must be > 0")

    @property
    def mass_tail_bound(self):
        """Integral bound on ``sum_{k > k_max} (k+1)^{-gamma}``."""
        return (self.k_max + 1) ** (1 - self.gamma) / (self.gamma - 1)

    @cached_property
    def zeta(self):
        return zeta_truncated(self.gamma, self.tol / 100)


@dataclass(frozen=True)
class FFPotential:
    """Tables ``a_k``, ``s_k = a_0 + ... + a_k`` and ``H = e^{-a_k}`` for ``k <= k_max``.

    ``H`` on the fixed point ``(111...)`` is 1; it has no table entry.
    """

    params: FFParams
    a: np.ndarray
    s: np.ndarray

    @property
    def H(self):
        return np.exp(-self.a)

    @property
    def mass_sum(self):
        return float(np.sum(np.exp(self.s)[::-1]))

    @property
    def mass_deficit(self):
        return 1.0 - self.mass_sum


def ff_potential(params):
    K = params.k_max
    k = np.arange(1, K + 1, dtype=np.float64)
    a = np.empty(K + 1)
    a[0] = -math.log(params.zeta)
    a[1:] = -params.gamma * np.log1p(1.0 / k)
    return FFPotential(params, a, np.cumsum(a))


@dataclass(frozen=True)
class FFMeasure:
    """Eigenmeasure ``nu_1`` of ``L_g^*`` on the partition ``(M_k)``.

    ``partition_masses[k] = (k+1)^{-gamma} / zeta(gamma)`` and
    ``tails[k] = nu(M_k u M_{k+1} u ...) = nu([1^k])``.
    """

    params: FFParams
    partition_masses: np.ndarray
    tails: np.ndarray

    @property
    def mass_deficit(self):
        """Mass outside ``M_0..M_{k_max}``."""
        return float(self.tails[-1] - self.partition_masses[-1])

    def atom_mass(self, atoms):
        """``nu(M_{k_1} n T^{-(k_1+1)} M_{k_2} n ...)`` = product of atom masses."""
        out = 1.0
        for j in atoms:
            out *= self.partition_masses[j]
        return out

    def cylinder_mass(self, word):
        """Mass of the cylinder ``[w_0 ... w_r]`` over symbols ``{0, 1}``.

        The word splits into partition atoms ``1^j 0`` followed by a run of
        ones ``1^m``; the run contributes ``nu([1^m])``.
        """
        atoms = []
        run = 0
        for sym in word:
            if sym not in (0, 1):
                raise ValueError(f"symbol {sym} not in {{0, 1}}")
            if sym == 1:
                run += 1
            else:
                atoms.append(run)
                run = 0
        if any(j > self.params.k_max for j in atoms) or run > self.params.k_max:
            raise ParameterError("word reaches past k_max")
        return self.atom_mass(atoms) * self.tails[run]


def ff_eigenmeasure(params):
    K = params.k_max
    zeta = params.zeta
    n = np.arange(1, K + 2, dtype=np.float64)
    masses = n**-params.gamma / zeta
    beyond = power_tail(params.gamma, K + 1) / zeta  # nu of M_k, k > K
    tails = np.cumsum(np.concatenate([masses, [beyond]])[::-1])[::-1][:-1]
    return FFMeasure(params, masses, tails)


@dataclass(frozen=True)
class FFEigenfunction:
    """``h~_t = nu(t)^{-1} sum_{i >= t} nu(i)`` on ``M_t`` and ``u = 1 / int h~ dnu``.

    ``equilibrium_masses[t] = u h~_t nu(t)`` are the masses of ``M_t``
    under ``mu~ = u h~ nu_1``.
    """

    params: FFParams
    h_tilde: np.ndarray
    u: float
    u_series: float
    equilibrium_masses: np.ndarray


def ff_eigenfunction(params, measure=None):
    if params.gamma <= 2:
        raise IntegrabilityError("h~ is not nu-integrable for gamma <= 2")
    nu = measure if measure is not None else ff_eigenmeasure(params)
    K = params.k_max
    zeta = params.zeta
    h = nu.tails / nu.partition_masses
    u = zeta / zeta_truncated(params.gamma - 1, params.tol / 100)
    t = np.arange(1, K + 2, dtype=np.float64)
    denom = np.sum((t * nu.partition_masses)[::-1]) + power_tail(params.gamma - 1, K + 1) / zeta
    return FFEigenfunction(params, h, float(u), float(1.0 / denom), u * nu.tails)


def eigen_residuals(params, potential=None, eigenfunction=None):
    """``|L_g h~ - h~|`` on ``M_t`` for ``t = 0..k_max-1``.

    The preimages of ``x`` in ``M_t`` are ``0x`` in ``M_0`` and ``1x`` in
    ``M_{t+1}``.
    """
    pot = potential if potential is not None else ff_potential(params)
    ef = eigenfunction if eigenfunction is not None else ff_eigenfunction(params)
    h = ef.h_tilde
    w = np.exp(pot.a)
    Lh = w[0] * h[0] + w[1:] * h[1:]
    return np.abs(Lh - h[:-1])


def ff_pressure(params, beta):
    """``P(beta g)``: root of ``sum_k e^{beta s_k - (k+1) P} = 1``, or 0 if none exists.

    ``sum_k e^{beta s_k} = zeta(gamma beta) / zeta(gamma)^beta`` is ``<= 1``
    exactly when ``beta >= 1``, so those values return 0.
    """
    beta = float(beta)
    if beta >= 1:
        return 0.0
    gamma = params.gamma
    s = gamma * beta
    logz = math.log(params.zeta)
    N = params.k_max + 1
    n = np.arange(1, N + 1, dtype=np.float64)
    base = -s * np.log(n)
    tail = power_tail(s, N) if s > 1 else None

    def log_f(P):
        terms = base - n * P
        val = logsumexp(terms)
        if tail is not None:
            val = np.logaddexp(val, math.log(tail) - (N + 1) * P)
        return val - beta * logz

    lo = 0.0 if tail is not None else 1e-12
    if log_f(lo) <= 0:
        raise ConvergenceError(f"no sign change at P={lo} for beta={beta}")
    hi = 1.0
    while log_f(hi) > 0:
        hi *= 2
        if hi > 1e6:
            raise ConvergenceError(f"could not bracket the pressure root for beta={beta}")
    P = brentq(log_f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if tail is None and N * P < 40:
        raise ConvergenceError(f"k_max={params.k_max} too small to truncate at beta={beta}")
    return float(P)


def _partition_integral(measure, values):
    """``sum_j values[j] nu(M_j)``; the last entry covers every ``M_j`` with ``j >= len - 1``."""
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if values.ndim != 1 or values.size == 0 or not np.all(np.isfinite(values)):
        raise FunctionClassError("expected a 1-D finite array of partition-atom values")
    L = values.size
    if L > measure.params.k_max + 1:
        raise FunctionClassError(f"{L} atom values exceed k_max + 1 = {measure.params.k_max + 1}")
    masses = np.concatenate([measure.partition_masses[: L - 1], [measure.tails[L - 1]]])
    return values, masses


def ff_kms_functional(params, f, n, g, measure=None):
    """``psi_{nu_1}(M_f e_n M_g) = int f g 2^{-n} dnu_1``.

    ``f`` and ``g`` are partition-atom functions: value ``f[j]`` on ``M_j``,
    the last value extended to all deeper atoms.  Scalars are constants.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    nu = measure if measure is not None else ff_eigenmeasure(params)
    fv = np.atleast_1d(np.asarray(f, dtype=np.float64))
    gv = np.atleast_1d(np.asarray(g, dtype=np.float64))
    L = max(fv.size, gv.size)
    fv = np.concatenate([fv, np.full(L - fv.size, fv[-1])])
    gv = np.concatenate([gv, np.full(L - gv.size, gv[-1])])
    prod, masses = _partition_integral(nu, fv * gv)
    return float(np.dot(prod, masses)) * 0.5**n


def ff_equilibria(params):
    """The two equilibrium states at ``beta = 1``: ``mu~`` and the Dirac mass at ``(111...)``.

    For ``mu~`` the energy ``int log H dmu~`` is tabulated (closed-form
    tail) and entropy follows from ``entropy = P(1) + energy``.  The Dirac
    mass has entropy 0 and energy ``log H(111...) = 0``.
    """
    pot = ff_potential(params)
    ef = ff_eigenfunction(params)
    gamma = params.gamma
    K = params.k_max
    zeta = params.zeta
    logH = -pot.a
    tail_energy = gamma * ef.u / ((gamma - 1) * zeta) * power_tail(gamma, K)
    energy = float(np.sum((logH * ef.equilibrium_masses)[::-1]) + tail_energy)
    P1 = ff_pressure(params, 1.0)
    # sum_{t > K} R_t = sum_{i > K} (i - K) nu(i)
    beyond = power_tail(gamma - 1, K + 1) - (K + 1) * power_tail(gamma, K + 1)
    mass = float(np.sum(ef.equilibrium_masses[::-1])) + ef.u * beyond / zeta
    mu_entropy = P1 + energy
    return {
        "pressure": P1,
        "mu_tilde": {
            "entropy": mu_entropy,
            "energy": energy,
            "variational_value": mu_entropy - energy,
            "total_mass": mass,
        },
        "dirac_111": {"entropy": 0.0, "energy": 0.0, "variational_value": 0.0},
    }


def surrogate_weight(params, depth, beta=1.0):
    """Locally constant truncation of ``e^{beta g}`` at ``depth`` on the package's 1-based shift.

    Model symbol 0 is shift symbol 1 and model symbol 1 is shift symbol 2.
    A depth-``d`` word with its first 0 at position ``j < d`` lies in
    ``M_j``; the all-ones word stands for the merged ``M_d u M_{d+1} u ...``
    and takes the value ``a_d``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    pot = ff_potential(FFParams(params.gamma, max(params.k_max, depth), params.tol))

    def value(word):
        j = next((i for i, s in enumerate(word) if s == 1), depth)
        return math.exp(beta * pot.a[j])

    return CylinderFunction.from_callable(2, depth, value)


def surrogate_error_bound(params, depth):
    """``sup |g_d - g| = |a_d|``; bounds ``|P(g_d) - P(g)|``."""
    return params.gamma * math.log1p(1.0 / depth)
