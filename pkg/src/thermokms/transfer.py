"""Ruelle-Perron-Frobenius operators on cylinder functions.

A potential ``A`` enters every routine here through its weight ``e^A``, a
strictly positive :class:`CylinderFunction`.  For the family ``-beta log H``
the weight is ``H**(-beta)``; :func:`beta_weight` builds it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DepthError
from .measures import CylinderMeasure
from .shift import CylinderFunction, check_capacity, shift_compose

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


def beta_weight(H, beta):
    """Weight ``H**(-beta)`` of the potential ``-beta log H``."""
    H.require_positive("H")
    return H ** (-float(beta))


def default_depth(weight):
    """Smallest depth on which the transfer matrix of ``weight`` is exact."""
    return max(weight.depth - 1, 1)


def ruelle_apply(weight, f):
    """``(L f)(x) = sum_{T z = x} weight(z) f(z)`` by explicit branch sums.

    The result lives at depth ``max(depth(weight), depth(f)) - 1`` (0 if
    that is negative).
    """
    if weight.k != f.k:
        raise ValueError("weight and function live on different shift spaces")
    k = f.k
    m = max(weight.depth, f.depth)
    prod = weight.lift(m).values * f.lift(m).values
    if m == 0:
        return CylinderFunction(k, 0, k * prod)
    # preimage i.x of a depth-(m-1) word x sits at index i*k^(m-1) + idx(x)
    return CylinderFunction(k, m - 1, prod.reshape(k, k ** (m - 1)).sum(axis=0))


def ruelle_power(weight, f, n):
    for _ in range(n):
        f = ruelle_apply(weight, f)
    return f


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Exact matrix of ``L_weight`` on depth-``depth`` functions.

    Row ``x`` has ``k`` nonzero entries, one per preimage branch ``i.x``, in
    column ``prefix_depth(i.x)``.  The branch structure is stored as gathered
    ``(cols, vals)`` arrays so products run in ``O(k^(depth+1))``; the dense
    form is built on demand.
    """

    weight: CylinderFunction
    depth: int
    cols: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)

    @property
    def k(self):
        return self.weight.k

    @property
    def size(self):
        return self.k**self.depth

    @property
    def matrix(self):
        n = self.size
        dense = np.zeros((n, n))
        rows = np.repeat(np.arange(n), self.k)
        dense[rows, self.cols.ravel()] = self.vals.ravel()
        return dense

    def matvec(self, v):
        return (self.vals * v[self.cols]).sum(axis=1)

    def rmatvec(self, u):
        # transpose product; bincount accumulates in a fixed order
        contrib = (self.vals * u[:, None]).ravel()
        n = self.size
        if np.iscomplexobj(contrib):
            return np.bincount(self.cols.ravel(), contrib.real, minlength=n) + 1j * np.bincount(
                self.cols.ravel(), contrib.imag, minlength=n
            )
        return np.bincount(self.cols.ravel(), contrib, minlength=n)

    def apply(self, f):
        if f.depth > self.depth:
            raise DepthError(f"function depth {f.depth} exceeds matrix depth {self.depth}")
        return CylinderFunction(self.k, self.depth, self.matvec(f.lift(self.depth).values))


def build_transfer_matrix(weight, depth):
    depth = int(depth)
    if depth < 1 or depth < weight.depth - 1:
        raise DepthError(
            f"transfer matrix depth {depth} too small for weight depth {weight.depth}"
        )
    k = weight.k
    check_capacity(k, depth + 1)
    n = k**depth
    x = np.arange(n)
    branch_w = weight.lift(depth + 1).values
    cols = np.empty((n, k), dtype=np.int64)
    vals = np.empty((n, k), dtype=branch_w.dtype)
    for i in range(k):
        cols[:, i] = i * k ** (depth - 1) + x // k
        vals[:, i] = branch_w[i * n + x]
    cols.flags.writeable = False
    vals.flags.writeable = False
    return TransferMatrix(weight, depth, cols, vals)


@dataclass(frozen=True)
class SpectralTriple:
    """Leading eigenvalue, eigenfunction ``h`` and eigenmeasure ``nu``.

    ``h`` is normalized by ``int h dnu = 1`` and ``nu`` has total mass 1.
    """

    eigenvalue: float
    eigenfunction: CylinderFunction
    eigenmeasure: CylinderMeasure
    residual: float
    residual_dual: float
    iterations: int

    @property
    def pressure(self):
        return math.log(self.eigenvalue)

    @property
    def depth(self):
        return self.eigenmeasure.depth


def leading_triple(weight, depth=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, matrix=None):
    """Perron data of ``L_weight`` by power iteration on the matrix and its transpose.

    Stops when ``||M v - lam v||_inf / ||v||_inf <= tol * max(1, lam)`` for
    the right iterate and the analogous l1 condition for the left one.

    Raises
    ------
    PositivityError
        if ``weight`` has a non-positive value.
    ConvergenceError
        if ``max_iter`` iterations do not reach ``tol``.
    """
    weight.require_positive("weight e^A")
    if depth is None:
        depth = default_depth(weight)
    M = matrix if matrix is not None else build_transfer_matrix(weight, depth)
    n = M.size
    v = np.ones(n)
    u = np.full(n, 1.0 / n)
    res_r = res_l = np.inf
    it = 0
    lam = 1.0
    while it < max_iter:
        it += 1
        w = M.matvec(v)
        lam = np.max(w)
        res_r = np.max(np.abs(w - lam * v))
        v = w / lam
        z = M.rmatvec(u)
        mu = z.sum()
        res_l = np.abs(z - mu * u).sum()
        u = z / mu
        scale = max(1.0, lam)
        if res_r <= tol * scale and res_l <= tol * scale:
            break
    else:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} steps "
            f"(residuals {res_r:.3g}, {res_l:.3g})",
            residual=max(res_r, res_l),
            iterations=it,
        )
    # two-sided Rayleigh quotient: second-order accurate in both iterates
    lam = float(u @ M.matvec(v) / (u @ v))
    nu = u / u.sum()
    h = v / (nu @ v)
    return SpectralTriple(
        eigenvalue=lam,
        eigenfunction=CylinderFunction(M.k, M.depth, h),
        eigenmeasure=CylinderMeasure(M.k, M.depth, nu),
        residual=float(np.max(np.abs(M.matvec(h) - lam * h)) / np.max(h)),
        residual_dual=float(np.abs(M.rmatvec(nu) - lam * nu).sum()),
        iterations=it,
    )


def normalize_potential(weight, depth=None, tol=DEFAULT_TOL):
    """Jacobian ``p = e^A h / (lam * h o T)`` with ``L_p 1 = 1``.

    Returned at the smallest depth that represents it.  A last rescaling by
    ``(L_p 1) o T`` removes the rounding left by the eigen-solver.
    """
    triple = leading_triple(weight, depth, tol)
    h = triple.eigenfunction.compress(atol=1e3 * np.finfo(float).eps)
    p = weight * h / (triple.eigenvalue * shift_compose(h))
    p = p / shift_compose(ruelle_apply(p, CylinderFunction.constant(p.k, 1.0)))
    return p.compress(atol=1e3 * np.finfo(float).eps)


def pressure(H, beta, depth=None, tol=DEFAULT_TOL):
    """``P_H(beta) = log`` of the leading eigenvalue of ``L_{-beta log H}``."""
    return leading_triple(beta_weight(H, beta), depth, tol).pressure


def pressure_curve(H, betas, depth=None, tol=DEFAULT_TOL):
    """Rows ``(beta, P, lambda)`` in the order of ``betas``."""
    rows = []
    for beta in betas:
        t = leading_triple(beta_weight(H, beta), depth, tol)
        rows.append((float(beta), t.pressure, t.eigenvalue))
    return rows


def convergence_profile(weight, f, depth=None, n_max=20, triple=None, tol=DEFAULT_TOL):
    """``[(n, sup |L^n f / lam^n - h * int f dnu|)]`` for ``n = 0..n_max``."""
    if triple is None:
        triple = leading_triple(weight, depth, tol)
    M = build_transfer_matrix(weight, triple.depth)
    lam = triple.eigenvalue
    target = triple.eigenfunction.values * triple.eigenmeasure.integrate(f)
    v = f.lift(triple.depth).values
    out = []
    for n in range(n_max + 1):
        out.append((n, float(np.max(np.abs(v - target)))))
        v = M.matvec(v) / lam
    return out


def gap_estimate(profile, floor=1e-13):
    """Median ratio of successive errors above ``floor``; estimates ``|lam_2| / lam``.

    Returns 0.0 when the error drops below ``floor`` after one step (a
    nilpotent remainder), ``nan`` when there are too few usable points.
    """
    errs = [e for _, e in profile]
    ratios = [b / a for a, b in zip(errs, errs[1:]) if a > floor and b > floor]
    if not ratios:
        if len(errs) > 1 and errs[1] <= floor:
            return 0.0
        return float("nan")
    tail = ratios[len(ratios) // 2 :]
    return float(np.median(tail))


def vector_angle(u, v):
    """Angle between the lines spanned by ``u`` and ``v``.

    Uses ``2 asin(|u^ - v^| / 2)`` with signs aligned, which stays accurate
    for tiny angles where ``acos`` of the cosine loses half the digits.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    if u @ v < 0:
        v = -v
    return float(2.0 * np.arcsin(min(1.0, np.linalg.norm(u - v) / 2.0)))
