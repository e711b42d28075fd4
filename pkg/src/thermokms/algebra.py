"""Generator calculus for the algebra spanned by ``M_f e_n M_g`` on ``L^2(mu)``.

Here ``e_n = S^n (S^*)^n`` with ``S`` the Koopman operator and ``S^* = L_p``,
so ``M_f e_n M_g`` acts as ``eta -> f E_mu(g eta | F_n)``.  Elements are flat
lists of such terms.  Equality of elements is decided through their exact
matrices on depth-``D`` cylinder functions, never by comparing terms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import DepthBudgetExceeded
from .gibbs import conditional_expectation, stationary_measure
from .measures import CylinderMeasure, integrate
from .shift import CylinderFunction, birkhoff_product, enumerate_cylinders, ShiftSpace, shift_compose
from .transfer import beta_weight, ruelle_power

EXACT_TOL = 1e-12
MEASURE_TOL = 1e-8


@dataclass(eq=False)
class AlgebraContext:
    """Reference Jacobian ``p`` (with ``L_p 1 = 1``) and working depth ``D``."""

    p: CylinderFunction
    depth: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def k(self):
        return self.p.k

    @cached_property
    def mu(self):
        """Reference Gibbs measure of ``p`` at the working depth."""
        return stationary_measure(self.p, self.depth)

    def max_level(self):
        """Largest ``n`` with ``e_n`` representable at the working depth."""
        return self.depth - max(self.p.depth, 1) + 1

    def expectation(self, f, n):
        """Cached ``E_mu(f | F_n)``."""
        key = (n, f.depth, f.values.tobytes())
        hit = self._cache.get(key)
        if hit is None:
            hit = conditional_expectation(self.p, f, n)
            self._cache[key] = hit
        return hit


@dataclass(frozen=True, eq=False)
class GeneratorTerm:
    """``M_f e_n M_g``; ``n = 0`` is the multiplication operator ``M_{fg}``."""

    f: CylinderFunction
    n: int
    g: CylinderFunction

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"level must be >= 0, got {self.n}")
        if self.f.k != self.g.k:
            raise ValueError("f and g live on different shift spaces")

    @classmethod
    def unit(cls, k):
        one = CylinderFunction.constant(k, 1.0)
        return cls(one, 0, one)

    def adjoint(self):
        return GeneratorTerm(self.g.conj(), self.n, self.f.conj())

    def __repr__(self):
        return f"GeneratorTerm(f={self.f.values.tolist()}, n={self.n}, g={self.g.values.tolist()})"


def check_budget(term, ctx):
    """Raise :class:`DepthBudgetExceeded` unless ``term`` is exact at ``ctx.depth``.

    The rule is ``max(depth f, depth g) <= D`` and
    ``max(depth p, 1) + n - 1 <= D``.
    """
    D = ctx.depth
    if max(term.f.depth, term.g.depth) > D:
        raise DepthBudgetExceeded(
            f"term functions have depth {max(term.f.depth, term.g.depth)} > D={D}", term
        )
    if max(ctx.p.depth, 1) + term.n - 1 > D:
        raise DepthBudgetExceeded(f"level n={term.n} needs depth > D={D}", term)


class AlgebraElement:
    """Finite sum of :class:`GeneratorTerm` over a fixed :class:`AlgebraContext`."""

    __slots__ = ("terms", "context")

    def __init__(self, terms, context, check=True):
        terms = tuple(terms)
        if check:
            for t in terms:
                check_budget(t, context)
        self.terms = terms
        self.context = context

    @classmethod
    def identity(cls, context):
        return cls([GeneratorTerm.unit(context.k)], context)

    @classmethod
    def term(cls, f, n, g, context):
        return cls([GeneratorTerm(f, n, g)], context)

    @classmethod
    def multiplication(cls, f, context):
        return cls([GeneratorTerm(f, 0, CylinderFunction.constant(f.k, 1.0))], context)

    def __repr__(self):
        return f"AlgebraElement({list(self.terms)!r})"

    def _same_context(self, other):
        if other.context is not self.context:
            raise ValueError("elements belong to different contexts")

    def __add__(self, other):
        self._same_context(other)
        return AlgebraElement(self.terms + other.terms, self.context, check=False)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self, other)
        return AlgebraElement(
            [GeneratorTerm(other * t.f, t.n, t.g) for t in self.terms], self.context, check=False
        )

    def __rmul__(self, scalar):
        return self * scalar

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def adjoint(self):
        return adjoint(self)

    def to_matrix(self, depth=None):
        return to_matrix(self, depth)


def _as_element(x, context):
    if isinstance(x, AlgebraElement):
        return x
    if isinstance(x, GeneratorTerm):
        return AlgebraElement([x], context)
    raise TypeError(f"expected a GeneratorTerm or AlgebraElement, got {type(x).__name__}")


def multiply_terms(a, b, ctx):
    """Normal form of ``(M_f e_n M_g)(M_h e_m M_k)``.

    ``n <= m`` gives ``M_{f E_n(gh)} e_m M_k``; ``n > m`` gives
    ``M_f e_n M_{E_m(gh) k}``.
    """
    u = a.g * b.f
    if a.n <= b.n:
        out = GeneratorTerm(a.f * ctx.expectation(u, a.n), b.n, b.g)
    else:
        out = GeneratorTerm(a.f, a.n, ctx.expectation(u, b.n) * b.g)
    check_budget(out, ctx)
    return out


def multiply(a, b):
    a._same_context(b)
    ctx = a.context
    return AlgebraElement(
        [multiply_terms(s, t, ctx) for s in a.terms for t in b.terms], ctx, check=False
    )


def adjoint(a):
    """Termwise ``(f, n, g) -> (conj g, n, conj f)``."""
    return AlgebraElement([t.adjoint() for t in a.terms], a.context, check=False)


# -- matrices ---------------------------------------------------------------


def expectation_matrix(p, depth, n):
    """Matrix of ``E_mu(. | F_n)`` on depth-``depth`` functions.

    Built from ``E_n eta(x) = sum_{T^n y = T^n x} p^[n](y) eta(y)``: entry
    ``(x, y)`` is ``p^[n](y)`` when ``x`` and ``y`` agree from coordinate
    ``n`` on.
    """
    k = p.k
    N = k**depth
    if n == 0:
        return np.eye(N)
    pn = birkhoff_product(p, n).lift(depth).values
    tail = np.arange(N) % k ** (depth - n)
    return (tail[:, None] == tail[None, :]) * pn[None, :]


def _term_matrix(term, ctx, depth):
    key = ("E", depth, term.n)
    E = ctx._cache.get(key)
    if E is None:
        E = expectation_matrix(ctx.p, depth, term.n)
        ctx._cache[key] = E
    f = term.f.lift(depth).values
    g = term.g.lift(depth).values
    return f[:, None] * E * g[None, :]


def to_matrix(a, depth=None):
    """Dense matrix of ``eta -> sum f E_mu(g eta | F_n)`` on the depth basis."""
    ctx = a.context
    depth = ctx.depth if depth is None else depth
    sub = AlgebraContext(ctx.p, depth) if depth != ctx.depth else ctx
    N = ctx.k**depth
    out = np.zeros((N, N), dtype=np.complex128)
    for t in a.terms:
        check_budget(t, sub)
        out += _term_matrix(t, ctx, depth)
    if not np.any(out.imag):
        return out.real
    return out


def weighted_adjoint(A, mu):
    """Adjoint for ``<u, v> = sum_w mu_w u_w conj(v_w)``: ``diag(1/mu) A^H diag(mu)``."""
    m = mu.masses
    return (np.conj(A).T * m[None, :]) / m[:, None]


# -- modular flow -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModularFlow:
    """``sigma_t`` for the positive potential ``H``; ``t`` may be complex."""

    H: CylinderFunction
    t: complex

    def __post_init__(self):
        self.H.require_positive("H")

    @classmethod
    def imaginary(cls, H, beta):
        """``sigma_{i beta}``."""
        return cls(H, 1j * beta)

    def factor(self, m):
        """``H^{it[m]} = prod_{j<m} H(T^j x)^{it}``."""
        expo = 1j * complex(self.t)
        expo = expo.real if expo.imag == 0 else expo
        return birkhoff_product(self.H**expo, m)


def sigma(a, flow):
    """``sigma_t(M_f e_m M_g) = M_{f H^{it[m]}} e_m M_{H^{-it[m]} g}`` termwise."""
    out = []
    for t in a.terms:
        fac = flow.factor(t.n)
        out.append(GeneratorTerm(t.f * fac, t.n, t.g / fac))
    return AlgebraElement(out, a.context)


# -- states -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateFunctional:
    """``psi_nu(M_f e_n M_g) = int f g lambda^{-[n]} dnu`` with ``lambda^{-[n]} = p^[n]``."""

    nu: CylinderMeasure
    p: CylinderFunction

    @cached_property
    def context(self):
        return AlgebraContext(self.p, self.nu.depth)

    @cached_property
    def _products(self):
        return {}

    def p_n(self, n):
        """``p^[n]``, cached per level."""
        out = self._products.get(n)
        if out is None:
            out = self._products[n] = birkhoff_product(self.p, n)
        return out

    def __call__(self, a):
        return kms_functional(self, a)


def kms_functional(psi, a):
    if isinstance(a, GeneratorTerm):
        a = [a]
    else:
        a = a.terms
    total = 0.0
    for t in a:
        total = total + integrate(psi.nu, t.f * t.g * psi.p_n(t.n))
    return total


def kms_residual(psi, H, beta, a, b):
    """``|psi(a b) - psi(b sigma_{i beta}(a))|`` via multiply, sigma and psi."""
    ctx = psi.context
    a = _as_element(a, ctx)
    b = _as_element(b, ctx)
    sa = sigma(a, ModularFlow.imaginary(H, beta))
    return abs(psi(a * b) - psi(b * sa))


def battery_functions(k, max_depth=2):
    """Constant 1 and indicators of every cylinder of depth ``1..max_depth``."""
    out = [CylinderFunction.constant(k, 1.0)]
    space = ShiftSpace(k)
    for d in range(1, max_depth + 1):
        out.extend(CylinderFunction.indicator(k, w) for w in enumerate_cylinders(space, d))
    return out


@dataclass
class BatteryReport:
    beta: float
    battery_size: int
    max_residual: float
    failures: list
    tol: float

    @property
    def passed(self):
        return not self.failures


def kms_battery(psi, H, beta, functions=None, n_max=3, tol=MEASURE_TOL):
    """KMS residual over every generator pair ``(f e_n g, h e_m d)`` from ``functions``.

    ``failures`` lists ``(a, b, residual)`` for residuals above ``tol`` in
    enumeration order.
    """
    ctx = psi.context
    if functions is None:
        functions = battery_functions(ctx.k)
    flow = ModularFlow.imaginary(H, beta)
    terms = [
        GeneratorTerm(f, n, g)
        for n in range(n_max + 1)
        for f, g in itertools.product(functions, repeat=2)
    ]
    for t in terms:
        check_budget(t, ctx)
    sig = [sigma(AlgebraElement([t], ctx, check=False), flow).terms[0] for t in terms]
    worst = 0.0
    failures = []
    for ta, sa in zip(terms, sig):
        for tb in terms:
            lhs = kms_functional(psi, multiply_terms(ta, tb, ctx))
            rhs = kms_functional(psi, multiply_terms(tb, sa, ctx))
            r = abs(lhs - rhs)
            worst = max(worst, r)
            if r > tol:
                failures.append((ta, tb, r))
    return BatteryReport(float(beta), len(terms) ** 2, worst, failures, tol)


def random_function(rng, k, depth, complex_values=False):
    vals = rng.uniform(-1, 1, k**depth)
    if complex_values:
        vals = vals + 1j * rng.uniform(-1, 1, k**depth)
    return CylinderFunction(k, depth, vals)


def random_element(rng, ctx, n_terms=2, max_fn_depth=2, complex_values=True):
    """Sum of ``n_terms`` random budget-respecting generator terms."""
    dmax = min(max_fn_depth, ctx.depth)
    nmax = ctx.max_level()
    terms = []
    for _ in range(n_terms):
        f = random_function(rng, ctx.k, int(rng.integers(0, dmax + 1)), complex_values)
        g = random_function(rng, ctx.k, int(rng.integers(0, dmax + 1)), complex_values)
        terms.append(GeneratorTerm(f, int(rng.integers(0, nmax + 1)), g))
    return AlgebraElement(terms, ctx)


def state_axioms_check(psi, trials=200, seed=0, n_terms=2):
    """Normalization, positivity on ``b b^*`` and ``psi(a^*) = conj psi(a)``."""
    ctx = psi.context
    rng = np.random.default_rng(seed)
    one = psi(AlgebraElement.identity(ctx))
    min_re = np.inf
    max_im = 0.0
    max_conj = 0.0
    for _ in range(trials):
        b = random_element(rng, ctx, n_terms)
        val = complex(psi(b * b.adjoint()))
        min_re = min(min_re, val.real)
        max_im = max(max_im, abs(val.imag))
        max_conj = max(max_conj, abs(complex(psi(b.adjoint())) - np.conj(complex(psi(b)))))
    ok = abs(one - 1) <= EXACT_TOL and min_re >= -1e-10 and max_im <= 1e-10 and max_conj <= 1e-10
    return {
        "psi_one": complex(one),
        "min_real_bbstar": float(min_re),
        "max_imag_bbstar": float(max_im),
        "max_adjoint_defect": float(max_conj),
        "trials": trials,
        "passed": bool(ok),
    }


# -- operator relations -----------------------------------------------------


def koopman_matrix(k, depth, n=1):
    """``S^n: eta -> eta o T^n`` from depth ``depth`` to ``depth + n``."""
    rows = np.arange(k ** (depth + n))
    out = np.zeros((k ** (depth + n), k**depth))
    out[rows, rows % k**depth] = 1.0
    return out


def ruelle_matrix(p, depth):
    """``S^* = L_p`` from depth ``depth`` to depth ``max(depth p, depth) - 1`` (at least 0).

    Returns ``(matrix, out_depth)``.
    """
    mat, out_depth = _ruelle_sparse(p, depth)
    return mat.toarray(), out_depth


def _ruelle_sparse(p, depth):
    k = p.k
    top = max(p.depth, depth)
    if top == 0:
        return sparse.csr_matrix(np.array([[k * p.values[0]]])), 0
    out_depth = top - 1
    Nout = k**out_depth
    pv = p.lift(top).values
    x = np.arange(Nout)
    rows, cols, vals = [], [], []
    for i in range(k):
        z = i * Nout + x  # index of the preimage i.x at depth `top`
        rows.append(x)
        cols.append(z // k ** (top - depth))
        vals.append(pv[z])
    shape = (Nout, k**depth)
    # duplicate (row, col) pairs are summed, as the branch sum requires
    mat = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)
    return mat.tocsr(), out_depth


def lift_matrix(k, depth, to_depth):
    rows = np.arange(k**to_depth)
    out = np.zeros((k**to_depth, k**depth))
    out[rows, rows // k ** (to_depth - depth)] = 1.0
    return out


def _ruelle_chain(p, depth, n):
    """``(S^*)^n`` from ``depth``; returns ``(matrix, out_depth)``."""
    if n == 0:
        return np.eye(p.k**depth), depth
    # each step has k nonzeros per column; chain them sparsely, densify once
    mat, d = _ruelle_sparse(p, depth)
    for _ in range(n - 1):
        step, d = _ruelle_sparse(p, d)
        mat = step @ mat
    return mat.toarray(), d


def _e_matrix(p, depth, n):
    """``S^n (S^*)^n`` at ``depth`` assembled from Koopman and Ruelle matrices."""
    down, d = _ruelle_chain(p, depth, n)
    if d + n > depth:
        raise DepthBudgetExceeded(f"e_{n} does not fit depth {depth}")
    up = koopman_matrix(p.k, d, n)
    return lift_matrix(p.k, d + n, depth) @ up @ down


def _diag(f, depth):
    return f.lift(depth).values


def _fn_route_matrix(fn, k, depth):
    """Matrix whose column ``y`` is ``fn(delta_y)`` lifted to ``depth``."""
    N = k**depth
    cols = []
    for y in range(N):
        e = np.zeros(N)
        e[y] = 1.0
        cols.append(fn(CylinderFunction(k, depth, e)).lift(depth).values)
    return np.array(cols).T


def _sup(A, B):
    return float(np.max(np.abs(A - B)))


def relation_suite(p, depth, f=None, g=None, levels=None, seed=0):
    """Sup-norm residuals of the basic operator identities at ``depth``.

    Matrix routes are assembled from Koopman and Ruelle matrices; the
    function routes go through :func:`conditional_expectation`.
    """
    k = p.k
    D = depth
    rng = np.random.default_rng(seed)
    fd = min(2, D)
    if f is None:
        f = random_function(rng, k, fd)
    if g is None:
        g = random_function(rng, k, fd)
    a = max(p.depth, 1)
    if levels is None:
        top = D - a  # e_{n+1} must fit for the n-step expansion
        levels = range(1, max(top, 0) + 1)
    levels = [n for n in levels if n <= min(3, D - a)]
    I = np.eye(k**D)
    out = {}

    def record(name, val):
        out[name] = max(out.get(name, 0.0), val)

    for n in levels:
        # L^n S^n = 1
        up = koopman_matrix(k, D, n)
        down, d = _ruelle_chain(p, D + n, n)
        record("ruelle_koopman", _sup(lift_matrix(k, d, D) @ down @ up if d < D else down @ up, I))
        # L^n M_f S^n = M_{L^n f}
        Lnf = ruelle_power(p, f, n)
        lhs = down @ (_diag(f, D + n)[:, None] * up)
        record("ruelle_multiplier", _sup(lhs, np.diag(_diag(Lnf, D))))
        # e_n from Koopman/Ruelle, compared with the expectation route
        E = _e_matrix(p, D, n)
        cond = lambda eta, n=n: conditional_expectation(p, eta, n)
        record("e_multiplier_right", _sup(E * _diag(f, D)[None, :], _fn_route_matrix(lambda eta: cond(f * eta), k, D)))
        record("e_expectation", _sup(E, _fn_route_matrix(cond, k, D)))
        record("e_multiplier_left", _sup(_diag(f, D)[:, None] * E, _fn_route_matrix(lambda eta: f * cond(eta), k, D)))
        record(
            "e_sandwich",
            _sup(
                _diag(f, D)[:, None] * E * _diag(g, D)[None, :],
                _fn_route_matrix(lambda eta: f * cond(g * eta), k, D),
            ),
        )
        Eg = conditional_expectation(p, g, n)
        record("e_product", _sup(E @ (_diag(g, D)[:, None] * E), _diag(Eg, D)[:, None] * E))
        # n-step expansion of the partition of unity
        us = _unit_partition(p)
        E1 = _e_matrix(p, D, n + 1)
        total = np.zeros_like(I)
        for u in us:
            au = _diag(shift_compose(u, n), D)
            total += au[:, None] * E1 * au[None, :]
        record("partition_expansion", _sup(total, E))
    # S M_f = M_{f o T} S
    S = koopman_matrix(k, D, 1)
    record("koopman_multiplier", _sup(S * _diag(f, D)[None, :], _diag(shift_compose(f), D + 1)[:, None] * S))
    # sum_i M_{u_i} S S^* M_{u_i} = 1
    if D >= a:
        SS = _e_matrix(p, D, 1)
        total = np.zeros_like(I)
        for u in _unit_partition(p):
            uu = _diag(u, D)
            total += uu[:, None] * SS * uu[None, :]
        record("partition_of_unity", _sup(total, I))
    return out


def _unit_partition(p):
    """``u_i = (v_i / p)^{1/2}`` with ``v_i`` the indicator of ``[i]``."""
    k = p.k
    lam = 1.0 / p
    out = []
    for i in range(1, k + 1):
        v = CylinderFunction.indicator(k, (i,))
        prod = v * lam
        out.append(CylinderFunction(k, prod.depth, np.sqrt(prod.values)))
    return out


# -- uniqueness -------------------------------------------------------------


def uniqueness_probe(H, beta, rho0, n_max, p, nu_beta, observe_depth=None):
    """Iterate ``rho_n(f) = int Lambda_n^{-1} alpha^n(L_beta^n f) drho0 / (same at f = 1)``.

    Returns ``[(n, tv_distance(rho_n, nu_beta), rho_n(1))]`` with the
    distance taken over depth-``observe_depth`` cylinders (default
    ``rho0.depth``).  ``nu_beta`` is a fixed point.  Every integrand must fit
    ``rho0.depth``, which caps ``n_max``.
    """
    from .gibbs import cocycles

    k = rho0.k
    m = rho0.depth if observe_depth is None else observe_depth
    if m > rho0.depth:
        raise ValueError(f"observe_depth {m} exceeds the start measure depth {rho0.depth}")
    W = beta_weight(H, beta)
    nu = nu_beta.marginal(m)
    basis = [CylinderFunction(k, m, np.eye(k**m)[j]) for j in range(k**m)]
    one = CylinderFunction.constant(k, 1.0)
    out = []
    for n in range(n_max + 1):
        inv = 1.0 / cocycles(p, H, beta, n).Lambda_n

        def rho(fn):
            return integrate(rho0, inv * shift_compose(ruelle_power(W, fn, n), n))

        norm = rho(one)
        masses = np.array([rho(b) for b in basis]) / norm
        approx = CylinderMeasure(k, m, masses, check=False)
        out.append((n, approx.total_variation(nu), float(norm)))
    return out


def perturbed_measure(nu, shift=0.1, i=0, j=1, level=1):
    """Move ``shift`` of mass from depth-``level`` cylinder ``i`` to ``j``, renormalize.

    Mass inside each of the two cylinders is rescaled proportionally, so the
    change is visible to functions of depth ``level``.
    """
    if not 0 <= level <= nu.depth:
        raise ValueError(f"level must be in 0..{nu.depth}")
    block = nu.masses.reshape(nu.k**level, -1).copy()
    mi, mj = block[i].sum(), block[j].sum()
    delta = min(shift, mi)
    block[i] *= (mi - delta) / mi if mi > 0 else 0.0
    if mj > 0:
        block[j] *= (mj + delta) / mj
    else:
        block[j] += delta / block.shape[1]
    return CylinderMeasure.from_weights(nu.k, nu.depth, block.reshape(-1))
