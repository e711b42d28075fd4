"""Words, cylinders and locally constant functions on the full one-sided shift.

Symbols are 1-based, ``{1, ..., k}``.  A depth-``d`` cylinder function stores
``k**d`` values in lexicographic word order, first coordinate most
significant, so word ``(w_0, ..., w_{d-1})`` sits at index
``sum((w_j - 1) * k**(d-1-j))``.  That order is the basis order of every
matrix in the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DepthError, PositivityError

#: Largest ``k**d`` any cylinder basis may have.  Module-level so callers can
#: raise it for a one-off large computation.
BASIS_CAP = 250_000


def check_capacity(k, depth, cap=None):
    cap = BASIS_CAP if cap is None else cap
    # compare in log space first; k**depth can be astronomically large
    if depth * math.log(k) > math.log(cap) + 1e-9 or k**depth > cap:
        raise CapacityError(f"basis size {k}**{depth} exceeds cap {cap}")


@dataclass(frozen=True)
class ShiftSpace:
    """The full shift on ``k`` symbols."""

    k: int
    max_basis: int = BASIS_CAP

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"need an integer k >= 2, got {self.k!r}")

    @property
    def entropy(self):
        """Topological entropy, ``log k``."""
        return math.log(self.k)

    def cylinders(self, d):
        return enumerate_cylinders(self, d)


def enumerate_cylinders(space, d):
    """All depth-``d`` words in canonical (lexicographic) order."""
    if d < 0:
        raise DepthError(f"depth must be >= 0, got {d}")
    check_capacity(space.k, d, space.max_basis)
    return list(itertools.product(range(1, space.k + 1), repeat=d))


def word_index(word, k):
    idx = 0
    for s in word:
        if not 1 <= s <= k:
            raise ValueError(f"symbol {s} outside 1..{k}")
        idx = idx * k + (s - 1)
    return idx


def index_word(idx, k, d):
    out = []
    for _ in range(d):
        idx, r = divmod(idx, k)
        out.append(r + 1)
    return tuple(reversed(out))


class CylinderFunction:
    """A function on ``{1..k}^N`` depending only on the first ``depth`` symbols.

    Values are held in a read-only numpy array (float64 for real data,
    complex128 otherwise).  Arithmetic operators lift both operands to the
    larger depth first.
    """

    __slots__ = ("k", "depth", "values")

    def __init__(self, k, depth, values):
        k, depth = int(k), int(depth)
        if k < 2:
            raise ValueError(f"need k >= 2, got {k}")
        if depth < 0:
            raise DepthError(f"depth must be >= 0, got {depth}")
        check_capacity(k, depth)
        arr = np.array(values)
        if arr.dtype.kind in "biu":
            arr = arr.astype(np.float64)
        elif arr.dtype.kind == "f":
            arr = arr.astype(np.float64, copy=False)
        elif arr.dtype.kind == "c":
            arr = arr.astype(np.complex128, copy=False)
        else:
            raise TypeError(f"unsupported value dtype {arr.dtype}")
        arr = arr.reshape(-1)
        if arr.size != k**depth:
            raise ValueError(f"expected {k**depth} values for k={k}, depth={depth}, got {arr.size}")
        arr.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("CylinderFunction is immutable")

    @classmethod
    def _wrap(cls, k, depth, arr):
        # internal fast path: arr is already a flat float64/complex128 array of
        # the right size, produced by a routine that validated its inputs
        obj = object.__new__(cls)
        arr.flags.writeable = False
        object.__setattr__(obj, "k", k)
        object.__setattr__(obj, "depth", depth)
        object.__setattr__(obj, "values", arr)
        return obj

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, k, c=1.0):
        return cls(k, 0, [c])

    @classmethod
    def indicator(cls, k, word):
        """Indicator of the cylinder ``[word]``."""
        word = tuple(word)
        vals = np.zeros(k ** len(word))
        vals[word_index(word, k)] = 1.0
        return cls(k, len(word), vals)

    @classmethod
    def from_callable(cls, k, depth, fn):
        words = enumerate_cylinders(ShiftSpace(k), depth)
        return cls(k, depth, [fn(w) for w in words])

    # -- basic views ------------------------------------------------------

    @property
    def is_real(self):
        return self.values.dtype.kind == "f" or not np.any(self.values.imag)

    @property
    def real(self):
        return CylinderFunction(self.k, self.depth, self.values.real)

    def min(self):
        if not self.is_real:
            raise PositivityError("minimum of a complex function is undefined")
        return float(np.min(self.values.real))

    def is_positive(self):
        return self.is_real and self.min() > 0

    def require_positive(self, what="function"):
        if not self.is_positive():
            raise PositivityError(f"{what} must be strictly positive and real")
        return self

    def __call__(self, word):
        word = tuple(word)
        if len(word) < self.depth:
            raise DepthError(f"need a word of length >= {self.depth}")
        return self.values[word_index(word[: self.depth], self.k)]

    def __repr__(self):
        return f"CylinderFunction(k={self.k}, depth={self.depth}, values={self.values.tolist()!r})"

    # -- depth bookkeeping -----------------------------------------------

    def lift(self, depth):
        return lift_depth(self, depth)

    def restrict(self, depth, atol=None):
        """Drop trailing coordinates the function does not depend on.

        With ``atol`` set, dependence up to ``atol`` is tolerated and the
        children are averaged; without it the dependence must be exactly nil.
        """
        if depth > self.depth:
            raise DepthError(f"cannot restrict depth {self.depth} to {depth}")
        if depth == self.depth:
            return self
        block = self.values.reshape(self.k**depth, self.k ** (self.depth - depth))
        spread = np.max(np.abs(block - block[:, :1])) if block.size else 0.0
        if atol is None:
            if spread != 0:
                raise DepthError(f"function depends on coordinates beyond {depth}")
            return CylinderFunction(self.k, depth, block[:, 0])
        if spread > atol:
            raise DepthError(f"function varies by {spread:.3g} beyond coordinate {depth}")
        return CylinderFunction(self.k, depth, block.mean(axis=1))

    def compress(self, atol=0.0):
        """Restrict to the smallest depth that still represents the function."""
        scale = max(1.0, float(np.max(np.abs(self.values)))) if self.values.size else 1.0
        f = self
        while f.depth > 0:
            block = f.values.reshape(-1, f.k)
            spread = np.max(np.abs(block - block[:, :1]))
            if spread > atol * scale:
                break
            # an exact block keeps its value bit for bit; the mean may round
            merged = block[:, 0] if spread == 0 else block.mean(axis=1)
            f = CylinderFunction(f.k, f.depth - 1, merged)
        return f

    def allclose(self, other, atol=1e-12):
        d = max(self.depth, other.depth)
        return bool(np.allclose(self.lift(d).values, other.lift(d).values, rtol=0, atol=atol))

    def sup_distance(self, other):
        d = max(self.depth, other.depth)
        return float(np.max(np.abs(self.lift(d).values - other.lift(d).values)))

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, CylinderFunction):
            if other.k != self.k:
                raise ValueError(f"symbol counts differ: {self.k} vs {other.k}")
            return other
        return CylinderFunction.constant(self.k, other)

    def __add__(self, other):
        return _binary(np.add, self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return _binary(np.subtract, self, self._coerce(other))

    def __rsub__(self, other):
        return _binary(np.subtract, self._coerce(other), self)

    def __mul__(self, other):
        return _binary(np.multiply, self, self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _binary(np.divide, self, self._coerce(other))

    def __rtruediv__(self, other):
        return _binary(np.divide, self._coerce(other), self)

    def __neg__(self):
        return CylinderFunction(self.k, self.depth, -self.values)

    def __pow__(self, exponent):
        return pointwise("power", self, exponent=exponent)

    def conj(self):
        return pointwise("conj", self)

    def exp(self):
        return pointwise("exp", self)

    def log(self):
        return pointwise("log", self)


def lift_depth(f, depth):
    """View ``f`` as a depth-``depth`` function (value on ``w`` is ``f(w[:f.depth])``)."""
    if depth < f.depth:
        raise DepthError(f"cannot lift depth {f.depth} to smaller depth {depth}")
    if depth == f.depth:
        return f
    check_capacity(f.k, depth)
    return CylinderFunction._wrap(f.k, depth, np.repeat(f.values, f.k ** (depth - f.depth)))


def shift_compose(f, n=1):
    """``f o T^n``; each application adds one to the depth."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return f
    check_capacity(f.k, f.depth + n)
    return CylinderFunction._wrap(f.k, f.depth + n, np.tile(f.values, f.k**n))


def birkhoff_product(f, n):
    """``prod_{j<n} f o T^j`` at depth ``depth(f) + n - 1``; constant 1 for ``n = 0``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return CylinderFunction._wrap(f.k, 0, np.ones(1))
    if n == 1:
        return f
    top = f.depth + n - 1
    check_capacity(f.k, top)
    out = f.lift(top).values.copy()
    for j in range(1, n):
        # f o T^j on depth-`top` words: repeat f's values k^(top-depth-j) times
        # inside each block, tile k^j blocks.
        part = np.tile(np.repeat(f.values, f.k ** (top - f.depth - j)), f.k**j)
        out = out * part
    return CylinderFunction._wrap(f.k, top, out)


_BINARY = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}


def pointwise(op, *fs, exponent=None):
    """Elementwise ``op`` at the common (largest) depth of the arguments.

    ``op`` is one of ``add, sub, mul, div, conj, exp, log, power``.  ``log``
    and ``power`` need strictly positive real input.
    """
    if not fs:
        raise ValueError("pointwise needs at least one function")
    k = fs[0].k
    if any(f.k != k for f in fs):
        raise ValueError("functions live on different shift spaces")
    depth = max(f.depth for f in fs)
    vals = [f.lift(depth).values for f in fs]
    if op in _BINARY:
        if len(vals) != 2:
            raise ValueError(f"{op} takes two functions")
        out = _BINARY[op](vals[0], vals[1])
    elif op == "conj":
        out = np.conj(vals[0])
    elif op == "exp":
        out = np.exp(vals[0])
    elif op in ("log", "power"):
        f = fs[0]
        if not f.is_positive():
            raise PositivityError(f"{op} needs a strictly positive real function")
        x = vals[0].real
        if op == "log":
            out = np.log(x)
        else:
            if exponent is None:
                raise ValueError("power needs an exponent")
            out = np.exp(exponent * np.log(x)) if np.iscomplexobj(exponent) else x**exponent
    else:
        raise ValueError(f"unknown pointwise op {op!r}")
    return CylinderFunction._wrap(k, depth, _canonical(out))


def _binary(ufunc, a, b):
    # hot path of the arithmetic operators; same semantics as ``pointwise``
    if a.depth == b.depth:
        out = ufunc(a.values, b.values)
    elif a.depth > b.depth:
        # broadcast b over the trailing coordinates it ignores
        out = ufunc(a.values.reshape(b.values.size, -1), b.values[:, None]).reshape(-1)
    else:
        out = ufunc(a.values[:, None], b.values.reshape(a.values.size, -1)).reshape(-1)
    return CylinderFunction._wrap(a.k, max(a.depth, b.depth), _canonical(out))


def _canonical(arr):
    if arr.dtype.kind == "c":
        return arr.astype(np.complex128, copy=False)
    return arr.astype(np.float64, copy=False)
