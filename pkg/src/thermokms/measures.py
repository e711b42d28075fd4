"""Probability measures on the depth-D cylinder algebra."""

from __future__ import annotations

import numpy as np

from .errors import DepthError
from .shift import CylinderFunction, check_capacity, word_index

MASS_TOL = 1e-12


class CylinderMeasure:
    """Masses of the ``k**depth`` depth-``depth`` cylinders, canonical order.

    Only integrals of functions of depth ``<= depth`` are defined; asking for
    anything finer raises :class:`DepthError` instead of extrapolating.
    """

    __slots__ = ("k", "depth", "masses")

    def __init__(self, k, depth, masses, check=True):
        k, depth = int(k), int(depth)
        check_capacity(k, depth)
        arr = np.array(masses, dtype=np.float64).reshape(-1)
        if arr.size != k**depth:
            raise ValueError(f"expected {k**depth} masses, got {arr.size}")
        if check:
            if np.any(arr < -MASS_TOL):
                raise ValueError(f"negative mass {arr.min():.3g}")
            total = arr.sum()
            if abs(total - 1.0) > MASS_TOL:
                raise ValueError(f"total mass {total!r} is not 1")
        arr.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "masses", arr)

    def __setattr__(self, name, value):
        raise AttributeError("CylinderMeasure is immutable")

    def __repr__(self):
        return f"CylinderMeasure(k={self.k}, depth={self.depth}, masses={self.masses.tolist()!r})"

    @classmethod
    def from_weights(cls, k, depth, weights):
        """Normalize nonnegative weights to a probability."""
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        return cls(k, depth, w / w.sum())

    @classmethod
    def uniform(cls, k, depth):
        return cls(k, depth, np.full(k**depth, float(k) ** -depth))

    @classmethod
    def bernoulli(cls, probs, depth):
        """Product measure with one-symbol marginal ``probs``."""
        probs = np.asarray(probs, dtype=np.float64)
        masses = np.ones(1)
        for _ in range(depth):
            masses = np.outer(masses, probs).reshape(-1)
        return cls(len(probs), depth, masses)

    def marginal(self, depth):
        if depth > self.depth:
            raise DepthError(f"measure stored at depth {self.depth}, asked for {depth}")
        return CylinderMeasure(
            self.k, depth, self.masses.reshape(self.k**depth, -1).sum(axis=1), check=False
        )

    def mass(self, word):
        word = tuple(word)
        m = self.marginal(len(word))
        return float(m.masses[word_index(word, self.k)])

    def integrate(self, f):
        return integrate(self, f)

    def as_function(self):
        return CylinderFunction(self.k, self.depth, self.masses)

    def total_variation(self, other):
        """``sum |m - m'| / 2`` over cylinders of the shallower depth."""
        d = min(self.depth, other.depth)
        a, b = self.marginal(d).masses, other.marginal(d).masses
        return 0.5 * float(np.abs(a - b).sum())

    def is_consistent_with(self, other, atol=1e-12):
        """Refinement consistency: the finer measure marginalizes to the coarser."""
        fine, coarse = (self, other) if self.depth >= other.depth else (other, self)
        return bool(np.allclose(fine.marginal(coarse.depth).masses, coarse.masses, rtol=0, atol=atol))


def integrate(m, f):
    """``sum_w f(w) m([w])`` over depth-``m.depth`` cylinders."""
    if not isinstance(f, CylinderFunction):
        f = CylinderFunction.constant(m.k, f)
    if f.k != m.k:
        raise ValueError("function and measure live on different shift spaces")
    if f.depth > m.depth:
        raise DepthError(f"function depth {f.depth} exceeds measure depth {m.depth}")
    val = np.dot(f.lift(m.depth).values, m.masses)
    return complex(val) if np.iscomplexobj(val) else float(val)
