"""Hypothesis strategies shared across the test modules."""

import numpy as np
from hypothesis import strategies as st

from thermokms.shift import CylinderFunction


@st.composite
def cylinder_functions(draw, k=None, max_depth=3, positive=False, complex_values=False):
    k = draw(st.integers(2, 3)) if k is None else k
    d = draw(st.integers(0, max_depth))
    lo, hi = (0.1, 5.0) if positive else (-3.0, 3.0)
    elems = st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    vals = np.array(draw(st.lists(elems, min_size=k**d, max_size=k**d)))
    if complex_values:
        vals = vals + 1j * np.array(draw(st.lists(elems, min_size=k**d, max_size=k**d)))
    return CylinderFunction(k, d, vals)


@st.composite
def function_pairs(draw, max_depth=3, positive=False):
    k = draw(st.integers(2, 3))
    f = draw(cylinder_functions(k=k, max_depth=max_depth, positive=positive))
    g = draw(cylinder_functions(k=k, max_depth=max_depth, positive=positive))
    return f, g


def random_positive(rng, k, depth, lo=0.2, hi=2.0):
    return CylinderFunction(k, depth, rng.uniform(lo, hi, k**depth))
