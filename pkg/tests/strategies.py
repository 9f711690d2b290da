"""Hypothesis strategies shared by the property tests."""

import numpy as np
from hypothesis import strategies as st

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


@st.composite
def se3_twists(draw, max_angle=3.0):
    v = np.array(draw(st.lists(finite, min_size=3, max_size=3)))
    axis = np.array(draw(st.lists(st.floats(-1, 1), min_size=3, max_size=3)))
    n = np.linalg.norm(axis)
    angle = draw(st.floats(0.0, max_angle))
    w = axis / n * angle if n > 1e-3 else np.zeros(3)
    return np.concatenate([v, w])


@st.composite
def se2_twists(draw, max_angle=3.0):
    return np.array([draw(finite), draw(finite), draw(st.floats(-max_angle, max_angle))])


def twists(max_angle=3.0):
    return st.one_of(se3_twists(max_angle), se2_twists(max_angle))
