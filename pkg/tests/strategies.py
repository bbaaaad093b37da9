"""Hypothesis strategies for points of P^n."""
import numpy as np
from hypothesis import strategies as st

_coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def raw_vectors(draw, n=None):
    n = draw(st.integers(1, 3)) if n is None else n
    re = draw(st.lists(_coord, min_size=n + 1, max_size=n + 1))
    im = draw(st.lists(_coord, min_size=n + 1, max_size=n + 1))
    v = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(v) < 1e-3:
        v[0] += 1.0
    return v


@st.composite
def point_pairs(draw):
    n = draw(st.integers(1, 3))
    return draw(raw_vectors(n)), draw(raw_vectors(n))


@st.composite
def unitaries(draw, n):
    seed = draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    M = g.normal(size=(n + 1, n + 1)) + 1j * g.normal(size=(n + 1, n + 1))
    Q, R = np.linalg.qr(M)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
