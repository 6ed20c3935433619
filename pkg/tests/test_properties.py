"""Randomised invariants of the solver across the fleet."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import CONSERVING, fleet, fleet_weight
from discfrag import evolution_matrix, integrate, opnorm_weighted, weighted_norm

N = 8
FLEET = fleet()
WEIGHTS = {name: fleet_weight(name, fam, N).w[:N] for name, fam in FLEET.items()}

nonneg = arrays(float, N, elements=st.floats(0, 5)).filter(lambda u: u.any())
span = st.tuples(st.floats(0, 4), st.floats(0.01, 1)).map(lambda p: (p[0], p[0] + p[1]))


@settings(max_examples=30, deadline=None)
@given(name=st.sampled_from(sorted(FLEET)), u0=nonneg, st_=span)
def test_positive_contractive_and_nonvanishing(name, u0, st_):
    s, t = st_
    u = integrate(FLEET[name], u0, s, t).values[-1]
    w = WEIGHTS[name]
    assert u.min() >= -1e-12
    assert 0 < weighted_norm(u, w) <= weighted_norm(u0, w) * (1 + 1e-10)
    if name in CONSERVING:
        m0 = np.arange(1, N + 1) @ u0
        assert abs(np.arange(1, N + 1) @ u - m0) <= 1e-10 * m0


@settings(max_examples=20, deadline=None)
@given(name=st.sampled_from(sorted(FLEET)), st_=span)
def test_matrix_is_substochastic_and_triangular(name, st_):
    s, t = st_
    U = evolution_matrix(FLEET[name], s, t, N).entries
    assert np.all(np.tril(U, -1) == 0.0)
    assert U.min() >= -1e-12
    assert opnorm_weighted(U, WEIGHTS[name]) <= 1 + 1e-10


@settings(max_examples=20, deadline=None)
@given(name=st.sampled_from(sorted(FLEET)), a=arrays(float, N, elements=st.floats(-3, 3)),
       b=arrays(float, N, elements=st.floats(-3, 3)), c=st.floats(-2, 2))
def test_linearity_matches_matrix(name, a, b, c):
    fam = FLEET[name]
    U = evolution_matrix(fam, 0.5, 1.5, N).entries
    out = integrate(fam, a + c * b, 0.5, 1.5).values[-1]
    assert np.allclose(out, U @ a + c * (U @ b), rtol=1e-8, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(name=st.sampled_from(sorted(FLEET)), r=st.floats(0.0, 1.0))
def test_composition(name, r):
    fam = FLEET[name]
    U_rs = evolution_matrix(fam, 0.0, r, N).entries
    U_tr = evolution_matrix(fam, r, 1.0, N).entries
    U_ts = evolution_matrix(fam, 0.0, 1.0, N).entries
    assert opnorm_weighted(U_tr @ U_rs - U_ts, WEIGHTS[name]) <= 1e-8
