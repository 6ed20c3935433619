import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import GRID, closed_form_family, custom_family, fleet, fleet_weight
from discfrag import (
    StateVector,
    TriangularMatrix,
    apply_A,
    apply_B,
    apply_G,
    certify_kappa,
    check_B_bound,
    check_holder_opnorm,
    check_resolvent_bound,
    estimate_holder,
    first_moment,
    opnorm_weighted,
    phi_w,
    power_law_family,
    power_weight,
    weighted_norm,
)
from discfrag.operators import generator_matrix

ZERO_RATES = custom_family(lambda n, t: 0.0, lambda n, j, t: 0.0)
LINEAR_RATES = custom_family(lambda n, t: float(n), lambda n, j, t: 0.0)


class TestApply:
    def test_A_sign_convention(self):
        assert np.array_equal(apply_A(closed_form_family(), 0.0, [5.0, 4.0]), [0, -4])
        assert np.array_equal(apply_A(ZERO_RATES, 0.0, [5.0, 4.0]), [0, 0])
        assert np.array_equal(apply_A(LINEAR_RATES, 1.0, [1.0, 1.0, 1.0]), [-1, -2, -3])

    def test_B(self):
        assert np.array_equal(apply_B(closed_form_family(), 0.0, [0.0, 1.0]), [2, 0])
        assert np.array_equal(apply_B(LINEAR_RATES, 0.0, [1.0, 2.0, 3.0]), [0, 0, 0])
        assert np.array_equal(apply_B(power_law_family(0.0), 0.0, [1.0, 0, 0, 0]), [0, 0, 0, 0])

    def test_G(self):
        fam = closed_form_family()
        assert np.array_equal(apply_G(fam, 0.0, [0.0, 1.0]), [2, -1])
        assert np.array_equal(apply_G(fam, 0.0, [1.0, 0.0]), [0, 0])
        assert np.array_equal(apply_G(ZERO_RATES, 0.0, [3.0, 1.0, 4.0]), [0, 0, 0])

    def test_accepts_state_vector(self):
        sv = StateVector(0.0, [0.0, 1.0])
        assert np.array_equal(apply_G(closed_form_family(), 0.0, sv), [2, -1])

    def test_last_component_has_no_gain(self, member):
        _, fam = member
        u = np.ones(9)
        assert apply_B(fam, 1.0, u)[-1] == 0.0

    def test_generator_matrix_matches_apply(self, member):
        _, fam = member
        u = np.linspace(0.2, 1.0, 7)
        assert np.allclose(generator_matrix(fam, 2.2, 7) @ u, apply_G(fam, 2.2, u), rtol=1e-14)


class TestNorms:
    def test_on_cone(self):
        assert weighted_norm([2.0, 1.0], [1.0, 4.0]) == 6.0
        assert phi_w([2.0, 1.0], [1.0, 4.0]) == 6.0

    def test_first_moment(self):
        assert first_moment([1.0, 1.0]) == 3.0

    def test_off_cone(self):
        assert weighted_norm([-2.0, 1.0], [1.0, 2.0]) == 4.0
        assert phi_w([-2.0, 1.0], [1.0, 2.0]) == 0.0

    def test_short_weight(self):
        with pytest.raises(ValueError):
            weighted_norm([1.0, 2.0, 3.0], [1.0, 2.0])

    def test_state_vector_methods(self):
        sv = StateVector(1.5, [2.0, 1.0])
        assert sv.N == 2 and sv.weighted_norm([1, 4]) == 6.0 and sv.first_moment() == 4.0
        with pytest.raises(ValueError):
            sv.u[0] = 1.0


class TestOpnorm:
    def test_examples(self):
        assert opnorm_weighted(np.eye(5), np.arange(1.0, 6.0)) == 1.0
        assert opnorm_weighted([[0.0, 2.0], [0.0, 0.0]], [1.0, 2.0]) == 1.0
        assert opnorm_weighted(np.zeros((3, 3)), [1.0, 2.0, 3.0]) == 0.0

    def test_matches_sup_over_basis(self):
        rng = np.random.default_rng(3)
        M = rng.normal(size=(6, 6))
        w = np.arange(1.0, 7.0) ** 2
        columns = [weighted_norm(M[:, j], w) / w[j] for j in range(6)]
        assert opnorm_weighted(M, w) == pytest.approx(max(columns), rel=1e-15)
        # no random vector beats the column formula
        for _ in range(200):
            x = rng.normal(size=6)
            assert weighted_norm(M @ x, w) <= opnorm_weighted(M, w) * weighted_norm(x, w) * (1 + 1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            opnorm_weighted(np.ones((2, 3)), [1.0, 2.0, 3.0])


class TestTriangularMatrix:
    def test_lower_triangle_zeroed(self):
        m = TriangularMatrix(np.ones((3, 3)), 0.0, 1.0)
        assert np.array_equal(np.tril(m.entries, -1), np.zeros((3, 3)))

    def test_csv_layout(self):
        m = TriangularMatrix([[1.0, 0.5], [0.0, 0.25]], 0.0, 1.0)
        assert m.to_csv() == "c1,c2\n1.0,0.5\n0.0,0.25\n"

    def test_json_roundtrip(self):
        m = TriangularMatrix([[1.0, 0.5], [0.0, 0.25]], 0.0, 1.0, rescaled=True)
        doc = json.loads(m.to_json())
        assert sorted(doc) == ["N", "entries", "rescaled", "s", "t"]
        back = TriangularMatrix.from_json_dict(doc)
        assert np.array_equal(back.entries, m.entries) and back.rescaled

    def test_rescaling_roundtrip(self):
        m = TriangularMatrix([[1.0, 0.5], [0.0, 0.25]], 1.0, 3.0)
        assert np.allclose(m.as_rescaled().entries, np.exp(-2.0) * m.entries)
        assert np.allclose(m.as_rescaled().as_evolution().entries, m.entries, rtol=1e-15)


class TestInequalityChecks:
    def test_B_bound_zero_daughters(self):
        assert check_B_bound(LINEAR_RATES, np.arange(1.0, 5.0), 0.0, 4) == 0.0

    def test_B_bound_power_law_j2(self):
        fam = power_law_family(0.0)
        assert check_B_bound(fam, power_weight(8, 2), 0.0, 2) == 0.0078125

    def test_B_bound_dominated(self, member):
        name, fam = member
        w = fleet_weight(name, fam, 16)
        for t in GRID:
            assert check_B_bound(fam, w, t, 16) <= w.kappa_hat + 1e-12

    def test_resolvent_examples(self):
        assert check_resolvent_bound(ZERO_RATES, np.arange(1.0, 5.0), 0.0, 1.0, 4) == (1.0, 0.0)
        r, _ = check_resolvent_bound(LINEAR_RATES, np.arange(1.0, 5.0), 0.0, 2.0, 4)
        assert r == pytest.approx(1 / 3, abs=1e-16)

    @pytest.mark.parametrize("lam", [0.0, -1.0, 2j])
    def test_resolvent_half_plane(self, lam):
        with pytest.raises(ValueError):
            check_resolvent_bound(LINEAR_RATES, np.arange(1.0, 4.0), 0.0, lam, 3)

    @pytest.mark.parametrize("lam", [1.0, 1 + 5j, 10.0, 0.01 - 3j])
    def test_resolvent_bounds_fleet(self, member, lam):
        name, fam = member
        w = fleet_weight(name, fam, 12)
        for t in (0.0, 2.5, 5.0):
            r, br = check_resolvent_bound(fam, w, t, lam, 12)
            assert r <= 1 / abs(lam) + 1e-12
            assert br <= w.kappa_hat + 1e-12

    def test_holder_trivial_cases(self):
        fam = power_law_family(0.0)
        w = power_weight(8, 8)
        cert = estimate_holder(fam, w, 1.0, 8, GRID)
        assert check_holder_opnorm(fam, w, cert, 0.0, 3.0, 1.0, 8) == 0.0
        moving = fleet()["power_law_nu0"]
        assert check_holder_opnorm(moving, w, cert, 2.0, 2.0, 1.0, 8) == 0.0

    def test_holder_bound_fleet(self, member):
        name, fam = member
        w = fleet_weight(name, fam, 12)
        cert = estimate_holder(fam, w, 1.0, 12, np.linspace(0, 5, 51))
        for s, t in [(0.0, 0.3), (1.0, 4.0), (0.2, 5.0)]:
            for tau in (0.0, 2.0, 4.5):
                val = check_holder_opnorm(fam, w, cert, s, t, tau, 12)
                assert val <= cert.bound(s, t) + 1e-10


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(u=arrays(float, 10, elements=st.floats(0, 10)), t=st.floats(0, 5))
def test_phi_w_dissipative_on_cone(u, t):
    fam = fleet()["power_law_nu0"]
    w = certify_kappa(power_weight(8, 10), fam, 10, GRID)
    lhs = phi_w(apply_B(fam, t, u), w.w)
    rhs = -w.kappa_hat * phi_w(apply_A(fam, t, u), w.w)
    assert lhs <= rhs + 1e-10 * weighted_norm(u, w.w)


@settings(max_examples=50, deadline=None)
@given(u=arrays(float, 6, elements=finite), t=st.floats(0, 5))
def test_truncation_closure(u, t):
    fam = fleet()["becker_doring"]
    padded = np.concatenate([u, np.zeros(4)])
    assert np.array_equal(apply_G(fam, t, padded)[6:], np.zeros(4))
    assert np.allclose(apply_G(fam, t, padded)[:6], apply_G(fam, t, u), rtol=1e-14, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(A=arrays(float, (5, 5), elements=finite), B=arrays(float, (5, 5), elements=finite),
       c=finite)
def test_opnorm_homogeneous_and_submultiplicative(A, B, c):
    w = np.array([1.0, 3.0, 4.0, 9.0, 20.0])
    assert opnorm_weighted(c * A, w) == pytest.approx(abs(c) * opnorm_weighted(A, w), rel=1e-12, abs=1e-300)
    assert opnorm_weighted(A @ B, w) <= opnorm_weighted(A, w) * opnorm_weighted(B, w) * (1 + 1e-12) + 1e-300
