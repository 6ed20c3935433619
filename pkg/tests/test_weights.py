import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GRID, binary_only, custom_family, fleet
from discfrag import (
    WeightCertificate,
    becker_doring_family,
    certify_kappa,
    construct_weight,
    power_law_family,
    power_weight,
    powerlaw_kappa_bound,
    shift_weight,
)
from discfrag.weights import kappa_ratios


class TestConstructWeight:
    def test_binary_only(self):
        cert = construct_weight(binary_only(), 0.5, 6, [0.0])
        assert np.array_equal(cert.w, [1, 4, 3, 4, 5, 6])
        assert cert.certified and cert.kappa_hat <= 0.5

    def test_no_daughters_gives_identity_weight(self):
        fam = custom_family(lambda n, t: 1.0, lambda n, j, t: 0.0)
        cert = construct_weight(fam, 0.5, 10, GRID)
        assert np.array_equal(cert.w, np.arange(1, 11))
        assert cert.kappa_hat == 0.0

    def test_becker_doring_third_entry(self):
        cert = construct_weight(becker_doring_family(), 0.5, 5, [0.0])
        assert cert.w[1] == 4.0
        assert cert.w[2] == 10.0

    @pytest.mark.parametrize("kappa", [0.0, 1.0, -0.2, 1.5])
    def test_target_range(self, kappa):
        with pytest.raises(ValueError):
            construct_weight(binary_only(), kappa, 4, [0.0])

    def test_records_construction(self):
        cert = construct_weight(binary_only(), 0.25, 4, [0.0, 1.0])
        assert cert.construction == {"kind": "iterative", "kappa_target": 0.25}
        assert cert.checked_grid["times"] == [0.0, 1.0]

    def test_fleet_members_certify(self, member):
        name, fam = member
        cert = construct_weight(fam, 0.5, 24, GRID)
        assert cert.certified
        assert cert.kappa_hat <= 0.5 + 1e-12
        assert np.all(cert.w >= np.arange(1, 25))


class TestCertifyKappa:
    def test_j2_contribution(self):
        R = kappa_ratios(power_weight(8, 4), power_law_family(0.0), 4, [0.0])
        assert R[0, 0] == 0.0078125

    def test_power_law_p8_below_eight_ninths(self):
        cert = certify_kappa(power_weight(8, 64), power_law_family(0.0), 64, [0.0])
        assert cert.certified and cert.kappa_hat <= 8 / 9

    def test_identity_weight_with_binary_fails_at_j2(self):
        cert = certify_kappa(np.arange(1.0, 5.0), binary_only(), 4, [0.0])
        assert not cert.certified
        assert cert.max_ratio == 1.0
        assert cert.witness == (2, 0.0)

    def test_floor_violation_is_uncertified(self):
        w = np.array([1.0, 1.5, 30.0, 40.0])
        cert = certify_kappa(w, custom_family(lambda n, t: 1.0, lambda n, j, t: 0.0), 4, [0.0])
        assert cert.max_ratio == 0.0 and not cert.certified

    @pytest.mark.parametrize("bad", [[1.0, 0.0, 3.0], [1.0, -2.0, 3.0], [1.0, np.nan, 3.0]])
    def test_nonpositive_weight(self, bad):
        with pytest.raises(ValueError):
            certify_kappa(bad, binary_only(), 3, [0.0])

    def test_short_weight(self):
        with pytest.raises(ValueError):
            certify_kappa([1.0, 2.0], binary_only(), 3, [0.0])

    @pytest.mark.parametrize("nu,p", [(0, 8), (1, 16), (-1, 3), (0.5, 10)])
    def test_analytic_bound_dominates(self, nu, p):
        cert = certify_kappa(power_weight(p, 128), power_law_family(nu), 128, [0.0])
        assert cert.max_ratio <= powerlaw_kappa_bound(nu, p) + 1e-12

    def test_monotone_in_N(self):
        fam = fleet()["becker_doring"]
        w = construct_weight(fam, 0.6, 30, GRID).w
        ratios = [certify_kappa(w, fam, N, GRID).max_ratio for N in range(2, 31)]
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))


class TestAnalyticBound:
    def test_values(self):
        assert powerlaw_kappa_bound(0, 8) == pytest.approx(8 / 9, abs=1e-15)
        assert powerlaw_kappa_bound(-1, 1) == 2.0
        assert powerlaw_kappa_bound(0, 7) == 1.0

    @pytest.mark.parametrize("nu,p", [(-1.5, 8), (0, 0.5)])
    def test_range(self, nu, p):
        with pytest.raises(ValueError):
            powerlaw_kappa_bound(nu, p)


class TestShift:
    def test_index_shift(self):
        assert np.array_equal(shift_weight([1, 4, 10]), [4, 10])

    def test_floor_preserved(self):
        w = shift_weight(np.arange(1.0, 9.0))
        assert np.all(w >= np.arange(1, 8))

    def test_double_shift(self):
        w = np.arange(1.0, 12.0) ** 2
        assert np.array_equal(shift_weight(shift_weight(w)), w[2:])

    def test_too_short(self):
        with pytest.raises(ValueError):
            shift_weight([1.0])

    def test_shifted_power_law_inherits_kappa(self):
        fam = power_law_family(0.0)
        w = power_weight(8, 33)
        full = certify_kappa(w, fam, 33, [0.0])
        shifted = certify_kappa(shift_weight(w), fam.shifted(), 32, [0.0])
        assert shifted.max_ratio <= full.kappa_hat + 1e-12

    def test_accepts_certificate(self):
        cert = construct_weight(binary_only(), 0.5, 4, [0.0])
        assert np.array_equal(shift_weight(cert), [4, 3, 4])


class TestSerialisation:
    def test_keys_and_roundtrip(self):
        cert = construct_weight(becker_doring_family(), 0.5, 5, [0.0, 1.0])
        doc = json.loads(cert.to_json())
        assert set(doc) == {"w", "kappa_hat", "grid", "construction"}
        back = WeightCertificate.from_json_dict(doc)
        assert np.array_equal(back.w, cert.w)
        assert back.kappa_hat == cert.kappa_hat and back.witness == cert.witness

    def test_uncertified_marker(self):
        cert = certify_kappa(np.arange(1.0, 4.0), binary_only(), 3, [0.0])
        doc = json.loads(cert.to_json())
        assert doc["kappa_hat"] == "uncertified"
        assert doc["grid"]["argmax"] == [2, 0.0]
        assert WeightCertificate.from_json_dict(doc).kappa_hat is None


@settings(max_examples=40, deadline=None)
@given(nu=st.floats(-1.0, 3.0), kappa=st.floats(0.05, 0.95), N=st.integers(2, 40))
def test_construction_meets_target(nu, kappa, N):
    fam = power_law_family(nu)
    cert = construct_weight(fam, kappa, N, [0.0])
    assert np.all(cert.w >= np.arange(1, N + 1))
    assert certify_kappa(cert.w, fam, N, [0.0]).max_ratio <= kappa + 1e-12
