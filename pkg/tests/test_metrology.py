import numpy as np
import pytest

from pptmet import (DensityMatrix, bound_entangled_4x4, collective_jz,
                    collective_split_diag, commutator_obs, ghz, metrology_report,
                    precision_inverse, qfi, separable_bound, skew_information,
                    sld, split_diag, werner)
from pptmet.core import JZ_QUBIT

from conftest import random_density, random_hermitian, random_pure

TARGET_4X4 = 32 - 16 * np.sqrt(2)


def var_oracle(rho_mat, a):
    """Independent 4·Var(A) evaluation by direct traces."""
    mean = np.trace(a @ rho_mat).real
    return np.trace(a @ a @ rho_mat).real - mean ** 2


class TestQfi:
    def test_ghz4_jz(self):
        st = ghz(4)
        assert np.isclose(qfi(st.rho, collective_jz(4)), 16.0, atol=1e-10)

    def test_maximally_mixed_zero(self, rng):
        rho = DensityMatrix(np.eye(8) / 8, (2, 2, 2))
        a = random_hermitian(rng, 8)
        assert abs(qfi(rho, a)) < 1e-9

    def test_analytic_4x4(self):
        st = bound_entangled_4x4()
        assert np.isclose(qfi(st.rho, collective_split_diag(4)), TARGET_4X4, atol=1e-10)

    def test_pure_state_is_four_variances(self, rng):
        for _ in range(200):
            rho = random_pure(rng, (2, 2))
            a = random_hermitian(rng, 4)
            assert np.isclose(qfi(rho, a), 4 * var_oracle(rho.mat, a), atol=1e-10)

    def test_convexity_spot_check(self, rng):
        a = random_hermitian(rng, 4)
        for _ in range(50):
            r1 = random_density(rng, (2, 2))
            r2 = random_density(rng, (2, 2))
            p = rng.random()
            mix = DensityMatrix(p * r1.mat + (1 - p) * r2.mat, (2, 2))
            assert qfi(mix, a) <= p * qfi(r1, a) + (1 - p) * qfi(r2, a) + 1e-7

    def test_additivity_under_tensoring(self, rng):
        for _ in range(25):
            r1 = random_density(rng, (2,), rank=2)
            r2 = random_density(rng, (3,), rank=2)
            a = random_hermitian(rng, 2)
            b = random_hermitian(rng, 3)
            joint = DensityMatrix(np.kron(r1.mat, r2.mat), (2, 3))
            a_tot = np.kron(a, np.eye(3)) + np.kron(np.eye(2), b)
            assert np.isclose(qfi(joint, a_tot), qfi(r1, a) + qfi(r2, b), atol=1e-9)

    def test_shift_invariance(self, rng):
        rho = random_density(rng, (2, 2), rank=2)
        a = random_hermitian(rng, 4)
        assert np.isclose(qfi(rho, a), qfi(rho, a + 2.7 * np.eye(4)), atol=1e-8)

    def test_non_hermitian_rejected(self, rng):
        rho = random_density(rng, (2,))
        with pytest.raises(ValueError, match="Hermitian"):
            qfi(rho, np.array([[0, 1], [0, 0]]))

    def test_werner_closed_form(self):
        a = np.kron(JZ_QUBIT, np.eye(2)) - np.kron(np.eye(2), JZ_QUBIT)
        for p in (0.2, 0.5, 0.9, 1.0):
            assert np.isclose(qfi(werner(p).rho, a), 8 * p * p / (1 + p), atol=1e-9)


class TestSld:
    def test_pure_state_form(self, rng):
        rho = random_pure(rng, (2, 2))
        a = random_hermitian(rng, 4)
        m = sld(rho, a)
        expected = 2j * (rho.mat @ a - a @ rho.mat)
        assert np.allclose(m, expected, atol=1e-9)
        assert np.isclose(np.trace(m @ m @ rho.mat).real, 4 * var_oracle(rho.mat, a),
                          atol=1e-8)

    def test_identities(self, rng):
        for _ in range(200):
            rho = random_density(rng, (2, 2), rank=int(rng.integers(1, 5)))
            a = random_hermitian(rng, 4)
            m = sld(rho, a)
            assert abs(np.trace(m @ rho.mat).real) < 1e-9
            assert np.isclose(np.trace(m @ m @ rho.mat).real, qfi(rho, a), atol=1e-9)

    def test_commuting_generator_gives_zero(self, rng):
        lam = np.array([0.4, 0.3, 0.2, 0.1])
        rho = DensityMatrix(np.diag(lam), (2, 2))
        a = np.diag(rng.standard_normal(4))
        assert np.abs(sld(rho, a)).max() < 1e-12

    def test_analytic_4x4_qfi_via_m(self):
        st = bound_entangled_4x4()
        a = collective_split_diag(4)
        m = sld(st.rho, a)
        assert np.isclose(np.trace(m @ m @ st.rho.mat).real, TARGET_4X4, atol=1e-9)

    def test_slope_equals_qfi_at_sld(self, rng):
        rho = random_density(rng, (2, 2), rank=3)
        a = random_hermitian(rng, 4)
        m = sld(rho, a)
        slope = np.trace(commutator_obs(a, m) @ rho.mat).real
        assert np.isclose(slope, qfi(rho, a), atol=1e-8)


class TestPrecisionInverse:
    def test_sld_saturates(self, rng):
        for _ in range(50):
            rho = random_density(rng, (2, 2), rank=3)
            a = random_hermitian(rng, 4)
            assert np.isclose(precision_inverse(rho, sld(rho, a), a), qfi(rho, a),
                              rtol=1e-7, atol=1e-9)

    def test_identity_measurement_zero(self, rng):
        rho = random_density(rng, (2, 2))
        a = random_hermitian(rng, 4)
        assert precision_inverse(rho, np.eye(4), a) == 0.0

    def test_random_measurements_bounded(self, rng):
        st = bound_entangled_4x4()
        a = collective_split_diag(4)
        fq = qfi(st.rho, a)
        for _ in range(100):
            m = random_hermitian(rng, 16)
            val = precision_inverse(st.rho, m, a)
            assert 0.0 <= val <= fq + 1e-7

    def test_cramer_rao_chain(self, rng):
        for _ in range(200):
            rho = random_density(rng, (2, 2), rank=int(rng.integers(1, 5)))
            a = random_hermitian(rng, 4)
            m = random_hermitian(rng, 4)
            assert precision_inverse(rho, m, a) <= qfi(rho, a) * (1 + 1e-7) + 1e-9


class TestSeparableBound:
    def test_qubit_jz(self):
        assert np.isclose(separable_bound([JZ_QUBIT] * 5), 5.0)

    def test_split_diag_pair_is_eight(self):
        for d in (3, 4, 7, 12):
            assert np.isclose(separable_bound([split_diag(d)] * 2), 8.0)

    def test_partial_sum_three_qubits(self):
        assert np.isclose(separable_bound([JZ_QUBIT, JZ_QUBIT, np.zeros((2, 2))]), 2.0)


class TestSkewInformation:
    def test_pure_state(self, rng):
        rho = random_pure(rng, (2, 2))
        a = random_hermitian(rng, 4)
        assert np.isclose(skew_information(rho, a), var_oracle(rho.mat, a), atol=1e-8)

    def test_maximally_mixed(self, rng):
        rho = DensityMatrix(np.eye(4) / 4, (2, 2))
        assert abs(skew_information(rho, random_hermitian(rng, 4))) < 1e-10

    def test_analytic_4x4(self):
        st = bound_entangled_4x4()
        assert np.isclose(skew_information(st.rho, collective_split_diag(4)),
                          TARGET_4X4 / 4, atol=1e-6)

    def test_bounded_by_quarter_qfi(self, rng):
        for _ in range(100):
            rho = random_density(rng, (2, 2), rank=int(rng.integers(1, 5)))
            a = random_hermitian(rng, 4)
            skew = skew_information(rho, a)
            assert -1e-9 <= skew <= qfi(rho, a) / 4 + 1e-7


def test_metrology_report_fields():
    st = bound_entangled_4x4()
    rep = metrology_report(st.rho, [split_diag(4)] * 2)
    assert np.isclose(rep.qfi, TARGET_4X4, atol=1e-9)
    assert np.isclose(rep.separable_bound, 8.0)
    assert rep.violation == rep.qfi - rep.separable_bound
    d = rep.to_dict()
    assert set(d) == {"qfi", "separable_bound", "violation", "skew_information"}
    assert "sld_real" in rep.to_dict(include_sld=True)
