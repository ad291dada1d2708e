import numpy as np
import pytest

from sqkd import attack, keyrate, linalg
from conftest import make_attack_pool
from oracles import born_x_flip_probabilities


def trace_out_register(rho, d):
    """Independent index-level removal of the middle (dim 4) register."""
    r = rho.reshape(2, 4, d, 2, 4, d)
    return np.einsum("icjkcl->ijkl", r).reshape(2 * d, 2 * d)


class TestValidateAttack:
    def test_identity_pair_is_valid(self):
        atk = attack.validate_attack(np.eye(2), np.eye(2), 1)
        assert atk.ancilla_dim == 1

    def test_scaled_identity_rejected(self):
        with pytest.raises(ValueError, match="not unitary"):
            attack.validate_attack(2.0 * np.eye(2), np.eye(2), 1)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            attack.validate_attack(np.eye(4), np.eye(4), 1)

    def test_random_pair_is_valid(self):
        atk = attack.random_attack(4, 2024)
        residual = np.max(np.abs(atk.u_e.conj().T @ atk.u_e - np.eye(8)))
        assert residual <= 1e-10

    def test_ancilla_cap(self):
        with pytest.raises(ValueError):
            attack.validate_attack(np.eye(66), np.eye(66), 33)


class TestExtractVectors:
    def test_identity_attack_vectors(self):
        v = attack.extract_vectors(attack.identity_attack())
        np.testing.assert_allclose(v.e[0], [1.0])
        np.testing.assert_allclose(v.e[1], [0.0])
        np.testing.assert_allclose(v.e[2], [0.0])
        np.testing.assert_allclose(v.e[3], [1.0])
        np.testing.assert_allclose(v.e_ijk[0, 0, 0], [1.0])
        np.testing.assert_allclose(v.e_ijk[1, 3, 1], [1.0])
        np.testing.assert_allclose(v.g[1], [0.0])
        np.testing.assert_allclose(v.g[2], [0.0])

    def test_copy_attack_vectors(self):
        v = attack.extract_vectors(attack.z_measurement_attack())
        np.testing.assert_allclose(v.e[0], [1.0, 0.0])
        np.testing.assert_allclose(v.e[1], [0.0, 0.0])
        np.testing.assert_allclose(v.e[2], [0.0, 0.0])
        np.testing.assert_allclose(v.e[3], [0.0, 1.0])
        assert np.vdot(v.e[0], v.e[3]) == 0.0

    def test_identity_groups_hold_for_random_attacks(self):
        for atk in make_attack_pool(1000):
            residuals = attack.unitarity_residuals(attack.extract_vectors(atk))
            worst = max(residuals.values())
            assert worst <= 1e-9, f"residuals {residuals}"


class TestStatistics:
    def test_identity(self):
        s = attack.statistics(attack.identity_attack())
        assert s.p[0, 0, 0] == 1.0 and s.p[1, 1, 1] == 1.0
        assert s.p.sum() == 2.0
        assert s.p_pm == 0.0 and s.p_mp == 0.0

    def test_copy_attack_x_disturbance(self):
        atk = attack.z_measurement_attack()
        s = attack.statistics(atk)
        assert s.p[0, 0, 0] == 1.0 and s.p[1, 1, 1] == 1.0
        assert s.p[0, 0, 1] == s.p[1, 1, 0] == 0.0
        # Direct Born-rule evaluation of the reflected X rounds.
        want_pm, want_mp = born_x_flip_probabilities(atk.u_e, atk.u_f, 2)
        assert want_pm == pytest.approx(0.5, abs=1e-15)
        assert s.p_pm == pytest.approx(want_pm, abs=1e-15)
        assert s.p_mp == pytest.approx(want_mp, abs=1e-15)

    def test_blocks_normalized_for_random_attacks(self, attack_pool):
        for atk in attack_pool[:100]:
            s = attack.statistics(atk)
            np.testing.assert_allclose(s.p.reshape(2, 4).sum(axis=1), 1.0,
                                       atol=1e-9)
            assert s.p.min() >= 0.0 and s.p.max() <= 1.0

    def test_x_disturbance_agrees_with_born_rule(self, attack_pool):
        for atk in attack_pool[:100]:
            s = attack.statistics(atk)
            want_pm, want_mp = born_x_flip_probabilities(
                atk.u_e, atk.u_f, atk.ancilla_dim)
            assert s.p_pm == pytest.approx(want_pm, abs=1e-10)
            assert s.p_mp == pytest.approx(want_mp, abs=1e-10)


class TestOverlap:
    def test_identity(self):
        assert attack.overlap_e000_e131(attack.identity_attack()) == 1.0

    def test_copy_attack_records_orthogonal(self):
        assert attack.overlap_e000_e131(attack.z_measurement_attack()) == 0.0

    def test_x_bound_is_sound(self, attack_pool):
        for atk in attack_pool:
            bound = keyrate.cross_overlap_lower_bound(attack.statistics(atk))
            assert attack.overlap_e000_e131(atk).real >= bound - 1e-9


class TestRhoBE:
    def test_identity_attack_state(self):
        rho = attack.rho_be(attack.identity_attack())
        np.testing.assert_allclose(rho, np.diag([0.5, 0.5]), atol=1e-15)

    def test_hygiene_and_bob_marginal(self, attack_pool):
        for atk in attack_pool[:60]:
            d = atk.ancilla_dim
            rho = attack.rho_be(atk)
            assert abs(np.trace(rho).real - 1.0) <= 1e-10
            assert linalg.hermitian_eigenvalues(rho).min() >= -1e-10
            # Off-diagonal blocks in Bob's bit vanish by construction.
            assert np.max(np.abs(rho[:d, d:])) == 0.0
            # Bob's diagonal equals his bit marginals from the statistics.
            s = attack.statistics(atk)
            rho_b = linalg.partial_trace(rho, (2, d), keep=0)
            want = 0.5 * s.p.sum(axis=(0, 2))
            np.testing.assert_allclose(np.diag(rho_b).real, want, atol=1e-10)
            np.testing.assert_allclose(np.diag(rho_b).real.sum(), 1.0,
                                       atol=1e-10)


class TestRhoBEC:
    def test_identity_attack_weights(self):
        rho = attack.rho_bec(attack.identity_attack())
        want = np.zeros(8)
        want[0 * 4 + 0] = 0.5   # Bob 0, (correct, 0 flips)
        want[1 * 4 + 0] = 0.5   # Bob 1, (correct, 0 flips)
        np.testing.assert_allclose(rho, np.diag(want), atol=1e-15)

    def test_tracing_register_recovers_rho_be(self, attack_pool):
        for atk in attack_pool[:60]:
            got = trace_out_register(attack.rho_bec(atk), atk.ancilla_dim)
            np.testing.assert_allclose(got, attack.rho_be(atk), atol=1e-10)

    def test_entropy_matches_halved_statistics(self, attack_pool):
        for atk in attack_pool[:60]:
            s_direct = keyrate.s_bec(attack.statistics(atk))
            s_eigen = linalg.von_neumann_entropy(attack.rho_bec(atk))
            assert s_direct == pytest.approx(s_eigen, abs=1e-9)

    def test_hygiene(self, attack_pool):
        for atk in attack_pool[:60]:
            rho = attack.rho_bec(atk)
            assert abs(np.trace(rho).real - 1.0) <= 1e-10
            assert linalg.hermitian_eigenvalues(rho).min() >= -1e-10

    def test_conditioning_cannot_help_bob(self, attack_pool):
        # S(B|EC) <= S(B|E): extra conditioning never increases entropy.
        for atk in attack_pool[:40]:
            d = atk.ancilla_dim
            rho_bec_ = attack.rho_bec(atk)
            rho_be_ = attack.rho_be(atk)
            s_b_ec = (linalg.von_neumann_entropy(rho_bec_)
                      - linalg.von_neumann_entropy(
                          linalg.partial_trace(rho_bec_, (2, 4 * d), keep=1)))
            s_b_e = (linalg.von_neumann_entropy(rho_be_)
                     - linalg.von_neumann_entropy(
                         linalg.partial_trace(rho_be_, (2, d), keep=1)))
            assert s_b_ec <= s_b_e + 1e-9


class TestExactCollectiveRate:
    def test_identity_attack(self):
        assert attack.exact_collective_rate(attack.identity_attack()) \
            == pytest.approx(1.0, abs=1e-12)

    def test_copy_attack_leaks_everything(self):
        assert attack.exact_collective_rate(attack.z_measurement_attack()) \
            == pytest.approx(0.0, abs=1e-12)

    def test_bound_never_exceeds_exact(self, attack_pool):
        for atk in attack_pool[:100]:
            bound = keyrate.key_rate_bound(attack.statistics(atk)).rate
            assert bound <= attack.exact_collective_rate(atk) + 1e-9


class TestSymmetricRealizingAttack:
    def test_zero_noise_matches_identity_statistics(self):
        s = attack.statistics(attack.symmetric_realizing_attack(0.0, 0.0))
        assert s.p[0, 0, 0] == pytest.approx(1.0, abs=1e-12)
        assert s.p[1, 1, 1] == pytest.approx(1.0, abs=1e-12)
        assert s.p_pm == pytest.approx(0.0, abs=1e-12)
        assert s.p_mp == pytest.approx(0.0, abs=1e-12)

    def test_forward_only_noise(self):
        s = attack.statistics(attack.symmetric_realizing_attack(0.1, 0.0))
        assert s.p[0, 0, 0] == pytest.approx(0.9, abs=1e-12)
        assert s.p[1, 1, 1] == pytest.approx(0.9, abs=1e-12)
        assert s.p[0, 1, 1] == pytest.approx(0.1, abs=1e-12)
        assert s.p[1, 0, 0] == pytest.approx(0.1, abs=1e-12)
        assert s.p[0, 0, 1] == pytest.approx(0.0, abs=1e-12)
        assert s.p[0, 1, 0] == pytest.approx(0.0, abs=1e-12)

    def test_z_statistics_match_products(self):
        got = attack.statistics(attack.symmetric_realizing_attack(0.05, 0.05))
        want = keyrate.symmetric_stats(keyrate.ScenarioParams(0.05, 0.05, 0.0))
        np.testing.assert_allclose(got.p, want.p, atol=1e-9)

    def test_construction_is_unitary(self, rng):
        for _ in range(10):
            qf, qr = rng.random(2) * 0.5
            atk = attack.symmetric_realizing_attack(qf, qr)
            assert atk.ancilla_dim == 4
            residuals = attack.unitarity_residuals(attack.extract_vectors(atk))
            assert max(residuals.values()) <= 1e-9

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            attack.symmetric_realizing_attack(0.6, 0.0)
        with pytest.raises(ValueError):
            attack.symmetric_realizing_attack(0.0, -0.1)
