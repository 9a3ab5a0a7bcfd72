import numpy as np
import pytest

from uccfsim.downlink import (artificial_noise_direction, compute_a0,
                              dist_regmmse_precode, dist_transmit,
                              dist_tzf_precode, distributed_directions,
                              dl_sinr_ofdm, dl_sinr_subcarrier, dl_sum_rate,
                              expected_ap_element_powers,
                              expected_ap_powers_subcarrier, normalize_columns,
                              receive_downlink, receive_mmse_weights,
                              received_power_split, secrecy_transmit,
                              stacked_dl_channel, tmmse_central_ofdm,
                              tmmse_central_subcarrier)
from uccfsim.topology import AssociationMap


def random_channels(rng, M, K):
    return (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2)


class TestCentralSubcarrier:
    def test_scalar_case(self):
        h = 0.6 + 0.8j
        p = tmmse_central_subcarrier([[h]], noise_var=0.5, delta=[0.9])
        assert p[0, 0] == pytest.approx(np.sqrt(0.9) * np.conj(h) / (abs(h)**2 + 0.5))

    def test_defining_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            h = random_channels(rng, 4, 3)
            noise = 0.3
            delta = rng.uniform(0.1, 0.5, 3)
            P = tmmse_central_subcarrier(h, noise, delta)
            R = h.conj() @ h.T + noise * np.eye(4)
            rhs = h.conj() * np.sqrt(delta)
            assert np.linalg.norm(R @ P - rhs) / np.linalg.norm(rhs) < 1e-11

    def test_ul_dl_weight_equivalence(self):
        rng = np.random.default_rng(1)
        h = random_channels(rng, 4, 2)
        noise = 0.2
        delta = np.array([0.4, 0.6])
        P = tmmse_central_subcarrier(h, noise, delta)
        W = receive_mmse_weights(h, noise)
        assert np.allclose(P, W.conj() * np.sqrt(delta), atol=1e-12)

    def test_association_masks_channels(self):
        rng = np.random.default_rng(2)
        h = random_channels(rng, 3, 2)
        assoc = AssociationMap.from_ap_sets([[0, 1], [2]], num_aps=3)
        P = tmmse_central_subcarrier(h, 0.1, [0.5, 0.5], assoc=assoc)
        masked = h * assoc.zeta()
        expect = tmmse_central_subcarrier(masked, 0.1, [0.5, 0.5])
        assert np.allclose(P, expect)

    def test_rejects_zero_noise(self):
        with pytest.raises(ValueError):
            tmmse_central_subcarrier([[1.0]], noise_var=0.0, delta=[1.0])


class TestCentralOfdm:
    def test_single_subcarrier_collapses(self):
        rng = np.random.default_rng(3)
        h = random_channels(rng, 3, 2)
        P_flat = tmmse_central_subcarrier(h, 0.2, [0.3, 0.7])
        P_ofdm = tmmse_central_ofdm(h[:, :, None], [[0], [0]], 0.2,
                                    np.array([[0.3], [0.7]]))
        for k in range(2):
            assert np.allclose(P_ofdm[k][:, 0], P_flat[:, k], atol=1e-12)

    def test_blockwise_matches_per_subcarrier_solves(self):
        rng = np.random.default_rng(4)
        M, K, N = 3, 2, 4
        freq = (rng.standard_normal((M, K, N)) + 1j * rng.standard_normal((M, K, N)))
        sets = [np.arange(N), np.arange(N)]
        delta = rng.uniform(0.05, 0.2, size=(K, N))
        P = tmmse_central_ofdm(freq, sets, 0.4, delta)
        for n in range(N):
            flat = tmmse_central_subcarrier(freq[:, :, n], 0.4, delta[:, n])
            for k in range(K):
                got = P[k][:, n].reshape(M, N)[:, n]
                assert np.allclose(got, flat[:, k], atol=1e-10)

    def test_defining_identity(self):
        rng = np.random.default_rng(5)
        M, K, N = 2, 2, 3
        freq = (rng.standard_normal((M, K, N)) + 1j * rng.standard_normal((M, K, N)))
        sets = [[0, 1], [1, 2]]
        delta = np.full((K, N), 0.1)
        P = tmmse_central_ofdm(freq, sets, 0.3, delta)
        bracket = 0.3 * np.eye(M * N, dtype=complex)
        for l in range(K):
            H = stacked_dl_channel(freq, l)
            mask = np.zeros(N)
            mask[sets[l]] = 1.0
            bracket += (H.conj() * mask) @ H.T
        for k in range(K):
            H = stacked_dl_channel(freq, k)
            rhs = H.conj() * np.sqrt(delta[k])
            assert np.linalg.norm(bracket @ P[k] - rhs) / np.linalg.norm(rhs) < 1e-11


class TestAmplificationGain:
    def test_unity_when_binding(self):
        P = np.array([[np.sqrt(0.5)], [np.sqrt(0.5)]])   # one UE, two APs
        powers = expected_ap_powers_subcarrier(P)
        a0 = compute_a0(powers, p_max=0.5)
        assert a0 == pytest.approx(1.0)

    def test_binding_ap_dominates(self):
        a0 = compute_a0(np.array([0.5, 2.0]), p_max=1.0)
        assert a0 == pytest.approx(1.0 / np.sqrt(2.0))

    def test_scaling_law_on_symmetric_scene(self):
        rng = np.random.default_rng(6)
        h = random_channels(rng, 3, 2)
        P1 = tmmse_central_subcarrier(h, 0.2, [0.3, 0.3])
        P2 = tmmse_central_subcarrier(h, 0.2, [0.6, 0.6])
        a1 = compute_a0(expected_ap_powers_subcarrier(P1), 1.0)
        a2 = compute_a0(expected_ap_powers_subcarrier(P2), 1.0)
        # doubling every delta scales precoders by sqrt(2), the gain by 1/sqrt(2)
        assert a2 == pytest.approx(a1 / np.sqrt(2.0), rel=1e-10)
        g1 = dl_sinr_subcarrier(h, P1, a1, 0.2)
        g2 = dl_sinr_subcarrier(h, P2, a2, 0.2)
        assert np.allclose(g1, g2, rtol=1e-10)

    def test_every_constraint_met_one_tight(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            powers = rng.uniform(0.0, 3.0, size=4)
            caps = rng.uniform(0.5, 2.0, size=4)
            a0 = compute_a0(powers, caps)
            scaled = a0**2 * powers
            assert np.all(scaled <= caps + 1e-12)
            assert np.any(np.abs(scaled - caps) < 1e-9)

    def test_per_element_caps(self):
        elem = np.array([[0.1, 0.4], [0.2, 0.05]])
        a0 = compute_a0(elem.sum(axis=1), p_max=10.0,
                        element_powers=elem, element_max=0.2)
        assert a0 == pytest.approx(np.sqrt(0.2 / 0.4))

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError, match="nothing to transmit"):
            compute_a0(np.zeros(3), p_max=1.0)


class TestDlSinr:
    def test_single_ue_no_interference(self):
        rng = np.random.default_rng(8)
        h = random_channels(rng, 3, 1)
        P = tmmse_central_subcarrier(h, 0.1, [1.0])
        a0 = 2.0
        g = dl_sinr_subcarrier(h, P, a0, 0.1)
        expect = a0**2 * np.abs(h[:, 0] @ P[:, 0]) ** 2 / 0.1
        assert g[0] == pytest.approx(expect)

    def test_matches_empirical_ratio(self):
        rng = np.random.default_rng(9)
        h = random_channels(rng, 3, 2)
        P = tmmse_central_subcarrier(h, 0.2, [0.5, 0.5])
        a0 = compute_a0(expected_ap_powers_subcarrier(P), 1.0)
        g = dl_sinr_subcarrier(h, P, a0, 0.2)
        draws = 10**5
        from uccfsim.modulation import CONSTELLATIONS
        pts = CONSTELLATIONS["qpsk"]
        idx = rng.integers(0, 4, size=(draws, 2))
        x = pts[idx]
        rx = a0 * (x @ (h.T @ P).T)               # (draws, K receivers)
        for k in range(2):
            amp = a0 * (h[:, k] @ P[:, k])
            err = rx[:, k] - amp * x[:, k]
            noise = 0.2
            measured = np.abs(amp) ** 2 / (np.mean(np.abs(err) ** 2) + noise)
            assert abs(measured - g[k]) / g[k] < 0.05

    def test_sum_rate_values(self):
        assert dl_sum_rate([np.array([3.0])]) == pytest.approx(2.0)
        assert dl_sum_rate([np.array([0.0]), np.array([0.0])]) == 0.0

    def test_ofdm_equals_subcarrier_rate_for_single_symbol_ues(self):
        rng = np.random.default_rng(10)
        M, K = 3, 2
        freq = (rng.standard_normal((M, K, 1)) + 1j * rng.standard_normal((M, K, 1)))
        sets = [[0], [0]]
        delta = np.full((K, 1), 0.5)
        P = tmmse_central_ofdm(freq, sets, 0.2, delta)
        flat = tmmse_central_subcarrier(freq[:, :, 0], 0.2, delta[:, 0])
        g_ofdm = dl_sinr_ofdm(freq, P, sets, 1.5, 0.2)
        g_flat = dl_sinr_subcarrier(freq[:, :, 0], flat, 1.5, 0.2)
        assert dl_sum_rate(g_ofdm) == pytest.approx(
            dl_sum_rate([np.array([g]) for g in g_flat]), rel=1e-10)


class TestDistributed:
    def test_tzf_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            H = (rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
            P = dist_tzf_precode(H)
            assert np.linalg.norm(H.T @ P - np.eye(3)) < 1e-10

    def test_single_antenna_single_ue_is_mf_direction(self):
        h = np.array([[0.3 - 0.7j]])
        P = dist_tzf_precode(h)
        mf = h.conj() / np.abs(h)
        cos = np.abs(np.vdot(normalize_columns(P), normalize_columns(mf)))
        assert cos == pytest.approx(1.0)

    def test_tzf_infeasible_cases(self):
        with pytest.raises(ValueError, match="TZF infeasible"):
            dist_tzf_precode(np.ones((2, 3)))
        H = np.ones((3, 2), dtype=complex)      # rank 1 < 2 served UEs
        with pytest.raises(ValueError, match="TZF infeasible"):
            dist_tzf_precode(H)

    def test_regmmse_limits(self):
        rng = np.random.default_rng(12)
        H = (rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))
        assert np.allclose(dist_regmmse_precode(H, 0.0), dist_tzf_precode(H))
        big = 1e8 * np.linalg.norm(H) ** 2
        P_inf = normalize_columns(dist_regmmse_precode(H, big))
        mf = normalize_columns(H.conj())
        for j in range(2):
            cos = np.abs(np.vdot(P_inf[:, j], mf[:, j]))
            assert cos > 1.0 - 1e-6

    def test_regmmse_zero_with_rank_deficiency_raises(self):
        H = np.ones((3, 2), dtype=complex)
        with pytest.raises(ValueError):
            dist_regmmse_precode(H, 0.0)

    def test_mf_received_terms(self):
        # one AP, one UE: desired amplitude is sqrt(P) |h|, phase aligned
        h = np.array([[[1.2 - 0.9j]]])          # (M, U, K)
        assoc = AssociationMap.from_ap_sets([[0]], num_aps=1)
        dirs = distributed_directions(h, assoc, method="mf")
        powers = np.array([[2.0]])
        split = received_power_split(h, assoc, dirs, powers, 0)
        assert split["desired_amplitude"] == pytest.approx(
            np.sqrt(2.0) * np.abs(h[0, 0, 0]))
        assert split["co_associated"] == pytest.approx(0.0)

    def test_mf_coassociated_interference_nonzero(self):
        rng = np.random.default_rng(13)
        h = (rng.standard_normal((1, 1, 2)) + 1j * rng.standard_normal((1, 1, 2)))
        assoc = AssociationMap.from_ap_sets([[0], [0]], num_aps=1)
        dirs = distributed_directions(h, assoc, method="mf")
        powers = np.ones((1, 2))
        split = received_power_split(h, assoc, dirs, powers, 0)
        assert split["co_associated"] > 1e-6

    def test_empty_ap_sends_nothing(self):
        h = np.ones((2, 1, 1), dtype=complex)
        assoc = AssociationMap.from_ap_sets([[0]], num_aps=2)
        dirs = distributed_directions(h, assoc, method="mf")
        s = dist_transmit(dirs, np.ones((2, 1)), np.array([1.0 + 0j]))
        assert np.all(s[1] == 0)

    def test_tzf_kills_co_associated_interference_only(self):
        rng = np.random.default_rng(14)
        # AP 0: 3 antennas serving UEs 0, 1; AP 1: far AP serving UE 2
        h = (rng.standard_normal((2, 3, 3)) + 1j * rng.standard_normal((2, 3, 3)))
        assoc = AssociationMap.from_ap_sets([[0], [0], [1]], num_aps=2)
        dirs = distributed_directions(h, assoc, method="tzf")
        powers = np.full((2, 3), 0.5)
        split = received_power_split(h, assoc, dirs, powers, 0)
        assert split["co_associated"] < 1e-20 * split["desired"]
        assert split["cross_ap"] > 1e-8

    def test_tzf_reception_matches_structure(self):
        # co-associated-only scene: y_k = sum over serving APs of sqrt(P) x
        rng = np.random.default_rng(15)
        h = (rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2)))
        assoc = AssociationMap.from_ap_sets([[0, 1], [0, 1]], num_aps=2)
        dirs = distributed_directions(h, assoc, method="tzf")
        powers = np.array([[0.4, 0.6], [0.9, 0.1]])
        x = np.array([1.0 + 0j, -1.0 + 0j])
        y = receive_downlink(h, dist_transmit(dirs, powers, x))
        expect = np.array([(np.sqrt(0.4) + np.sqrt(0.9)) * x[0],
                           (np.sqrt(0.6) + np.sqrt(0.1)) * x[1]])
        assert np.allclose(y, expect, atol=1e-10)


class TestSecrecy:
    def test_noise_direction_orthogonal(self):
        rng = np.random.default_rng(16)
        for _ in range(25):
            h = random_channels(rng, 4, 2)
            p = artificial_noise_direction(h, rng)
            assert np.linalg.norm(p) == pytest.approx(1.0)
            assert np.max(np.abs(h.T @ p)) < 1e-12

    def test_needs_more_aps_than_ues(self):
        with pytest.raises(ValueError, match="null space"):
            artificial_noise_direction(np.ones((2, 2)), 0)

    def test_full_split_recovers_baseline(self):
        rng = np.random.default_rng(17)
        h = random_channels(rng, 4, 2)
        P = tmmse_central_subcarrier(h, 0.1, [0.5, 0.5])
        p_i = artificial_noise_direction(h, rng)
        x = np.array([1.0 + 0j, 0.0 + 1j])
        s = secrecy_transmit(P, p_i, 1.0, x, noise_symbol=0.7 + 0.1j, a0=1.3)
        assert np.allclose(s, 1.3 * (P @ x), atol=1e-12)

    def test_reception_scales_exactly_with_split(self):
        rng = np.random.default_rng(18)
        h = random_channels(rng, 5, 3)
        P = tmmse_central_subcarrier(h, 0.2, [0.3, 0.3, 0.3])
        p_i = artificial_noise_direction(h, rng)
        x = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) / np.sqrt(2)
        rho = 0.6
        base = receive_downlink(h, (P @ x)[:, None])
        sec = receive_downlink(h, secrecy_transmit(P, p_i, rho, x, 1.0 - 0.3j))
        assert np.allclose(sec, np.sqrt(rho) * base, atol=1e-12)

    def test_eavesdropper_hears_noise_ues_do_not(self):
        rng = np.random.default_rng(19)
        leaked = 0.0
        for _ in range(10**3):
            h = random_channels(rng, 4, 2)
            p_i = artificial_noise_direction(h, rng)
            h_e = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(2)
            assert np.max(np.abs(h.T @ p_i)) < 1e-12
            leaked += np.abs(h_e @ p_i) ** 2
        assert leaked / 10**3 > 0.1


class TestElementPowers:
    def test_ofdm_element_power_accounting(self):
        rng = np.random.default_rng(20)
        M, K, N = 2, 2, 3
        freq = (rng.standard_normal((M, K, N)) + 1j * rng.standard_normal((M, K, N)))
        sets = [[0, 2], [1]]
        delta = np.full((K, N), 0.2)
        P = tmmse_central_ofdm(freq, sets, 0.3, delta)
        elem = expected_ap_element_powers(P, sets)
        # direct accumulation over transmitted columns
        expect = np.zeros((M, N))
        for k, s in enumerate(sets):
            for n in s:
                for m in range(M):
                    expect[m, n] += np.abs(P[k][m * N + n, n]) ** 2
        assert np.allclose(elem, expect)
        a0 = compute_a0(elem.sum(axis=1), 1.0, element_powers=elem,
                        element_max=0.5)
        assert a0 > 0


class TestApImpairments:
    def test_disabled_by_zero_spread(self):
        from uccfsim.downlink import apply_ap_impairments
        s = np.array([1.0 + 1j, -2.0 + 0j])
        out = apply_ap_impairments(s, phase_std=0.0, gain_std=0.0, rng=0)
        assert np.array_equal(out, s)

    def test_per_ap_factor_applied_across_antennas(self):
        from uccfsim.downlink import apply_ap_impairments
        rng = np.random.default_rng(4)
        s = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        out = apply_ap_impairments(s, phase_std=0.2, gain_std=0.05, rng=9)
        ratio = out / s
        # one complex factor per AP, shared by its antennas
        assert np.allclose(ratio[:, 0], ratio[:, 1])
        assert not np.allclose(ratio[0, 0], ratio[1, 0])

    def test_phase_errors_break_coherent_combining(self):
        from uccfsim.downlink import apply_ap_impairments
        rng = np.random.default_rng(5)
        h = (rng.standard_normal((6, 1)) + 1j * rng.standard_normal((6, 1)))
        P = tmmse_central_subcarrier(h, 0.05, [1.0])
        x = np.array([1.0 + 0j])
        clean = np.abs(receive_downlink(h, (P @ x)[:, None])[0]) ** 2
        degraded = []
        for trial in range(200):
            s = apply_ap_impairments((P @ x)[:, None], phase_std=0.6,
                                     gain_std=0.1, rng=rng)
            degraded.append(np.abs(receive_downlink(h, s)[0]) ** 2)
        assert np.mean(degraded) < clean


class TestRegularizationContinuum:
    def test_noise_level_regularization_equals_central_mmse_form(self):
        # push-through identity: H*(H^T H* + sI)^-1 = (H* H^T + sI)^-1 H*,
        # so the locally regularized precoder at the true noise level is the
        # central MMSE solution over that AP's own channels
        rng = np.random.default_rng(21)
        for _ in range(20):
            H = (rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))
            s = float(rng.uniform(0.05, 0.5))
            local = dist_regmmse_precode(H, s)
            central = np.linalg.solve(H.conj() @ H.T + s * np.eye(4), H.conj())
            assert np.allclose(local, central, atol=1e-12)

    def test_mmse_point_never_worse_than_both_endpoints(self):
        # sum-rate at reg = noise sits at or above the worse of the
        # zero-forcing (reg=0) and matched-filter (reg->inf) endpoints
        rng = np.random.default_rng(22)
        noise = 0.3
        for _ in range(100):
            M, U, K = 2, 3, 4
            h = (rng.standard_normal((M, U, K))
                 + 1j * rng.standard_normal((M, U, K))) / np.sqrt(2)
            assoc = AssociationMap.from_ap_sets([[0, 1]] * 2 + [[0]] + [[1]],
                                                num_aps=M)
            powers = np.zeros((M, K))
            for m in range(M):
                served = assoc.ue_sets[m]
                for k in served:
                    powers[m, k] = 1.0 / len(served)
            rates = []
            for reg in (0.0, noise, 1e8):
                dirs = distributed_directions(h, assoc, method="regmmse",
                                              reg=reg, unit_norm=True)
                r = 0.0
                for k in range(K):
                    sp = received_power_split(h, assoc, dirs, powers, k)
                    r += np.log2(1 + sp["desired"]
                                 / (sp["co_associated"] + sp["cross_ap"] + noise))
                rates.append(r)
            assert rates[1] >= min(rates[0], rates[2]) - 1e-9


class TestDeadLinks:
    def test_mf_skips_zero_channel_with_warning(self):
        import warnings as w
        h = np.zeros((1, 1, 2), dtype=complex)
        h[0, 0, 0] = 1.0 + 0j        # UE 1's channel is exactly zero
        assoc = AssociationMap.from_ap_sets([[0], [0]], num_aps=1)
        with pytest.warns(UserWarning, match="zero channel"):
            dirs = distributed_directions(h, assoc, method="mf")
        assert np.all(dirs[0, :, 1] == 0)
        assert np.linalg.norm(dirs[0, :, 0]) == pytest.approx(1.0)
