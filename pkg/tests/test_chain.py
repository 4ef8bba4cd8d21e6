import math

import numpy as np
import pytest

import cogcap as cc

from helpers import random_valid_params, three_sigma

DPL = cc.SchemeKind.DPL
TPL = cc.SchemeKind.TPL


class TestSnrAndThresholds:
    def test_table1_values(self, table1):
        snr, _ = cc.snr_and_thresholds(table1, TPL)
        assert snr.tolist() == [0.125, 0.5, 0.25, 1.0, 0.05]

    def test_no_interference_collapses_pairs(self, table1):
        snr, _ = cc.snr_and_thresholds(table1.replace(pu_signal_var=0.0), TPL)
        assert snr[0] == snr[2] and snr[1] == snr[3]

    def test_dpl_reuses_mode_one_for_nack_slots(self, table1):
        snr, thr = cc.snr_and_thresholds(table1, DPL)
        assert snr[4] == snr[0] and thr[4] == thr[0]

    def test_zero_power_mode_never_on(self, table1):
        p = table1.replace(su_power_psd=(0.0, 0.25, 1.0))
        _, thr = cc.snr_and_thresholds(p, TPL)
        assert math.isinf(thr[4])
        assert cc.channel_on_prob(thr[4], p) == 0.0

    def test_vanishing_rate_always_on(self, table1):
        p = table1.replace(su_rates_bps=(1e-9, 1e-9, 1e-9))
        _, thr = cc.snr_and_thresholds(p, TPL)
        for t in thr:
            assert cc.channel_on_prob(t, p) == pytest.approx(1.0, abs=1e-12)


class TestOnProb:
    def test_zero_threshold(self, table1):
        assert cc.channel_on_prob(0.0, table1) == 1.0

    def test_median(self, table1):
        assert cc.channel_on_prob(
            table1.fading_ss_mean * math.log(2.0), table1
        ) == pytest.approx(0.5, abs=1e-12)

    def test_negative_threshold_rejected(self, table1):
        with pytest.raises(ValueError):
            cc.channel_on_prob(-0.1, table1)

    def test_matches_exponential_draws(self, table1):
        rng = np.random.default_rng(31)
        draws = 10**6
        z = rng.exponential(table1.fading_ss_mean, draws)
        for thr in (0.03, 0.4, 1.7):
            p = cc.channel_on_prob(thr, table1)
            assert abs(float(np.mean(z > thr)) - p) <= three_sigma(p, draws)


class TestBuildChain:
    def test_state_catalog(self, table1):
        for scheme, nack_level in ((DPL, 1), (TPL, 0)):
            chain = cc.build_chain(table1, scheme, cc.sensing_probs(table1))
            states = chain.states
            assert [s.pu_active for s in states] == [
                True, True, True, True, False, False, False, False, True, True,
            ]
            assert [s.channel_on for s in states] == [True, False] * 5
            assert [s.power_level for s in states[:8]] == [1, 1, 2, 2, 1, 1, 2, 2]
            assert states[8].power_level == nack_level == states[9].power_level
            assert all(s.duration_s == 0.007 for s in states[:8])
            assert states[8].duration_s == states[9].duration_s == 0.01
            assert [s.outcome for s in states] == [
                "B-B", "B-B", "MD", "MD", "FA", "FA", "I-I", "I-I", "NACK", "NACK",
            ]

    def test_rows_sum_to_one_randomized(self):
        rng = np.random.default_rng(32)
        for _ in range(100):
            p = random_valid_params(rng)
            sensing = cc.sensing_probs(p)
            for scheme in (DPL, TPL):
                chain = cc.build_chain(p, scheme, sensing)
                assert np.abs(chain.matrix.sum(axis=1) - 1.0).max() <= 1e-12
                assert chain.matrix.min() >= 0.0 and chain.matrix.max() <= 1.0

    def test_no_transitions_into_nack_from_states_5_to_10(self, table1, table1_sensing):
        chain = cc.build_chain(table1, TPL, table1_sensing)
        assert np.all(chain.matrix[4:, 8:] == 0.0)

    def test_certain_miss_gives_memoryless_chain(self, table1, table1_sensing):
        p = table1.replace(feedback_miss_prob=1.0)
        chain = cc.build_chain(p, TPL, cc.sensing_probs(p))
        assert np.all(chain.matrix[:, 8:] == 0.0)
        expected = np.concatenate([chain.base_probs, [0.0, 0.0]])
        for row in chain.matrix:
            assert np.array_equal(row, expected)

    def test_nack_access_levels(self, table1, table1_sensing):
        chain = cc.build_chain(table1, TPL, table1_sensing)
        q1, q2 = chain.nack_access
        assert q1 == pytest.approx(0.7 * cc.pu_outage_prob(table1, 1), rel=1e-14)
        assert q2 == pytest.approx(0.7 * cc.pu_outage_prob(table1, 2), rel=1e-14)
        assert chain.matrix[0, 8] + chain.matrix[0, 9] == pytest.approx(q1, abs=1e-15)
        assert chain.matrix[3, 8] + chain.matrix[3, 9] == pytest.approx(q2, abs=1e-15)


class TestSteadyState:
    def test_memoryless_stationary_vector_is_base(self, table1):
        p = table1.replace(feedback_miss_prob=1.0)
        chain = cc.build_chain(p, TPL, cc.sensing_probs(p))
        steady = cc.steady_state(chain)
        expected = np.concatenate([chain.base_probs, [0.0, 0.0]])
        assert np.abs(steady.pi - expected).max() <= 1e-12

    def test_residual_and_normalization_randomized(self):
        rng = np.random.default_rng(33)
        for _ in range(20):
            p = random_valid_params(rng)
            for scheme in (DPL, TPL):
                chain = cc.build_chain(p, scheme, cc.sensing_probs(p))
                steady = cc.steady_state(chain)
                assert np.abs(steady.pi @ chain.matrix - steady.pi).max() <= 1e-10
                assert steady.pi.sum() == pytest.approx(1.0, abs=1e-12)
                assert steady.beta[list(cc.PU_ACTIVE_IDX)].sum() == pytest.approx(1.0, abs=1e-12)
                assert np.all(steady.beta[[4, 5, 6, 7]] == 0.0)

    def test_unreachable_states_get_exact_zero(self, table1):
        chain = cc.build_chain(table1, TPL, cc.perfect_sensing_override(table1))
        steady = cc.steady_state(chain)
        assert np.all(steady.pi[2:6] == 0.0)

    def test_idle_pu_leaves_active_mass_empty(self, table1):
        p = table1.replace(pu_prior=0.0)
        chain = cc.build_chain(p, TPL, cc.sensing_probs(p))
        steady = cc.steady_state(chain)
        assert np.all(np.isnan(steady.beta))
        assert math.isnan(cc.success_from_steady(p, TPL, steady))

    def test_matches_chain_sampling(self, table1, table1_sensing):
        chain = cc.build_chain(table1, TPL, table1_sensing)
        steady = cc.steady_state(chain)
        report = cc.sample_chain(chain, cc.SimConfig(mode="chain-sampling", slots=10**5, seed=5))
        tv = 0.5 * np.abs(report.empirical_pi - steady.pi).sum()
        assert tv <= 0.01


class TestSchemeEquivalences:
    def test_tpl_at_boundary_matches_dpl_bitwise(self, figure_params):
        p = cc.validate(
            figure_params.replace(su_power_psd=(0.25, 0.25, 1.0)), allow_boundary=True
        )
        sensing = cc.sensing_probs(p)
        chain_t = cc.build_chain(p, TPL, sensing)
        chain_d = cc.build_chain(p, DPL, sensing)
        assert np.array_equal(chain_t.matrix, chain_d.matrix)
        steady_t, steady_d = cc.steady_state(chain_t), cc.steady_state(chain_d)
        assert np.array_equal(steady_t.pi, steady_d.pi)
        assert cc.success_from_steady(p, TPL, steady_t) == cc.success_from_steady(
            p, DPL, steady_d
        )

    def test_boundary_success_insensitive_to_nack_rate(self, table1):
        # with r0 != r1 the NACK-state ON/OFF split differs but the aggregated
        # occupancy and hence the PU success rate still coincide
        p = cc.validate(table1.replace(su_power_psd=(0.25, 0.25, 1.0)), allow_boundary=True)
        sensing = cc.sensing_probs(p)
        suc_t = cc.pu_success_rate(p, TPL, sensing)
        suc_d = cc.pu_success_rate(p, DPL, sensing)
        assert suc_t == pytest.approx(suc_d, abs=1e-12)
        chain_t = cc.build_chain(p, TPL, sensing)
        chain_d = cc.build_chain(p, DPL, sensing)
        pi_t, pi_d = cc.steady_state(chain_t).pi, cc.steady_state(chain_d).pi
        assert np.abs(pi_t[:8] - pi_d[:8]).max() <= 1e-14
        assert pi_t[8:].sum() == pytest.approx(pi_d[8:].sum(), abs=1e-14)

    def test_dpl_perfect_sensing_immune_to_feedback_errors(self, table1):
        perfect = cc.perfect_sensing_override()
        suc = {
            eps: cc.pu_success_rate(table1.replace(feedback_miss_prob=eps), DPL, perfect)
            for eps in (0.0, 0.3)
        }
        assert abs(suc[0.0] - suc[0.3]) <= 1e-12
        # no PU-active mass ever sits at the high power level
        chain = cc.build_chain(table1, DPL, perfect)
        steady = cc.steady_state(chain)
        assert steady.beta[2] + steady.beta[3] == 0.0

    def test_tpl_success_decreases_with_nack_power(self, table1):
        sensing = cc.sensing_probs(table1)
        values = []
        for p0 in (0.0, 0.05, 0.1, 0.2, 0.25):
            p = cc.validate(
                table1.replace(su_power_psd=(p0, 0.25, 1.0)), allow_boundary=True
            )
            values.append(cc.pu_success_rate(p, TPL, sensing))
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_success_nonincreasing_in_feedback_miss(self, table1):
        for scheme in (DPL, TPL):
            values = [
                cc.pu_success_rate(table1.replace(feedback_miss_prob=eps), scheme,
                                   cc.sensing_probs(table1))
                for eps in (0.0, 0.2, 0.5, 0.9, 1.0)
            ]
            assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


def test_dump_csv(table1, table1_sensing, tmp_path):
    chain = cc.build_chain(table1, TPL, table1_sensing)
    steady = cc.steady_state(chain)
    path = tmp_path / "chain.csv"
    cc.dump_csv(chain, steady, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 12
    assert lines[0].startswith("R[1],")
    # 17 significant digits survive a parse round-trip
    pi_back = [float(v) for v in lines[10].split(",")[1:]]
    assert np.abs(np.array(pi_back) - steady.pi).max() == 0.0
