import numpy as np
import pytest

import chansense as cs

from conftest import gen_spec
from oracles import fixed_point_h, iterate_U

GOLDEN_U = [0.0, 1.0, 2.0, 3.0, 4.3214]
GOLDEN_M = [1.4997, 2.5206, 3.5577, 4.6003, 6.0815]


def make_two_state(p12, p22, ups, beta=0.9, rewards=(0.0, 1.0)):
    return cs.ProblemSpec(
        n_channels=len(ups),
        transition=cs.TransitionMatrix([[1 - p12, p12], [1 - p22, p22]]),
        rewards=cs.RewardVector(list(rewards)),
        initial_pmfs=tuple(cs.Pmf([1 - u, u]) for u in ups),
        threshold=2,
        discount=beta,
    )


class TestComputeU:
    def test_golden_values(self, golden_spec):
        U = cs.compute_U(golden_spec)
        assert np.allclose(U, GOLDEN_U, atol=5e-4)

    def test_matches_fixed_point_iteration(self, golden_spec):
        assert np.allclose(cs.compute_U(golden_spec), iterate_U(golden_spec), atol=1e-9)

    def test_beta_zero_collapses_to_rewards(self, golden_spec):
        from dataclasses import replace
        spec = replace(golden_spec, discount=1e-300)
        assert np.allclose(cs.compute_U(spec), golden_spec.rewards.values, atol=1e-12)

    def test_singular_system_detected(self):
        spec = cs.ProblemSpec(
            n_channels=2,
            transition=cs.TransitionMatrix([[1.0, 0.0], [0.0, 1.0]]),
            rewards=cs.RewardVector([0.0, 1.0]),
            initial_pmfs=(cs.Pmf([1.0, 0.0]), cs.Pmf([0.0, 1.0])),
            threshold=2,
            discount=1.0,
        )
        # 1x1 system coefficient 1 - beta*(p_22 - p_12) vanishes
        with pytest.raises(cs.DegenerateComputation):
            cs.compute_U(spec)

    def test_residuals_below_gate(self):
        for seed in range(20):
            spec = gen_spec(seed, k=4, n=2, el=3, constraint="try_A1")
            U = cs.compute_U(spec)
            P = spec.transition.matrix
            diff = P[2:, :] - P[1, :]
            resid = np.abs(U[2:] - (spec.rewards.values[2:] + spec.discount * diff @ U))
            assert resid.max() < 1e-9


class TestComputeM:
    def test_golden_values(self, golden_spec):
        U = cs.compute_U(golden_spec)
        M = cs.compute_M(golden_spec, U)
        assert np.allclose(M, GOLDEN_M, atol=5e-4)

    def test_beta_zero(self, golden_spec):
        from dataclasses import replace
        spec = replace(golden_spec, discount=1e-300)
        U = cs.compute_U(spec)
        assert np.allclose(cs.compute_M(spec, U), U, atol=1e-12)

    def test_zero_top_mass(self):
        # all of row K's mass below the threshold: M = U exactly
        spec = cs.ProblemSpec(
            n_channels=2,
            transition=cs.TransitionMatrix([[0.6, 0.4, 0.0], [0.5, 0.5, 0.0],
                                            [0.4, 0.6, 0.0]]),
            rewards=cs.RewardVector([0.0, 1.0, 2.0]),
            initial_pmfs=(cs.Pmf([0.5, 0.5, 0.0]), cs.Pmf([0.5, 0.5, 0.0])),
            threshold=3,
            discount=0.9,
        )
        U = cs.compute_U(spec)
        assert np.allclose(cs.compute_M(spec, U), U, atol=1e-15)


class TestComputeH:
    def test_matches_independent_fixed_point(self, golden_spec):
        assert cs.compute_h(golden_spec) == pytest.approx(fixed_point_h(golden_spec),
                                                          abs=1e-9)

    def test_beta_zero_limit(self, golden_spec):
        from dataclasses import replace
        spec = replace(golden_spec, discount=1e-300)
        pk_r = float(golden_spec.transition.matrix[-1] @ golden_spec.rewards.values)
        assert cs.compute_h(spec) == pytest.approx(pk_r, abs=1e-9)

    def test_two_state_closed_form(self):
        p12, p22, beta = 0.3, 0.7, 0.9
        spec = make_two_state(p12, p22, [0.4, 0.5], beta=beta)
        p21 = 1 - p22
        expected = (p22 - beta * p21 * p12) / (1 - beta * p21)
        assert cs.compute_h(spec) == pytest.approx(expected, abs=1e-12)

    def test_degenerate_denominator(self):
        # beta = 1 and all of row K's mass below the threshold
        spec = cs.ProblemSpec(
            n_channels=2,
            transition=cs.TransitionMatrix([[1.0, 0.0], [1.0, 0.0]]),
            rewards=cs.RewardVector([0.0, 1.0]),
            initial_pmfs=(cs.Pmf([1.0, 0.0]), cs.Pmf([1.0, 0.0])),
            threshold=2,
            discount=1.0,
        )
        with pytest.raises(cs.DegenerateComputation):
            cs.compute_h(spec)

    def test_h_dominates_top_row_reward(self):
        for seed in range(20):
            spec = gen_spec(seed, k=3, n=2)
            h = cs.compute_h(spec)
            assert h >= float(spec.transition.matrix[-1] @ spec.rewards.values) - 1e-9


class TestCheckConditions:
    def test_golden_passes(self, golden_spec):
        report = cs.check_conditions(golden_spec)
        assert report.all_ok
        assert not report.failures

    def test_golden_margins(self, golden_spec):
        report = cs.check_conditions(golden_spec)
        m = report.margins
        # adjacent-gap margins are R gaps (all 1) minus the discounted drifts
        assert m["a4:gap2:reward_vs_M"] == pytest.approx(1 - 0.0470, abs=5e-4)
        assert m["a4:gap3:reward_vs_M"] == pytest.approx(1 - 0.0829, abs=5e-4)
        assert m["a4:gap4:reward_vs_M"] == pytest.approx(1 - 0.0897, abs=5e-4)

    def test_dominance_reversal_fails_a1(self):
        report = cs.check_conditions(make_two_state(0.7, 0.3, [0.5]))
        assert not report.a1_ok
        assert any(v.condition == "A1" for v in report.failures)

    def test_positively_correlated_two_state_passes(self):
        report = cs.check_conditions(make_two_state(0.3, 0.7, [0.4, 0.5, 0.6]))
        assert report.all_ok

    def test_initial_outside_hull_fails_a2(self):
        report = cs.check_conditions(make_two_state(0.3, 0.7, [0.2, 0.5]))
        assert not report.a2_ok

    def test_unsorted_initials_fail_a2(self):
        report = cs.check_conditions(make_two_state(0.3, 0.7, [0.6, 0.4]))
        assert not report.a2_ok

    def test_degenerate_reported_as_a4(self):
        spec = cs.ProblemSpec(
            n_channels=2,
            transition=cs.TransitionMatrix([[1.0, 0.0], [1.0, 0.0]]),
            rewards=cs.RewardVector([0.0, 1.0]),
            initial_pmfs=(cs.Pmf([1.0, 0.0]), cs.Pmf([1.0, 0.0])),
            threshold=2,
            discount=1.0,
        )
        report = cs.check_conditions(spec)
        assert not report.a4_ok
        assert report.degenerate is not None

    def test_margins_reported_even_on_failure(self):
        report = cs.check_conditions(make_two_state(0.7, 0.3, [0.5]))
        assert "a1:P2>=P1" in report.margins
        assert report.margins["a1:P2>=P1"] < 0


class TestHullMembership:
    def test_rows_are_members(self, golden_spec):
        for i in range(1, 6):
            margin = cs.hull_membership_margin(golden_spec.transition.row(i),
                                               golden_spec.transition)
            assert margin >= -1e-9

    def test_mixtures_are_members(self, golden_spec):
        rng = np.random.default_rng(0)
        P = golden_spec.transition.matrix
        for _ in range(50):
            w = rng.dirichlet(np.ones(5))
            assert cs.hull_membership_margin(cs.Pmf(w @ P), golden_spec.transition) >= -1e-9

    def test_basis_outside_hull(self, golden_spec):
        # a point mass on state 1 is far outside the row hull
        margin = cs.hull_membership_margin(cs.Pmf.basis(1, 5), golden_spec.transition)
        assert margin < -1e-6

    def test_identical_rows_fallback(self):
        # singular matrix exercises the LP path
        tm = cs.TransitionMatrix([[0.5, 0.5], [0.5, 0.5]])
        assert cs.hull_membership_margin(cs.Pmf([0.5, 0.5]), tm) >= -1e-9
        assert cs.hull_membership_margin(cs.Pmf([0.2, 0.8]), tm) < -1e-3


class TestRewardSeparation:
    """Reward-separation consequences sampled on condition-passing instances."""

    @pytest.mark.parametrize("seed,k,el", [(0, 3, 3), (1, 4, 3), (2, 5, 5)])
    def test_separation_chain(self, seed, k, el):
        spec = gen_spec(seed, k=k, n=2, el=el)
        der = cs.derived_rewards(spec)
        R = spec.rewards.values
        P = spec.transition.matrix
        beta = spec.discount
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            y = rng.dirichlet(np.ones(k))
            x = y.copy()
            for _ in range(k):
                i = int(rng.integers(0, k - 1))
                j = int(rng.integers(i + 1, k))
                d = x[i] * rng.random()
                x[i] -= d
                x[j] += d
            d = x - y
            v = np.sort(rng.normal(size=k))
            assert d @ v >= -1e-9
            assert d @ der.M >= d @ der.U - 1e-9
            assert d @ der.U >= d @ R - 1e-9
            assert d @ R >= -1e-9
            assert d @ der.M >= beta * (d @ P) @ der.M - 1e-9

    def test_m_dominates_u_dominates_r(self):
        for seed in range(10):
            spec = gen_spec(seed, k=4, n=2, el=4)
            der = cs.derived_rewards(spec)
            assert np.all(der.M >= der.U - 1e-9)
            assert np.all(der.U >= spec.rewards.values - 1e-9)


class TestTwoStateReduce:
    def test_requires_two_states(self, golden_spec):
        with pytest.raises(ValueError):
            cs.two_state_reduce(golden_spec)

    def test_all_pass(self):
        rep = cs.two_state_reduce(make_two_state(0.3, 0.7, [0.4, 0.5, 0.6]))
        assert rep.ok and rep.positively_correlated and rep.initial_in_band \
            and rep.initial_chain
        assert rep.agrees_with_full_check

    def test_boundary_equal_rows(self):
        rep = cs.two_state_reduce(make_two_state(0.5, 0.5, [0.5]))
        assert rep.ok
        assert rep.agrees_with_full_check

    def test_membership_failure(self):
        rep = cs.two_state_reduce(make_two_state(0.3, 0.7, [0.2, 0.5]))
        assert not rep.initial_in_band and not rep.ok
        assert rep.agrees_with_full_check

    def test_equivalence_on_random_instances(self):
        rng = np.random.default_rng(2024)
        agree = 0
        for _ in range(300):
            p12, p22 = rng.random(), rng.random()
            ups = np.sort(rng.random(3)) if rng.random() < 0.7 else rng.random(3)
            beta = float(rng.uniform(0.05, 0.99))
            rep = cs.two_state_reduce(make_two_state(p12, p22, list(ups), beta=beta))
            agree += rep.agrees_with_full_check
        assert agree == 300
