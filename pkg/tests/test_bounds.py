import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mces.bounds import (
    LambdaBound,
    PacConfig,
    PacSchedule,
    blended_lambda,
    delta_m,
    epsilon_mcesp,
    imperfect_monitoring_bounds,
    infinity_sentinel,
    joint_neighborhood_bound,
    k_m_mcesp,
    lambda_aj,
    lambda_mcesp,
    mcesip_bounds,
    mcesmp_bounds,
)


def cfg(epsilon=0.5, delta=0.1, horizon=3, neighborhood=2, rmin=0.0, rmax=1.0, agents=1):
    return PacConfig(
        epsilon=epsilon,
        delta=delta,
        horizon=horizon,
        neighborhood=neighborhood,
        reward_min=rmin,
        reward_max=rmax,
        agent_count=agents,
    )


class TestDeltaM:
    def test_direct_values(self):
        assert delta_m(0.1, 1) == pytest.approx(0.060793, abs=1e-6)
        assert delta_m(0.1, 2) == pytest.approx(0.015198, abs=1e-6)

    def test_stage_zero_rejected(self):
        with pytest.raises(ValueError):
            delta_m(0.1, 0)

    @given(st.floats(0.01, 0.99), st.integers(1, 2000))
    @settings(max_examples=60)
    def test_partial_sums_below_delta(self, delta, terms):
        partial = sum(delta_m(delta, m) for m in range(1, terms + 1))
        assert partial < delta + 1e-12

    def test_series_limit(self):
        # sum 1/m^2 = pi^2/6, so the tail closes the gap to delta exactly
        delta = 0.3
        partial = sum(delta_m(delta, m) for m in range(1, 200_000))
        assert partial == pytest.approx(delta, rel=1e-4)


class TestLambdaMcesp:
    def test_tiger_value(self):
        c = cfg(horizon=3, rmin=-105.0, rmax=60.0)
        assert lambda_mcesp(c).value == pytest.approx(990.0)

    def test_unit_case(self):
        assert lambda_mcesp(cfg(horizon=1)).value == pytest.approx(2.0)

    def test_degenerate_range(self):
        assert lambda_mcesp(cfg(rmin=5.0, rmax=5.0)).value == 0.0


class TestKmMcesp:
    def test_direct(self):
        k = k_m_mcesp(LambdaBound(1.0), cfg(epsilon=0.5, neighborhood=2), 0.1)
        assert k == 30  # ceil(8 ln 40)

    def test_doubling_neighborhood_adds_log2_term(self):
        c1 = cfg(epsilon=0.5, neighborhood=8)
        c2 = cfg(epsilon=0.5, neighborhood=16)
        k1 = k_m_mcesp(LambdaBound(1.0), c1, 0.1)
        k2 = k_m_mcesp(LambdaBound(1.0), c2, 0.1)
        additive = 2 * (1.0 / 0.5) ** 2 * math.log(2)
        assert k2 >= k1
        assert abs((k2 - k1) - additive) <= 1.0  # within ceiling rounding

    def test_tiger_magnitude_pins_formula_shape(self):
        # raw tiger rewards at eps=0.05: astronomically large; assert > 1e9
        c = cfg(epsilon=0.05, neighborhood=26, rmin=-105.0, rmax=60.0)
        k = k_m_mcesp(LambdaBound(990.0), c, delta_m(0.1, 1))
        assert k > 10**9

    def test_zero_lambda_convention(self):
        assert k_m_mcesp(LambdaBound(0.0), cfg(), 0.1) == 1

    @given(st.floats(0.05, 2.0), st.integers(2, 500))
    @settings(max_examples=60)
    def test_halving_epsilon_quadruples(self, lam, n):
        c1 = cfg(epsilon=0.4, neighborhood=n)
        c2 = cfg(epsilon=0.2, neighborhood=n)
        k1 = k_m_mcesp(LambdaBound(lam), c1, 0.05)
        k2 = k_m_mcesp(LambdaBound(lam), c2, 0.05)
        assert abs(k2 - 4 * k1) <= 4  # ceil rounding x4


class TestEpsilonMcesp:
    def test_mismatched_counts_sentinel(self):
        eps = epsilon_mcesp(1.0, cfg(), 0.1, k_m=30)
        assert eps(3, 4) == infinity_sentinel(1.0)

    def test_at_k_half_epsilon(self):
        eps = epsilon_mcesp(1.0, cfg(epsilon=0.1), 0.1, k_m=30)
        assert eps(30, 30) == pytest.approx(0.05)

    def test_radical_value(self):
        eps = epsilon_mcesp(1.0, cfg(epsilon=0.5, neighborhood=2), 0.1, k_m=30)
        assert eps(1, 1) == pytest.approx(1.8783, abs=1e-4)

    def test_nonincreasing_in_p(self):
        eps = epsilon_mcesp(2.0, cfg(neighborhood=50), 0.05, k_m=500)
        values = [eps(p, p) for p in range(1, 500)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_linear_in_lambda(self):
        e1 = epsilon_mcesp(1.0, cfg(neighborhood=7), 0.1, k_m=100)
        e2 = epsilon_mcesp(2.0, cfg(neighborhood=7), 0.1, k_m=100)
        for p in (1, 10, 99):
            assert e2(p, p) == pytest.approx(2 * e1(p, p))


class TestMcesmpBounds:
    def test_direct_k(self):
        c = cfg(epsilon=0.5, neighborhood=10, agents=2)
        k, _ = mcesmp_bounds(c, LambdaBound(1.0), 0.1)
        assert k == 27  # ceil(8 (ln 10 + 0.25 ln 60))

    def test_half_epsilon_branch(self):
        c = cfg(epsilon=0.2, neighborhood=10, agents=2)
        k, eps = mcesmp_bounds(c, LambdaBound(1.0), 0.1)
        assert eps(k, k) == pytest.approx(0.1)

    def test_agent_count_sweep(self):
        # sweep evaluation of the printed formula: the 2Z-th roots shrink the
        # log interior toward ln(N), so k_m is nonincreasing in Z, bounded
        # below by the N-only term
        ks = []
        for z in range(2, 6):
            c = cfg(epsilon=0.5, neighborhood=10, agents=z)
            k, _ = mcesmp_bounds(c, LambdaBound(1.0), 0.1)
            ks.append(k)
        assert all(a >= b for a, b in zip(ks, ks[1:]))
        assert ks[0] > ks[-1]
        floor = 2 * (1.0 / 0.5) ** 2 * math.log(10)
        assert all(k >= floor for k in ks)

    def test_fallback_single_agent(self):
        c = cfg(epsilon=0.5, neighborhood=2, agents=1)
        k, _ = mcesmp_bounds(c, LambdaBound(1.0), 0.1)
        assert k == 30

    def test_radical_form_flag(self):
        c = cfg(epsilon=0.5, neighborhood=10, agents=2)
        _, printed = mcesmp_bounds(c, LambdaBound(1.0), 0.1, "printed")
        _, proof = mcesmp_bounds(c, LambdaBound(1.0), 0.1, "proof")
        # printed carries 1/sqrt(2p); proof 1/(2p): both agree at 2p = 1 only
        assert printed(8, 8) == pytest.approx(proof(8, 8) * (2 * 8) ** 0.25)


class TestJointNeighborhoodBound:
    def test_direct(self):
        assert joint_neighborhood_bound(3, 2, 2) == 18

    def test_single_action(self):
        assert joint_neighborhood_bound(1, 4, 2) == 4


class TestLambdaAj:
    def test_tiger_listen_sequence(self):
        ranges = [(10.5, -99.5)] * 3
        lam = lambda_aj(ranges)
        assert lam.value == pytest.approx(660.0)
        assert lam.kind == "per-action-sequence"

    def test_reduced_vs_global(self):
        c = cfg(horizon=3, rmin=-105.0, rmax=60.0)
        assert lambda_aj([(10.5, -99.5)] * 3).value <= lambda_mcesp(c).value

    def test_empty(self):
        assert lambda_aj([]).value == 0.0

    @given(
        st.lists(
            st.tuples(st.floats(-100, 100), st.floats(-100, 100)).map(
                lambda t: (max(t), min(t))
            ),
            min_size=1,
            max_size=5,
        )
    )
    @settings(max_examples=60)
    def test_never_exceeds_global_range(self, ranges):
        T = len(ranges)
        rmax = max(r[0] for r in ranges)
        rmin = min(r[1] for r in ranges)
        assert lambda_aj(ranges).value <= 2 * T * (rmax - rmin) + 1e-9


class TestMcesipBounds:
    def test_ratio_against_mcesp(self):
        c = cfg(epsilon=0.05, neighborhood=128, rmin=-105.0, rmax=60.0)
        dm = delta_m(0.1, 1)
        k_p = k_m_mcesp(lambda_mcesp(c), c, dm)
        k_ip, _ = mcesip_bounds(LambdaBound(660.0), c, dm)
        assert k_ip / k_p == pytest.approx((660 / 990) ** 2, abs=1e-6)

    def test_equal_lambda_identical(self):
        c = cfg(epsilon=0.1, neighborhood=20)
        dm = 0.05
        lam = lambda_mcesp(c)
        k_p = k_m_mcesp(lam, c, dm)
        k_ip, eps_ip = mcesip_bounds(lam, c, dm)
        eps_p = epsilon_mcesp(lam.value, c, dm, k_p)
        assert k_ip == k_p
        for p in (1, 5, k_p):
            assert eps_ip(p, p) == pytest.approx(eps_p(p, p))

    def test_half_epsilon_at_and_beyond_k(self):
        c = cfg(epsilon=0.1, neighborhood=20)
        k, eps = mcesip_bounds(LambdaBound(3.0), c, 0.05)
        assert eps(k, k) == pytest.approx(0.05)
        assert eps(k + 7, k + 7) == pytest.approx(0.05)  # printed p = q >= k_m


class TestImperfectMonitoring:
    def test_delta_e_zero_recovers_perfect(self):
        c = cfg(epsilon=0.1, neighborhood=50)
        dm = 0.05
        lam, lam_bar = LambdaBound(660.0), LambdaBound(990.0)
        k0, eps0, _ = imperfect_monitoring_bounds(lam, lam_bar, 0.0, c, dm)
        k_ref, eps_ref = mcesip_bounds(lam, c, dm)
        assert k0 == k_ref
        for p in (1, 10, k_ref):
            assert eps0(p, p) == pytest.approx(eps_ref(p, p))

    def test_delta_e_one_uses_complement(self):
        assert blended_lambda(LambdaBound(660.0), LambdaBound(990.0), 1.0).value == pytest.approx(
            990.0
        )

    def test_blend_value(self):
        # own evaluation of sqrt(0.75*660^2 + 0.25*990^2)
        assert blended_lambda(LambdaBound(660.0), LambdaBound(990.0), 0.25).value == pytest.approx(
            756.1250, abs=1e-3
        )

    def test_transform_test_blend(self):
        _, _, test = imperfect_monitoring_bounds(
            LambdaBound(1.0), LambdaBound(2.0), 0.25, cfg(), 0.05
        )
        # (0.75*zeta + 0.25*zeta_bar) > (0.75*eps + 0.25*eps_bar)
        assert test(1.0, 1.0, 0.9, 0.9)
        assert not test(0.5, 0.5, 0.9, 0.9)


class TestHoeffdingCoverage:
    def test_empirical_coverage(self):
        # k_m i.i.d. samples of a range-Lambda variable: deviation > eps/2
        # in fewer than delta_m of 1000 repetitions
        c = cfg(epsilon=0.5, neighborhood=2)
        dm = 0.1
        k = k_m_mcesp(LambdaBound(1.0), c, dm)
        rng = np.random.default_rng(7)
        true_mean = 0.5
        draws = rng.uniform(0.0, 1.0, size=(1000, k))
        deviations = np.abs(draws.mean(axis=1) - true_mean)
        assert (deviations > c.epsilon / 2).mean() < dm


class TestPacSchedule:
    def test_stage_advance(self):
        c = cfg(epsilon=0.2, neighborhood=128, rmin=0.0, rmax=1.0, horizon=3)
        sched = PacSchedule(c, lambda_mcesp(c))
        k1 = sched.k_m
        sched.advance()
        assert sched.stage == 2
        assert sched.k_m > k1  # delta_m shrinks, k grows

    def test_cap_moves_half_epsilon_branch(self):
        c = cfg(epsilon=0.2, neighborhood=128, rmin=0.0, rmax=1.0, horizon=3)
        sched = PacSchedule(c, lambda_mcesp(c), k_cap=100)
        assert sched.cap_binding
        assert sched.k_m == 100
        assert sched.epsilon_fn(100, 100) == pytest.approx(0.1)

    def test_mcesmp_cap(self):
        c = cfg(epsilon=0.2, neighborhood=189, rmin=0.0, rmax=1.0, horizon=3, agents=2)
        sched = PacSchedule(c, lambda_mcesp(c), k_cap=5000, variant="mcesmp")
        assert sched.k_m == 5000
        assert sched.epsilon_fn(5000, 5000) == pytest.approx(0.1)
