import numpy as np
import pytest

from mces.domains.base import OpponentExecutor, per_action_reward_ranges
from mces.domains.tiger import (
    LISTEN,
    OPEN_LEFT,
    OPEN_RIGHT,
    make_tiger_competitive,
    make_tiger_cooperative,
    tiger_opponent_policies,
)
from mces.oracle import (
    brute_force_lambda,
    epsilon_local_check,
    exact_policy_value,
    exact_post_values,
    mc_policy_value,
    neighbor_values,
    optimal_reactive_value,
)
from mces.policycore import ReactivePolicy, SequenceSpace


@pytest.fixture(scope="module")
def tiger():
    return make_tiger_competitive()


@pytest.fixture(scope="module")
def coop():
    return make_tiger_cooperative()


def always(domain_space, action):
    return ReactivePolicy.uniform(domain_space, 3, action)


def listen_opponent(horizon=3):
    space = SequenceSpace(2, horizon)
    return OpponentExecutor([ReactivePolicy.uniform(space, 3, LISTEN)])


class TestCompetitiveTables:
    def test_reward_coupling_values(self, tiger):
        r = tiger.rewards[0]
        # tiger-left, i opens right (gold), j opens left (tiger): 10 + 50 = 60
        assert r[0, OPEN_RIGHT, OPEN_LEFT] == pytest.approx(60.0)
        # tiger-left, i opens left (tiger), j opens right (gold): -100 - 5 = -105
        assert r[0, OPEN_LEFT, OPEN_RIGHT] == pytest.approx(-105.0)
        assert r[0, LISTEN, LISTEN] == pytest.approx(-0.5)
        assert r.min() == pytest.approx(-105.0)
        assert r.max() == pytest.approx(60.0)

    def test_public_kernel_row(self, tiger):
        # (listen, listen), tiger-left: growl-left 0.85 / growl-right 0.15,
        # private signal of opponent listen = 0.6/0.2/0.2
        row = tiger.obs_kernels[0][0, LISTEN, LISTEN]
        growl_left = row[:3].sum()
        assert growl_left == pytest.approx(0.85)
        assert row[3:].sum() == pytest.approx(0.15)
        assert row[0] == pytest.approx(0.85 * 0.6)

    def test_kernels_row_stochastic(self, tiger):
        assert np.allclose(tiger.trans.sum(axis=-1), 1.0, atol=1e-12)
        for k in tiger.obs_kernels:
            assert np.allclose(k.sum(axis=-1), 1.0, atol=1e-12)

    def test_alphabet_sizes(self, tiger):
        assert tiger.alphabets[0].size == 6
        assert tiger.spaces[0].size == 43
        assert tiger.n_actions == (3, 3)

    def test_per_action_ranges(self, tiger):
        ranges = per_action_reward_ranges(tiger, agent=0)
        assert ranges[LISTEN] == (pytest.approx(10.5), pytest.approx(-99.5))
        assert ranges[OPEN_LEFT] == (pytest.approx(60.0), pytest.approx(-105.0))


class TestCooperativeTables:
    def test_team_rewards(self, coop):
        r = coop.rewards[0]
        s = 0  # tiger-left: correct door is right
        assert r[s, OPEN_RIGHT, OPEN_RIGHT] == pytest.approx(20.0)
        assert r[s, LISTEN, LISTEN] == pytest.approx(-2.0)
        assert r[s, LISTEN, OPEN_RIGHT] == pytest.approx(9.0)
        assert r[s, LISTEN, OPEN_LEFT] == pytest.approx(-101.0)
        assert r[s, OPEN_LEFT, OPEN_LEFT] == pytest.approx(-100.0)
        assert r[s, OPEN_LEFT, OPEN_RIGHT] == pytest.approx(-100.0)
        assert np.array_equal(coop.rewards[0], coop.rewards[1])

    def test_public_only_alphabet(self, coop):
        assert coop.alphabets[0].size == 2
        assert coop.spaces[0].size == 7


class TestExactValue:
    def test_always_listen_hand_value(self, tiger):
        # both listen every step: r = -1 + 0.5 = -0.5 per step, T=3 -> -1.5
        pi = always(tiger.spaces[0], LISTEN)
        v = exact_policy_value(tiger, pi, listen_opponent())
        assert v.value == pytest.approx(-1.5)

    def test_horizon_one(self):
        d = make_tiger_competitive(horizon=1)
        pi = always(d.spaces[0], LISTEN)
        v = exact_policy_value(d, pi, listen_opponent(1))
        assert v.value == pytest.approx(-0.5)

    def test_mixture_linearity(self, tiger):
        pi = always(tiger.spaces[0], LISTEN)
        space_j = SequenceSpace(2, 3)
        a = ReactivePolicy.uniform(space_j, 3, LISTEN)
        b = ReactivePolicy.uniform(space_j, 3, OPEN_LEFT)
        va = exact_policy_value(tiger, pi, OpponentExecutor([a])).value
        vb = exact_policy_value(tiger, pi, OpponentExecutor([b])).value
        vmix = exact_policy_value(
            tiger, pi, OpponentExecutor([a, b], mixture_weights=[0.3, 0.7])
        ).value
        assert vmix == pytest.approx(0.3 * va + 0.7 * vb)

    def test_monte_carlo_agreement(self, tiger):
        rng = np.random.default_rng(5)
        pi = ReactivePolicy.random(tiger.spaces[0], 3, rng)
        opp = listen_opponent()
        exact = exact_policy_value(tiger, pi, opp).value
        banks = [
            __import__("mces.domains.base", fromlist=["AgentPolicies"]).AgentPolicies.single(
                pi.table
            ),
            opp.bank(tiger.spaces[1], tiger.alphabets[1]),
        ]
        mean, se = mc_policy_value(tiger, banks, 100_000, rng)
        assert abs(mean[0] - exact) < 3 * se[0] + 1e-6


class TestNeighborSweep:
    def test_neighbor_values_match_direct_eval(self, tiger):
        rng = np.random.default_rng(9)
        pi = ReactivePolicy.random(tiger.spaces[0], 3, rng)
        opp = listen_opponent()
        vals = neighbor_values(tiger, pi, opp)
        for idx in (0, 3, 17, 42):
            seq = tiger.spaces[0].sequence(idx)
            for a in range(3):
                direct = exact_policy_value(tiger, pi.transform(seq, a), opp).value
                assert vals[(idx, a)] == pytest.approx(direct, abs=1e-9)

    def test_post_value_sign_equivalence(self, tiger):
        # Exact V comparison and exact conditional Q_post comparison agree
        rng = np.random.default_rng(13)
        pi = ReactivePolicy.random(tiger.spaces[0], 3, rng)
        opp = listen_opponent()
        vals = neighbor_values(tiger, pi, opp)
        own = exact_policy_value(tiger, pi, opp).value
        q, pr = exact_post_values(tiger, pi, opp)
        for idx in (0, 2, 11, 40):
            if pr.get(idx, 0.0) <= 0:
                continue
            inc = int(pi.table[idx])
            for a in range(3):
                dv = vals[(idx, a)] - own
                dq = q[(idx, a)] - q[(idx, inc)]
                assert dv == pytest.approx(dq * pr[idx], abs=1e-9)


class TestEpsilonLocalCheck:
    def test_infinite_epsilon(self, tiger):
        pi = always(tiger.spaces[0], LISTEN)
        ok, _, _ = epsilon_local_check(tiger, pi, listen_opponent(), float("inf"))
        assert ok

    def test_nonoptimal_policy_witness(self, tiger):
        pi = always(tiger.spaces[0], OPEN_LEFT)  # open forever: clearly improvable
        ok, worst, gap = epsilon_local_check(tiger, pi, listen_opponent(), 0.0)
        assert not ok
        assert gap > 0
        assert worst is not None

    def test_global_optimum_is_locally_optimal(self, tiger):
        opp = listen_opponent()
        value, table = optimal_reactive_value(tiger, opp)
        pi = ReactivePolicy(tiger.spaces[0], table, 3)
        assert exact_policy_value(tiger, pi, opp).value == pytest.approx(value, abs=1e-9)
        ok, _, gap = epsilon_local_check(tiger, pi, opp, 0.0)
        assert ok and gap <= 1e-9

    def test_frozen_nodes_bound_value(self, tiger):
        opp = listen_opponent()
        free_value, _ = optimal_reactive_value(tiger, opp)
        frozen = {idx: OPEN_LEFT for idx in range(7, 43)}
        frozen_value, table = optimal_reactive_value(tiger, opp, frozen=frozen)
        assert frozen_value <= free_value + 1e-9
        assert all(table[idx] == OPEN_LEFT for idx in range(7, 43))


class TestBruteForceLambda:
    def test_identity_pair_zero(self, tiger):
        pi = always(tiger.spaces[0], LISTEN)
        lam = brute_force_lambda(tiger, pi, (), LISTEN, listen_opponent())
        assert lam == 0.0

    def test_neighbor_pair_bounded(self, tiger):
        pi = always(tiger.spaces[0], LISTEN)
        lam = brute_force_lambda(tiger, pi, (0,), OPEN_LEFT, listen_opponent())
        assert 0 < lam <= 990.0

    def test_aj_restriction_bounded_by_lambda_aj(self, tiger):
        pi = always(tiger.spaces[0], LISTEN)
        aj = (LISTEN, LISTEN, LISTEN)
        lam = brute_force_lambda(tiger, pi, (0,), OPEN_LEFT, listen_opponent(), aj_filter=aj)
        assert lam <= 660.0 + 1e-9


class TestOpponentSet:
    def test_count_and_determinism(self):
        a = tiger_opponent_policies()
        b = tiger_opponent_policies()
        assert len(a) == 14
        assert all(x == y for x, y in zip(a, b))

    def test_first_is_always_listen(self):
        pol = tiger_opponent_policies()[0]
        assert all(pol.table == LISTEN)
