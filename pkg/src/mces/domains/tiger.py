"""Two-agent tiger domains.

Competitive version: two physical states (tiger behind the left or right
door), three actions per agent (0=listen, 1=open-left, 2=open-right).  A
listening agent hears the correct growl with probability 0.85 provided no
door was opened this round; any door opening relocates the tiger uniformly
and growls carry no information.  Each agent also receives a private signal
of the opponent's last action, correct with probability 0.6, otherwise
uniform over the other two actions.  Base rewards: +10 for the gold door,
-100 for the tiger, -1 for listening; each agent additionally loses half of
what the opponent gains, so agent rewards span [-105, 60].

Cooperative (team) version: same physics, no private signals, each agent
hears its own independent growl, and a single shared team reward:
both-correct 20, both listen -2, listen+correct 9, listen+wrong -101, and
-100 when both open wrong or open different doors.
"""

from __future__ import annotations

import numpy as np

from mces.domains.base import TabularDomain, noisy_row
from mces.policycore import Alphabet, ReactivePolicy, SequenceSpace

LISTEN, OPEN_LEFT, OPEN_RIGHT = 0, 1, 2


def _base_reward(state: int, action: int) -> float:
    if action == LISTEN:
        return -1.0
    # open-left at tiger-left (state 0) is the tiger; mirrored for right
    if (action == OPEN_LEFT) == (state == 0):
        return -100.0
    return 10.0


def make_tiger_competitive(
    horizon: int = 3,
    public_accuracy: float = 0.85,
    private_accuracy: float = 0.6,
) -> TabularDomain:
    S, A = 2, 3
    trans = np.zeros((S, A, A, S))
    for s in range(S):
        for a0 in range(A):
            for a1 in range(A):
                if a0 == LISTEN and a1 == LISTEN:
                    trans[s, a0, a1, s] = 1.0
                else:
                    trans[s, a0, a1] = 0.5  # tiger relocates uniformly

    alphabet = Alphabet(n_public=2, n_private=3)
    obs_kernels = []
    for agent in range(2):
        kern = np.zeros((S, A, A, alphabet.size))
        for s2 in range(S):
            for a0 in range(A):
                for a1 in range(A):
                    if a0 == LISTEN and a1 == LISTEN:
                        growl = noisy_row(s2, 2, public_accuracy)
                    else:
                        growl = np.array([0.5, 0.5])
                    opponent_action = a1 if agent == 0 else a0
                    private = noisy_row(opponent_action, 3, private_accuracy)
                    kern[s2, a0, a1] = np.outer(growl, private).ravel()
        obs_kernels.append(kern)

    rewards = []
    for agent in range(2):
        r = np.zeros((S, A, A))
        for s in range(S):
            for a0 in range(A):
                for a1 in range(A):
                    own, opp = (a0, a1) if agent == 0 else (a1, a0)
                    r[s, a0, a1] = _base_reward(s, own) - 0.5 * _base_reward(s, opp)
        rewards.append(r)

    return TabularDomain(
        name="tiger-competitive",
        init=np.array([0.5, 0.5]),
        trans=trans,
        obs_kernels=obs_kernels,
        rewards=rewards,
        alphabets=[alphabet, alphabet],
        reward_min=[-105.0, -105.0],
        reward_max=[60.0, 60.0],
        horizon=horizon,
    )


_TEAM_REWARD = {
    # keys are sorted action-kind pairs against "correct door" semantics
    ("listen", "listen"): -2.0,
    ("correct", "listen"): 9.0,
    ("listen", "wrong"): -101.0,
    ("correct", "correct"): 20.0,
    ("wrong", "wrong"): -100.0,
    ("correct", "wrong"): -100.0,  # different doors
}


def _door_kind(state: int, action: int) -> str:
    if action == LISTEN:
        return "listen"
    return "wrong" if (action == OPEN_LEFT) == (state == 0) else "correct"


def make_tiger_cooperative(horizon: int = 3, public_accuracy: float = 0.85) -> TabularDomain:
    S, A = 2, 3
    trans = np.zeros((S, A, A, S))
    for s in range(S):
        for a0 in range(A):
            for a1 in range(A):
                if a0 == LISTEN and a1 == LISTEN:
                    trans[s, a0, a1, s] = 1.0
                else:
                    trans[s, a0, a1] = 0.5

    alphabet = Alphabet(n_public=2)
    obs_kernels = []
    for _agent in range(2):
        kern = np.zeros((S, A, A, 2))
        for s2 in range(S):
            for a0 in range(A):
                for a1 in range(A):
                    if a0 == LISTEN and a1 == LISTEN:
                        kern[s2, a0, a1] = noisy_row(s2, 2, public_accuracy)
                    else:
                        kern[s2, a0, a1] = np.array([0.5, 0.5])
        obs_kernels.append(kern)

    team = np.zeros((S, A, A))
    for s in range(S):
        for a0 in range(A):
            for a1 in range(A):
                kinds = tuple(sorted((_door_kind(s, a0), _door_kind(s, a1))))
                team[s, a0, a1] = _TEAM_REWARD[kinds]

    domain = TabularDomain(
        name="tiger-cooperative",
        init=np.array([0.5, 0.5]),
        trans=trans,
        obs_kernels=obs_kernels,
        rewards=[team, team],
        alphabets=[alphabet, alphabet],
        reward_min=[-101.0, -101.0],
        reward_max=[20.0, 20.0],
        horizon=horizon,
        team=True,
    )
    return domain


def tiger_opponent_policies(horizon: int = 3, count: int = 14, seed: int = 2024):
    """Fixed opponent policy set over *public* growl sequences.

    The named heads keep the set interpretable (always-listen, door
    committers, growl followers); seeded random policies fill the remainder.
    The public-only form lifts onto the composite alphabet at execution and
    doubles as the opponent model set for the belief learner.
    """
    space = SequenceSpace(2, horizon)
    policies = []

    def from_fn(fn):
        table = np.array([fn(space.sequence(i)) for i in range(space.size)], dtype=np.int64)
        policies.append(ReactivePolicy(space, table, 3))

    from_fn(lambda seq: LISTEN)
    from_fn(lambda seq: OPEN_LEFT)
    from_fn(lambda seq: OPEN_RIGHT)
    # listen, then open the door away from two consistent growls
    from_fn(
        lambda seq: (OPEN_RIGHT if seq[-1] == 0 else OPEN_LEFT)
        if len(seq) == horizon - 1 and len(set(seq)) == 1
        else LISTEN
    )
    # follow the last growl away from the tiger immediately after one listen
    from_fn(lambda seq: LISTEN if not seq else (OPEN_RIGHT if seq[-1] == 0 else OPEN_LEFT))

    rng = np.random.default_rng(seed)
    while len(policies) < count:
        policies.append(ReactivePolicy.random(space, 3, rng))
    return policies[:count]
