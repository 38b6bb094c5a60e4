"""Money laundering pursuit: a blue team tracks illicit funds moving through
a placement -> layering -> integration chain toward a clean pot.

Locations: 0=initial, 1=bank, 2=insurance (placement), 3=offshore, 4=shell
(layering), 5=casino, 6=real-estate (integration), 7=clean pot.  The red
team moves the money (stay / advance-left / advance-right / retreat-left /
retreat-right along the chain); the blue team either re-places its sensor at
one of the six laundering locations or confiscates at the sensor.

Confiscating where the money sits pays +10 and ends the game; confiscating
elsewhere costs -100; the money reaching the clean pot costs -100 and ends
the game.  Blue's public observation says whether money and sensor share a
location, share a laundering tier, or neither (correct w.p. 0.85); blue also
hears a private category of red's last action (stay/advance/retreat, correct
w.p. 0.6).  Red sees the public symbol only.

The blue action count is 7 (six placements + confiscate); the observation
alphabet is 3 public x 3 private.
"""

from __future__ import annotations

import numpy as np

from mces.domains.base import TabularDomain, noisy_row
from mces.policycore import Alphabet, ReactivePolicy, SequenceSpace

INITIAL, POT = 0, 7
PLACEMENT, LAYERING, INTEGRATION = (1, 2), (3, 4), (5, 6)
STAY, ADV_L, ADV_R, RET_L, RET_R = range(5)
CONFISCATE = 6
SAME_LOCATION, SAME_TIER, NEITHER = 0, 1, 2

_ADVANCE = {
    0: {ADV_L: 1, ADV_R: 2},
    1: {ADV_L: 3, ADV_R: 4, RET_L: 0, RET_R: 0},
    2: {ADV_L: 3, ADV_R: 4, RET_L: 0, RET_R: 0},
    3: {ADV_L: 5, ADV_R: 6, RET_L: 1, RET_R: 2},
    4: {ADV_L: 5, ADV_R: 6, RET_L: 1, RET_R: 2},
    5: {ADV_L: 7, ADV_R: 7, RET_L: 3, RET_R: 4},
    6: {ADV_L: 7, ADV_R: 7, RET_L: 3, RET_R: 4},
    7: {},
}


def _money_next(loc: int, red_action: int) -> int:
    return _ADVANCE[loc].get(red_action, loc)


def _tier(loc: int) -> int | None:
    if loc in PLACEMENT:
        return 0
    if loc in LAYERING:
        return 1
    if loc in INTEGRATION:
        return 2
    return None


def _encode(flag: int, money: int, sensor: int) -> int:
    return flag * 48 + money * 6 + sensor


def _public_symbol(money: int, sensor_idx: int) -> int:
    sensor_loc = sensor_idx + 1
    if money == sensor_loc:
        return SAME_LOCATION
    tm, ts = _tier(money), _tier(sensor_loc)
    if tm is not None and tm == ts:
        return SAME_TIER
    return NEITHER


def red_action_category(action: int) -> int:
    if action == STAY:
        return 0
    return 1 if action in (ADV_L, ADV_R) else 2


def make_money_laundering(
    horizon: int = 3, public_accuracy: float = 0.85, private_accuracy: float = 0.6
) -> TabularDomain:
    S = 2 * 48
    A0, A1 = 7, 5
    trans = np.zeros((S, A0, A1, S))
    r0 = np.zeros((S, A0, A1))

    for flag in (0, 1):
        for money in range(8):
            for sensor in range(6):
                s = _encode(flag, money, sensor)
                for a0 in range(A0):
                    for a1 in range(A1):
                        if flag == 1:
                            trans[s, a0, a1, s] = 1.0
                            continue
                        sensor2 = a0 if a0 != CONFISCATE else sensor
                        if a0 == CONFISCATE and money == sensor + 1:
                            r0[s, a0, a1] = 10.0  # caught: game over
                            trans[s, a0, a1, _encode(1, money, sensor2)] = 1.0
                            continue
                        money2 = _money_next(money, a1)
                        if money2 == POT:
                            r0[s, a0, a1] = -100.0  # money cleaned: game over
                            trans[s, a0, a1, _encode(1, money2, sensor2)] = 1.0
                            continue
                        if a0 == CONFISCATE:
                            r0[s, a0, a1] = -100.0  # wrong sector
                        trans[s, a0, a1, _encode(0, money2, sensor2)] = 1.0

    alpha0 = Alphabet(n_public=3, n_private=3)
    alpha1 = Alphabet(n_public=3)
    kern0 = np.zeros((S, A0, A1, alpha0.size))
    kern1 = np.zeros((S, A0, A1, alpha1.size))
    for s2 in range(S):
        flag = s2 // 48
        money, sensor = (s2 % 48) // 6, s2 % 6
        if flag == 0:
            pub = noisy_row(_public_symbol(money, sensor), 3, public_accuracy)
        else:
            pub = np.eye(3)[NEITHER]
        for a0 in range(A0):
            for a1 in range(A1):
                priv = noisy_row(red_action_category(a1), 3, private_accuracy)
                kern0[s2, a0, a1] = np.outer(pub, priv).ravel()
                kern1[s2, a0, a1] = pub

    init = np.zeros(S)
    init[_encode(0, INITIAL, 2)] = 1.0  # money at the start, sensor on offshore

    return TabularDomain(
        name="money-laundering",
        init=init,
        trans=trans,
        obs_kernels=[kern0, kern1],
        rewards=[r0, -r0],
        alphabets=[alpha0, alpha1],
        reward_min=[-100.0, -10.0],
        reward_max=[10.0, 100.0],
        horizon=horizon,
    )


def laundering_opponent_policies(horizon: int = 3, count: int = 8, seed: int = 404):
    """Red policy set over public symbol sequences (3-symbol alphabet)."""
    space = SequenceSpace(3, horizon)
    policies = []

    def from_fn(fn):
        table = np.array([fn(space.sequence(i)) for i in range(space.size)], dtype=np.int64)
        policies.append(ReactivePolicy(space, table, 5))

    from_fn(lambda seq: STAY)
    from_fn(lambda seq: ADV_L)
    from_fn(lambda seq: ADV_R)
    from_fn(lambda seq: ADV_L if len(seq) % 2 == 0 else ADV_R)  # weave
    # flee the sensor: retreat when just sensed at the same location
    from_fn(lambda seq: RET_L if seq and seq[-1] == SAME_LOCATION else ADV_L)
    from_fn(lambda seq: RET_R if seq and seq[-1] == SAME_LOCATION else ADV_R)
    rng = np.random.default_rng(seed)
    while len(policies) < count:
        policies.append(ReactivePolicy.random(space, 5, rng))
    return policies[:count]
