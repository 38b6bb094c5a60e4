"""Predator-prey pursuit on a 3x2 grid.

The subject (predator) starts in the bottom-left sector, the opponent (prey)
in the top-right.  The predator may move up, left or right; the prey down,
left or right; moves are simultaneous and clamp at the grid edges.  Catching
the prey (sharing its sector outside the left column) pays +100; the prey
reaching the left column is an escape worth -100; the prey cannot be caught
there.  Caught/escaped states absorb with zero reward.

Both agents see a public relation symbol (same sector / same column / same
row / none, in that precedence) that is correct with probability 0.85 and
uniform over the other three otherwise.  The predator additionally receives
a private signal of the prey's move direction, correct with probability 0.6.
"""

from __future__ import annotations

import numpy as np

from mces.domains.base import TabularDomain, noisy_row
from mces.policycore import Alphabet, ReactivePolicy, SequenceSpace

COLS, ROWS = 3, 2
N_CELLS = COLS * ROWS
LIVE, CAUGHT, ESCAPED = 0, 1, 2
UP, LEFT, RIGHT = 0, 1, 2  # predator actions
DOWN = 0  # prey action 0 (prey shares LEFT/RIGHT indices)

SAME_SECTOR, SAME_COLUMN, SAME_ROW, NONE = 0, 1, 2, 3


def _cell(col: int, row: int) -> int:
    return row * COLS + col


def _move(cell: int, action: int, predator: bool) -> int:
    col, row = cell % COLS, cell // COLS
    if predator:
        if action == UP:
            row = min(row + 1, ROWS - 1)
        elif action == LEFT:
            col = max(col - 1, 0)
        else:
            col = min(col + 1, COLS - 1)
    else:
        if action == DOWN:
            row = max(row - 1, 0)
        elif action == LEFT:
            col = max(col - 1, 0)
        else:
            col = min(col + 1, COLS - 1)
    return _cell(col, row)


def _relation(pred: int, prey: int) -> int:
    if pred == prey:
        return SAME_SECTOR
    if pred % COLS == prey % COLS:
        return SAME_COLUMN
    if pred // COLS == prey // COLS:
        return SAME_ROW
    return NONE


def _encode(flag: int, pred: int, prey: int) -> int:
    return flag * N_CELLS * N_CELLS + pred * N_CELLS + prey


def make_auav(
    horizon: int = 3, public_accuracy: float = 0.85, private_accuracy: float = 0.6
) -> TabularDomain:
    S = 3 * N_CELLS * N_CELLS
    A = 3
    trans = np.zeros((S, A, A, S))
    r0 = np.zeros((S, A, A))
    pub_symbol = np.zeros((S, A, A), dtype=np.int64)

    for flag in (LIVE, CAUGHT, ESCAPED):
        for pred in range(N_CELLS):
            for prey in range(N_CELLS):
                s = _encode(flag, pred, prey)
                for a0 in range(A):
                    for a1 in range(A):
                        if flag != LIVE:
                            trans[s, a0, a1, s] = 1.0
                            pub_symbol[s, a0, a1] = NONE
                            continue
                        p2 = _move(pred, a0, predator=True)
                        q2 = _move(prey, a1, predator=False)
                        if q2 % COLS == 0:
                            flag2, r = ESCAPED, -100.0
                        elif p2 == q2:
                            flag2, r = CAUGHT, 100.0
                        else:
                            flag2, r = LIVE, 0.0
                        trans[s, a0, a1, _encode(flag2, p2, q2)] = 1.0
                        r0[s, a0, a1] = r
                        pub_symbol[s, a0, a1] = _relation(p2, q2)

    # public symbol is a function of the *next* state, so rebuild it per s'
    pub_of_state = np.empty(S, dtype=np.int64)
    for flag in (LIVE, CAUGHT, ESCAPED):
        for pred in range(N_CELLS):
            for prey in range(N_CELLS):
                s = _encode(flag, pred, prey)
                pub_of_state[s] = _relation(pred, prey) if flag == LIVE else NONE

    alpha0 = Alphabet(n_public=4, n_private=3)
    alpha1 = Alphabet(n_public=4)
    kern0 = np.zeros((S, A, A, alpha0.size))
    kern1 = np.zeros((S, A, A, alpha1.size))
    for s2 in range(S):
        flag = s2 // (N_CELLS * N_CELLS)
        if flag == LIVE:
            pub = noisy_row(int(pub_of_state[s2]), 4, public_accuracy)
        else:
            pub = np.eye(4)[NONE]
        for a0 in range(A):
            for a1 in range(A):
                priv = noisy_row(a1, 3, private_accuracy)
                kern0[s2, a0, a1] = np.outer(pub, priv).ravel()
                kern1[s2, a0, a1] = pub
    init = np.zeros(S)
    init[_encode(LIVE, _cell(0, 0), _cell(2, 1))] = 1.0

    return TabularDomain(
        name="auav",
        init=init,
        trans=trans,
        obs_kernels=[kern0, kern1],
        rewards=[r0, -r0],
        alphabets=[alpha0, alpha1],
        reward_min=[-100.0, -100.0],
        reward_max=[100.0, 100.0],
        horizon=horizon,
    )


def auav_opponent_policies(horizon: int = 3, count: int = 4, seed: int = 77):
    """Prey policy set over public relation sequences: a committed runner,
    a descend-then-run, an evasive reactor, and a seeded random policy."""
    space = SequenceSpace(4, horizon)
    policies = []

    def from_fn(fn):
        table = np.array([fn(space.sequence(i)) for i in range(space.size)], dtype=np.int64)
        policies.append(ReactivePolicy(space, table, 3))

    from_fn(lambda seq: LEFT)  # rush the goal column
    from_fn(lambda seq: DOWN if not seq else LEFT)  # descend once, then run
    # evade: move right when the predator shares the column, else run left
    from_fn(lambda seq: RIGHT if seq and seq[-1] == SAME_COLUMN else LEFT)
    rng = np.random.default_rng(seed)
    while len(policies) < count:
        policies.append(ReactivePolicy.random(space, 3, rng))
    return policies[:count]
