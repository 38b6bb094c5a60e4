"""Reactive policies over observation sequences, trajectories, and neighborhoods.

A reactive policy for a horizon-T problem is a total, deterministic map from
observation sequences of length 0..T-1 to actions.  The empty sequence governs
the first action; a trajectory's observation slot at t=0 is a distinguished
null symbol (NULL_OBS) so that indexing stays aligned with actions and
rewards.  Observation symbols may be composite (public, private); they are
flattened to dense integer ids with the private alphabet as the stride.

Sequence matching is prefix-anchored: a sequence "occurs" in a trajectory iff
it equals the first len(seq) received observations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NULL_OBS = -1


class AlphabetError(ValueError):
    """Unknown observation symbol, sequence, or action id."""


class HorizonError(ValueError):
    """Observation history too long for the policy's horizon."""


class SequenceNotRealized(ValueError):
    """The queried sequence is not a prefix of the trajectory's observations."""


@dataclass(frozen=True)
class ObsSymbol:
    """Composite observation: public index plus optional private index."""

    public_id: int
    private_id: int | None = None


@dataclass(frozen=True)
class Alphabet:
    """Observation alphabet sizes for one agent.

    n_private is None for agents that receive public observations only
    (e.g. the team setting); composite symbols flatten public-major with the
    private alphabet as stride.
    """

    n_public: int
    n_private: int | None = None

    @property
    def size(self) -> int:
        return self.n_public * (self.n_private or 1)

    def flatten(self, symbol: ObsSymbol) -> int:
        if not 0 <= symbol.public_id < self.n_public:
            raise AlphabetError(f"public id {symbol.public_id} outside [0, {self.n_public})")
        if self.n_private is None:
            if symbol.private_id is not None:
                raise AlphabetError("private id given for a public-only alphabet")
            return symbol.public_id
        if symbol.private_id is None or not 0 <= symbol.private_id < self.n_private:
            raise AlphabetError(f"private id {symbol.private_id} outside [0, {self.n_private})")
        return symbol.public_id * self.n_private + symbol.private_id

    def split(self, flat: int) -> ObsSymbol:
        if not 0 <= flat < self.size:
            raise AlphabetError(f"flat observation {flat} outside [0, {self.size})")
        if self.n_private is None:
            return ObsSymbol(flat)
        return ObsSymbol(flat // self.n_private, flat % self.n_private)


class SequenceSpace:
    """Dense tree index over all observation sequences of length 0..T-1.

    Sequences are tuples of flat observation ids.  Node 0 is the empty
    sequence; the children of a length-l node occupy a contiguous block at
    level l+1, so index arithmetic is a base-n_obs positional code plus a
    per-level offset.
    """

    def __init__(self, n_obs: int, horizon: int):
        if n_obs < 1:
            raise AlphabetError("need at least one observation symbol")
        if horizon < 1:
            raise HorizonError("horizon must be >= 1")
        self.n_obs = n_obs
        self.horizon = horizon
        self.level_offsets = [0]
        for level in range(1, horizon):
            self.level_offsets.append(self.level_offsets[-1] + n_obs ** (level - 1))
        self.size = self.level_offsets[-1] + n_obs ** (horizon - 1)
        # child_table[node, obs] -> child node id (only for nodes below the last level)
        self._interior = self.level_offsets[-1]

    def index(self, seq: tuple[int, ...]) -> int:
        if len(seq) >= self.horizon:
            raise HorizonError(f"sequence length {len(seq)} >= horizon {self.horizon}")
        local = 0
        for obs in seq:
            if not 0 <= obs < self.n_obs:
                raise AlphabetError(f"observation {obs} outside [0, {self.n_obs})")
            local = local * self.n_obs + obs
        return self.level_offsets[len(seq)] + local

    def sequence(self, idx: int) -> tuple[int, ...]:
        if not 0 <= idx < self.size:
            raise AlphabetError(f"sequence index {idx} outside [0, {self.size})")
        level = 0
        while level + 1 < self.horizon and idx >= self.level_offsets[level + 1]:
            level += 1
        local = idx - self.level_offsets[level]
        out = []
        for _ in range(level):
            out.append(local % self.n_obs)
            local //= self.n_obs
        return tuple(reversed(out))

    def level_of(self, idx: int) -> int:
        level = 0
        while level + 1 < self.horizon and idx >= self.level_offsets[level + 1]:
            level += 1
        return level

    def child(self, idx: int, obs: int) -> int:
        """Tree child; valid while the child is still shorter than the horizon."""
        level = self.level_of(idx)
        if level + 1 >= self.horizon:
            raise HorizonError("child would reach the horizon")
        local = idx - self.level_offsets[level]
        return self.level_offsets[level + 1] + local * self.n_obs + obs

    def child_array(self, nodes, obs, level: int):
        """Vectorized child lookup for same-level node arrays."""
        return self.level_offsets[level + 1] + (nodes - self.level_offsets[level]) * self.n_obs + obs

    def sequences(self):
        for idx in range(self.size):
            yield self.sequence(idx)

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class NeighborRef:
    """A single-entry policy edit: play `action` at `sequence` instead."""

    sequence: tuple[int, ...]
    action: int


class ReactivePolicy:
    """Total deterministic map from observation sequences to action ids.

    Stored as a flat array over the full sequence tree for O(1) lookup and
    trivial diffing; transform() copies, so instances are safe to share
    read-only across trials.
    """

    def __init__(self, space: SequenceSpace, actions, n_actions: int):
        self.space = space
        self.n_actions = n_actions
        arr = np.asarray(actions, dtype=np.int64)
        if arr.shape != (space.size,):
            raise AlphabetError(f"policy table must have {space.size} entries, got {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= n_actions):
            raise AlphabetError("policy table contains an unknown action id")
        self.table = arr

    @classmethod
    def uniform(cls, space: SequenceSpace, n_actions: int, action: int = 0) -> "ReactivePolicy":
        return cls(space, np.full(space.size, action, dtype=np.int64), n_actions)

    @classmethod
    def random(cls, space: SequenceSpace, n_actions: int, rng: np.random.Generator) -> "ReactivePolicy":
        return cls(space, rng.integers(0, n_actions, size=space.size), n_actions)

    def act(self, history: tuple[int, ...]) -> int:
        if len(history) >= self.space.horizon:
            raise HorizonError(f"history length {len(history)} >= horizon {self.space.horizon}")
        return int(self.table[self.space.index(history)])

    def __getitem__(self, seq: tuple[int, ...]) -> int:
        return self.act(seq)

    def transform(self, seq: tuple[int, ...], action: int) -> "ReactivePolicy":
        if not 0 <= action < self.n_actions:
            raise AlphabetError(f"action {action} outside [0, {self.n_actions})")
        idx = self.space.index(seq)
        table = self.table.copy()
        table[idx] = action
        return ReactivePolicy(self.space, table, self.n_actions)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ReactivePolicy)
            and self.space.size == other.space.size
            and self.n_actions == other.n_actions
            and bool(np.array_equal(self.table, other.table))
        )

    def diff(self, other: "ReactivePolicy") -> list[int]:
        """Sequence indices at which the two policies disagree."""
        return np.nonzero(self.table != other.table)[0].tolist()


def transform_policy(policy: ReactivePolicy, seq: tuple[int, ...], action: int) -> ReactivePolicy:
    return policy.transform(seq, action)


def act(policy: ReactivePolicy, history: tuple[int, ...]) -> int:
    return policy.act(history)


def enumerate_neighbors(policy: ReactivePolicy) -> list[NeighborRef]:
    """All single-entry edits of the policy (constructive neighborhood).

    Count is sum over sequences of (n_actions - 1); this differs from
    neighborhood_formula by construction (see that function's note).
    """
    refs = []
    for idx in range(policy.space.size):
        seq = policy.space.sequence(idx)
        current = int(policy.table[idx])
        for a in range(policy.n_actions):
            if a != current:
                refs.append(NeighborRef(seq, a))
    return refs


def sequence_count(obs_count: int, horizon: int) -> int:
    """Number of observation sequences of length 0..T-1 (geometric sum)."""
    if obs_count == 1:
        return horizon
    return (obs_count**horizon - 1) // (obs_count - 1)


def neighborhood_formula(action_count: int, obs_count: int, horizon: int) -> int:
    """Closed-form neighborhood size |A| * (|O|^T - 1)/(|O| - 1) - 1.

    This is the count used inside the sample bounds.  It exceeds the
    constructive edit count (|A|-1) * #sequences because it counts every
    (sequence, action) pair and subtracts one; both counts are exposed and
    the discrepancy is pinned by tests.
    """
    if horizon < 1:
        raise HorizonError("horizon must be >= 1")
    if action_count < 1:
        raise AlphabetError("need at least one action")
    if obs_count == 1:
        return horizon * (action_count - 1)
    return action_count * sequence_count(obs_count, horizon) - 1


@dataclass
class Trajectory:
    """One agent's T-step record of actions, rewards and observations.

    observations[t] is the symbol received before acting at step t;
    observations[0] is NULL_OBS.  All three lists have length exactly T.
    """

    actions: list[int]
    rewards: list[float]
    observations: list[int]

    def __post_init__(self):
        T = len(self.actions)
        if not (len(self.rewards) == len(self.observations) == T):
            raise ValueError("actions, rewards, observations must share length T")
        if T and self.observations[0] != NULL_OBS:
            raise ValueError("observations[0] must be the null initial symbol")

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def history(self, t: int) -> tuple[int, ...]:
        """Observation sequence available when acting at step t."""
        return tuple(self.observations[1 : t + 1])

    def realizes(self, seq: tuple[int, ...]) -> bool:
        if len(seq) >= self.horizon:
            return False
        return tuple(self.observations[1 : len(seq) + 1]) == tuple(seq)


def post_sequence_reward(traj: Trajectory, seq: tuple[int, ...]) -> float:
    """Sum of rewards at steps t >= len(seq), prefix-anchored match required.

    Raises SequenceNotRealized when the trajectory's first len(seq)
    observations differ from seq (the sample must be discarded).
    """
    if not traj.realizes(seq):
        raise SequenceNotRealized(f"sequence {seq} not realized")
    return float(sum(traj.rewards[len(seq) :]))


def pre_sequence_reward(traj: Trajectory, seq: tuple[int, ...]) -> float:
    if not traj.realizes(seq):
        raise SequenceNotRealized(f"sequence {seq} not realized")
    return float(sum(traj.rewards[: len(seq)]))
