"""Generative domain contract and the shared batch simulator.

Tabular two-agent domains declare dense kernels:

    trans[s, a0, a1, s']          row-stochastic transition
    obs_kernels[i][s', a0, a1, o] per-agent observation given the *post*
                                  transition state and the joint action
    rewards[i][s, a0, a1]         per-agent reward on the pre-transition state

Simulation is vectorized across a batch of trajectories; every sampled batch
also reports each agent's observation-sequence tree nodes so learners can do
rejection-sampling acceptance tests and pruning frequency updates in O(batch).
Fixed seeds give bit-identical trajectory streams.

Larger domains (firefighting) implement the same simulate_batch signature
with structured, non-tabular stepping; they set enumerable=False.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mces.policycore import Alphabet, ReactivePolicy, SequenceSpace, Trajectory, NULL_OBS


@dataclass
class AgentPolicies:
    """Stacked flat policy tables for one agent; weights select a component
    per trajectory (mixture execution draws once per trajectory)."""

    tables: np.ndarray  # (K, n_nodes) int64
    weights: np.ndarray | None = None  # (K,) probabilities or None for K=1

    @classmethod
    def single(cls, table: np.ndarray) -> "AgentPolicies":
        return cls(np.asarray(table, dtype=np.int64)[None, :], None)

    def draw_components(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        if self.tables.shape[0] == 1 or self.weights is None:
            return np.zeros(batch, dtype=np.int64)
        return rng.choice(self.tables.shape[0], size=batch, p=self.weights)


@dataclass
class OpponentExecutor:
    """Fixed opponent: one policy, or a mixture drawn per trajectory."""

    policies: list[ReactivePolicy]
    mixture_weights: list[float] | None = None

    def __post_init__(self):
        if self.mixture_weights is not None:
            w = np.asarray(self.mixture_weights, dtype=float)
            if len(w) != len(self.policies):
                raise ValueError("one weight per policy required")
            if abs(w.sum() - 1.0) > 1e-9 or (w < 0).any():
                raise ValueError("mixture weights must be a probability vector")

    def bank(self, space: SequenceSpace, alphabet: Alphabet) -> AgentPolicies:
        tables = np.stack(
            [lift_policy_table(p, space, alphabet) for p in self.policies]
        )
        w = None
        if self.mixture_weights is not None and len(self.policies) > 1:
            w = np.asarray(self.mixture_weights, dtype=float)
        elif len(self.policies) > 1:
            w = np.full(len(self.policies), 1.0 / len(self.policies))
        return AgentPolicies(tables, w)

    def step(self, policy_index: int, history: tuple[int, ...]) -> int:
        return self.policies[policy_index].act(history)


def lift_policy_table(
    policy: ReactivePolicy, space: SequenceSpace, alphabet: Alphabet
) -> np.ndarray:
    """Flat table over `space`, lifting a public-only policy to a composite
    alphabet by projecting each symbol to its public part."""
    if policy.space.n_obs == space.n_obs and policy.space.horizon == space.horizon:
        return policy.table.copy()
    if alphabet.n_private is None or policy.space.n_obs != alphabet.n_public:
        raise ValueError("policy alphabet does not match the domain alphabet")
    if policy.space.horizon != space.horizon:
        raise ValueError("policy horizon does not match the domain horizon")
    out = np.empty(space.size, dtype=np.int64)
    stride = alphabet.n_private
    for idx in range(space.size):
        seq = space.sequence(idx)
        pub = tuple(sym // stride for sym in seq)
        out[idx] = policy.table[policy.space.index(pub)]
    return out


@dataclass
class BatchResult:
    """One batch of joint trajectories.

    nodes[b, i, t] is agent i's observation-tree node of its length-t history
    (nodes[:, :, 0] == 0); a target sequence of length L with tree node `n`
    is realized in trajectory b iff nodes[b, i, L] == n.
    """

    nodes: np.ndarray  # (B, Z, T) int64
    obs: np.ndarray  # (B, Z, T) int64, obs[:, :, 0] == NULL_OBS
    actions: np.ndarray  # (B, Z, T) int64
    rewards: np.ndarray  # (B, Z, T) float64
    states: np.ndarray  # (B, T) pre-transition states (diagnostics)
    components: np.ndarray | None = None  # (B, Z) mixture component per agent

    @property
    def batch(self) -> int:
        return self.nodes.shape[0]

    def post_rewards(self, agent: int, seq_len: int) -> np.ndarray:
        return self.rewards[:, agent, seq_len:].sum(axis=1)

    def realized(self, agent: int, seq_len: int, node: int) -> np.ndarray:
        return self.nodes[:, agent, seq_len] == node

    def trajectory(self, b: int, agent: int) -> Trajectory:
        return Trajectory(
            actions=self.actions[b, agent].tolist(),
            rewards=self.rewards[b, agent].tolist(),
            observations=self.obs[b, agent].tolist(),
        )


def _sample_rows(cum: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Categorical draw per row of a (B, K) cumulative-probability array."""
    u = rng.random(cum.shape[0])
    return (cum < u[:, None]).sum(axis=1)


@dataclass
class PrefixBatch:
    """First `depth` steps of a batch: enough to decide target realization
    and to branch exploring-starts continuations from the reach contexts."""

    nodes: np.ndarray  # (B, Z, depth+1) tree nodes, levels 0..depth
    obs: np.ndarray  # (B, Z, depth) observations received at steps 1..depth
    end_states: np.ndarray  # (B,) state entering step `depth`
    end_nodes: np.ndarray  # (B, Z) nodes at level `depth`
    components: np.ndarray  # (B, Z) mixture components

    @property
    def batch(self) -> int:
        return self.nodes.shape[0]

    def realized(self, agent: int, node: int) -> np.ndarray:
        return self.end_nodes[:, agent] == node

    def select(self, mask: np.ndarray) -> "PrefixBatch":
        return PrefixBatch(
            nodes=self.nodes[mask],
            obs=self.obs[mask],
            end_states=self.end_states[mask],
            end_nodes=self.end_nodes[mask],
            components=self.components[mask],
        )


class TabularDomain:
    """Two-agent domain backed by dense probability tables."""

    def __init__(
        self,
        name: str,
        init: np.ndarray,
        trans: np.ndarray,
        obs_kernels: list[np.ndarray],
        rewards: list[np.ndarray],
        alphabets: list[Alphabet],
        reward_min: list[float],
        reward_max: list[float],
        horizon: int,
        team: bool = False,
    ):
        self.name = name
        self.horizon = horizon
        self.n_agents = 2
        self.team = team
        self.enumerable = True
        self.init = np.asarray(init, dtype=float)
        self.trans = np.asarray(trans, dtype=float)
        self.obs_kernels = [np.asarray(o, dtype=float) for o in obs_kernels]
        self.rewards = [np.asarray(r, dtype=float) for r in rewards]
        self.alphabets = list(alphabets)
        self.reward_min = list(reward_min)
        self.reward_max = list(reward_max)
        self.n_states = self.trans.shape[0]
        self.n_actions = (self.trans.shape[1], self.trans.shape[2])
        self.spaces = tuple(SequenceSpace(a.size, horizon) for a in self.alphabets)
        self._validate()
        self._trans_cum = self.trans.cumsum(axis=-1)
        self._obs_cum = [o.cumsum(axis=-1) for o in self.obs_kernels]

    def _validate(self):
        if not np.allclose(self.init.sum(), 1.0, atol=1e-12):
            raise ValueError("initial distribution must sum to 1")
        if not np.allclose(self.trans.sum(axis=-1), 1.0, atol=1e-12):
            raise ValueError("transition kernel rows must sum to 1")
        for o in self.obs_kernels:
            if not np.allclose(o.sum(axis=-1), 1.0, atol=1e-12):
                raise ValueError("observation kernel rows must sum to 1")
        for i, r in enumerate(self.rewards):
            if not np.isfinite(r).all():
                raise ValueError("rewards must be finite")
            if r.min() < self.reward_min[i] - 1e-9 or r.max() > self.reward_max[i] + 1e-9:
                raise ValueError("reward table exceeds declared bounds")

    def _run_steps(
        self,
        banks,
        comp,
        state,
        start_nodes,
        t0: int,
        t1: int,
        rng,
        forced_actions=None,
    ):
        """Shared stepping core for full, prefix and suffix simulation.

        Runs steps t0..t1-1 from the given states/nodes.  forced_actions, when
        given, overrides each agent's action at the first step (exploring
        starts branch at the target sequence).  Observations beyond step t1-1
        of the horizon are not drawn.
        """
        batch = state.shape[0]
        span = t1 - t0
        T = self.horizon
        nodes = np.zeros((batch, 2, span + 1), dtype=np.int64)
        nodes[:, :, 0] = start_nodes
        obs = np.full((batch, 2, span), NULL_OBS, dtype=np.int64)
        actions = np.zeros((batch, 2, span), dtype=np.int64)
        rewards = np.zeros((batch, 2, span))
        states = np.zeros((batch, span), dtype=np.int64)

        for j, t in enumerate(range(t0, t1)):
            states[:, j] = state
            a = [banks[i].tables[comp[:, i], nodes[:, i, j]] for i in range(2)]
            if forced_actions is not None and j == 0:
                for i in range(2):
                    if forced_actions[i] is not None:
                        a[i] = np.full(batch, forced_actions[i], dtype=np.int64)
            for i in range(2):
                actions[:, i, j] = a[i]
                rewards[:, i, j] = self.rewards[i][state, a[0], a[1]]
            nxt = _sample_rows(self._trans_cum[state, a[0], a[1]], rng)
            if t + 1 < T:
                for i in range(2):
                    o = _sample_rows(self._obs_cum[i][nxt, a[0], a[1]], rng)
                    obs[:, i, j] = o
                    nodes[:, i, j + 1] = self.spaces[i].child_array(nodes[:, i, j], o, t)
            state = nxt
        return nodes, obs, actions, rewards, states, state

    def simulate_batch(
        self, banks: list[AgentPolicies], batch: int, rng: np.random.Generator
    ) -> BatchResult:
        T = self.horizon
        comp = np.stack([bank.draw_components(batch, rng) for bank in banks], axis=1)
        init_cum = np.broadcast_to(self.init.cumsum(), (batch, self.n_states))
        state = _sample_rows(init_cum, rng)
        start_nodes = np.zeros((batch, 2), dtype=np.int64)
        nodes, obs, actions, rewards, states, _ = self._run_steps(
            banks, comp, state, start_nodes, 0, T, rng
        )
        full_obs = np.full((batch, 2, T), NULL_OBS, dtype=np.int64)
        full_obs[:, :, 1:] = obs[:, :, : T - 1]
        return BatchResult(nodes[:, :, :T], full_obs, actions, rewards, states, comp)

    def simulate_prefix(
        self, banks: list[AgentPolicies], batch: int, depth: int, rng: np.random.Generator
    ) -> "PrefixBatch":
        """Simulate only the first `depth` steps (enough to test realization
        of a depth-length sequence and capture the branch contexts)."""
        comp = np.stack([bank.draw_components(batch, rng) for bank in banks], axis=1)
        init_cum = np.broadcast_to(self.init.cumsum(), (batch, self.n_states))
        state = _sample_rows(init_cum, rng)
        start_nodes = np.zeros((batch, 2), dtype=np.int64)
        if depth == 0:
            return PrefixBatch(
                nodes=start_nodes[:, :, None].copy(),
                obs=np.empty((batch, 2, 0), dtype=np.int64),
                end_states=state,
                end_nodes=start_nodes,
                components=comp,
            )
        nodes, obs, _actions, _rewards, _states, end_state = self._run_steps(
            banks, comp, state, start_nodes, 0, depth, rng
        )
        return PrefixBatch(
            nodes=nodes,
            obs=obs,
            end_states=end_state,
            end_nodes=nodes[:, :, depth],
            components=comp,
        )

    def simulate_suffix(
        self,
        banks: list[AgentPolicies],
        start_states: np.ndarray,
        start_nodes: np.ndarray,
        components: np.ndarray,
        start_level: int,
        forced_actions,
        rng: np.random.Generator,
    ):
        """Continue trajectories from step start_level to the horizon.

        forced_actions ([action | None] per agent) overrides the first-step
        action; later steps follow the banks' tables from the child nodes.
        Returns (post_sums (n, Z), obs (n, Z, T-1-start_level), nodes)."""
        T = self.horizon
        nodes, obs, _actions, rewards, _states, _ = self._run_steps(
            banks, components, start_states, start_nodes, start_level, T, rng,
            forced_actions=forced_actions,
        )
        n_received = max(T - 1 - start_level, 0)
        return rewards.sum(axis=2), obs[:, :, :n_received], nodes

    def simulate_one(
        self, banks: list[AgentPolicies], rng: np.random.Generator
    ) -> list[Trajectory]:
        batch = self.simulate_batch(banks, 1, rng)
        return [batch.trajectory(0, i) for i in range(2)]

    def to_dict(self) -> dict:
        """Structured-text audit form: alphabets and dense kernels."""
        return {
            "name": self.name,
            "horizon": self.horizon,
            "agents": self.n_agents,
            "team": self.team,
            "enumerable": self.enumerable,
            "states": self.n_states,
            "actions": list(self.n_actions),
            "alphabets": [
                {"public": a.n_public, "private": a.n_private} for a in self.alphabets
            ],
            "reward_min": self.reward_min,
            "reward_max": self.reward_max,
            "initial": self.init.tolist(),
            "transitions": self.trans.tolist(),
            "observations": [o.tolist() for o in self.obs_kernels],
            "rewards": [r.tolist() for r in self.rewards],
        }


def noisy_row(correct: int, n: int, accuracy: float) -> np.ndarray:
    """Distribution putting `accuracy` on the correct symbol and the rest
    uniformly on the others."""
    row = np.full(n, (1.0 - accuracy) / (n - 1) if n > 1 else 0.0)
    row[correct] = accuracy if n > 1 else 1.0
    return row


def per_action_reward_ranges(domain: TabularDomain, agent: int = 0) -> list[tuple[float, float]]:
    """For each opponent action a_j: (max, min) over states and own actions
    of the agent's reward table.  Feeds the per-action-sequence Lambda."""
    other = 1 - agent
    r = domain.rewards[agent]
    ranges = []
    for aj in range(domain.n_actions[other]):
        sl = r[:, :, aj] if agent == 0 else r[:, aj, :]
        ranges.append((float(sl.max()), float(sl.min())))
    return ranges
