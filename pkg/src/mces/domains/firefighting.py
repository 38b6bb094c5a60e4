"""Cooperative firefighting: Z agents move among n_h houses in a row, each
burning with intensity 0 <= f < n_f.

Per-round dynamics for a house, given the agent counts after everyone moves
and the *pre-transition* neighbor intensities:

  - two or more agents present: flames extinguished (intensity 0)
  - one agent: intensity drops by 1, guaranteed, unless a neighbor burns,
    in which case it drops with probability 0.6 and otherwise holds
  - no agents, burning neighbor: intensity rises by 1 with probability 0.8
  - no agents, no burning neighbor: an already-burning house rises with
    probability 0.4; an unlit house cannot catch fire

Each agent then observes flames/no-flames at its own house with
P(flames) = 0.2, 0.5, 0.8 for intensity 0, 1, >=2.  The shared team reward
is the negated sum of post-transition intensities.  State space size is
n_f^n_h intensity vectors (agent positions are the last joint action); the
domain is generative-only (no exact enumeration).
"""

from __future__ import annotations

import numpy as np

from mces.domains.base import AgentPolicies, BatchResult
from mces.policycore import Alphabet, SequenceSpace, NULL_OBS

P_FLAMES = np.array([0.2, 0.5, 0.8])  # by min(intensity, 2)
P_GROW_NEIGHBOR = 0.8
P_GROW_ALONE = 0.4
P_DOUSE_BLOCKED = 0.6


class FireFightingDomain:
    """Generative Z-agent firefighting with binary flame observations."""

    def __init__(self, n_agents: int = 3, n_houses: int = 4, n_intensity: int = 3, horizon: int = 3):
        if n_agents < 2 or n_houses < 2 or n_intensity < 2:
            raise ValueError("need at least two agents, houses and intensity levels")
        self.name = f"firefighting-z{n_agents}"
        self.n_agents = n_agents
        self.n_houses = n_houses
        self.n_intensity = n_intensity
        self.horizon = horizon
        self.team = True
        self.enumerable = False
        self.n_actions = tuple([n_houses] * n_agents)
        self.alphabets = [Alphabet(n_public=2) for _ in range(n_agents)]
        self.spaces = tuple(SequenceSpace(2, horizon) for _ in range(n_agents))
        self.reward_min = [-float(n_houses * (n_intensity - 1))] * n_agents
        self.reward_max = [0.0] * n_agents
        self.n_states = n_intensity**n_houses

    def _step_intensity(self, intensity: np.ndarray, counts: np.ndarray, rng) -> np.ndarray:
        """Vectorized house update; intensity and counts are (B, n_h)."""
        burn = intensity >= 1
        neighbor = np.zeros_like(burn)
        neighbor[:, 1:] |= burn[:, :-1]
        neighbor[:, :-1] |= burn[:, 1:]
        u = rng.random(intensity.shape)
        out = intensity.copy()

        none_here = counts == 0
        grow_p = np.where(neighbor, P_GROW_NEIGHBOR, np.where(burn, P_GROW_ALONE, 0.0))
        grows = none_here & (u < grow_p)
        out[grows] = np.minimum(intensity[grows] + 1, self.n_intensity - 1)

        one_here = counts == 1
        douse_p = np.where(neighbor, P_DOUSE_BLOCKED, 1.0)
        douses = one_here & (u < douse_p)
        out[douses] = np.maximum(intensity[douses] - 1, 0)

        out[counts >= 2] = 0
        return out

    def simulate_batch(self, banks: list[AgentPolicies], batch: int, rng) -> BatchResult:
        T, Z, H = self.horizon, self.n_agents, self.n_houses
        comp = [bank.draw_components(batch, rng) for bank in banks]
        intensity = rng.integers(0, self.n_intensity, size=(batch, H))

        nodes = np.zeros((batch, Z, T), dtype=np.int64)
        obs = np.full((batch, Z, T), NULL_OBS, dtype=np.int64)
        actions = np.zeros((batch, Z, T), dtype=np.int64)
        rewards = np.zeros((batch, Z, T))
        states = np.zeros((batch, T), dtype=np.int64)
        local = [np.zeros(batch, dtype=np.int64) for _ in range(Z)]
        powers = self.n_intensity ** np.arange(H)

        for t in range(T):
            states[:, t] = intensity @ powers
            acts = [banks[i].tables[comp[i], nodes[:, i, t]] for i in range(Z)]
            counts = np.zeros((batch, H), dtype=np.int64)
            for i in range(Z):
                actions[:, i, t] = acts[i]
                np.add.at(counts, (np.arange(batch), acts[i]), 1)
            intensity = self._step_intensity(intensity, counts, rng)
            team_r = -intensity.sum(axis=1).astype(float)
            for i in range(Z):
                rewards[:, i, t] = team_r
            if t + 1 < T:
                for i in range(Z):
                    f_here = intensity[np.arange(batch), acts[i]]
                    p = P_FLAMES[np.minimum(f_here, 2)]
                    o = (rng.random(batch) < p).astype(np.int64)
                    obs[:, i, t + 1] = o
                    local[i] = local[i] * 2 + o
                    nodes[:, i, t + 1] = self.spaces[i].level_offsets[t + 1] + local[i]

        return BatchResult(nodes, obs, actions, rewards, states)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "horizon": self.horizon,
            "agents": self.n_agents,
            "team": True,
            "enumerable": False,
            "houses": self.n_houses,
            "intensity_levels": self.n_intensity,
            "states": self.n_states,
            "actions": list(self.n_actions),
            "alphabets": [{"public": 2, "private": None} for _ in range(self.n_agents)],
            "reward_min": self.reward_min,
            "reward_max": self.reward_max,
            "observation_probabilities": {"flames_by_intensity": P_FLAMES.tolist()},
        }
