"""Multiagent MCES-P with the PAC instantiation.

The learner hill-climbs a reactive policy by exploring-starts sampling: a
target observation sequence is drawn, matched blocks of accepted
post-sequence rewards are collected for every action at that sequence
(candidates and incumbent advance in lockstep, which keeps the comparison
threshold finite), Q entries hold running averages, and a transform fires
when some candidate beats the incumbent by more than the stage threshold
epsilon(m, p, q, k_m).  Termination certifies that every unpruned candidate
sits within epsilon of its incumbent.

Sampling is rejection sampling, factored for efficiency: the trajectory
prefix up to the target sequence is distribution-identical for all action
variants, so one prefix batch is simulated per block and each action's
continuation branches from the accepted contexts (common-random-number
coupling across the variants; each action's samples remain i.i.d. across
blocks).  Sequence-frequency estimates for pruning are fed by the
unconditioned prefix draws.

All counts reset on transform; Q values reset with them (the learning rate
restarts, so stale averages would bias the fresh stage).
"""

from __future__ import annotations

import numpy as np

from mces.bounds import PacConfig, PacSchedule, lambda_mcesp
from mces.domains.base import AgentPolicies, OpponentExecutor, PrefixBatch
from mces.learners.common import LearnerConfig, RewardScaler, RunResult, StageRecord
from mces.policycore import ReactivePolicy, neighborhood_formula
from mces.pruning import RegretLedger


def concat_prefixes(parts: list[PrefixBatch]) -> PrefixBatch:
    return PrefixBatch(
        nodes=np.concatenate([p.nodes for p in parts]),
        obs=np.concatenate([p.obs for p in parts]),
        end_states=np.concatenate([p.end_states for p in parts]),
        end_nodes=np.concatenate([p.end_nodes for p in parts]),
        components=np.concatenate([p.components for p in parts]),
    )


class McespLearner:
    def __init__(
        self,
        domain,
        opponent: OpponentExecutor,
        config: LearnerConfig,
        rng: np.random.Generator,
        initial_policy: ReactivePolicy | None = None,
    ):
        self.domain = domain
        self.cfg = config
        self.rng = rng
        self.space = domain.spaces[0]
        self.n_actions = domain.n_actions[0]
        self.T = domain.horizon
        self.opp_bank = opponent.bank(domain.spaces[1], domain.alphabets[1])

        self.scaler = RewardScaler(
            domain.reward_min[0], domain.reward_max[0], config.normalize_rewards
        )
        lo, hi = self.scaler.bounds
        self.pac = PacConfig(
            epsilon=config.epsilon,
            delta=config.delta,
            horizon=self.T,
            neighborhood=neighborhood_formula(self.n_actions, self.space.n_obs, self.T),
            reward_min=lo,
            reward_max=hi,
        )
        self.schedule = PacSchedule(self.pac, lambda_mcesp(self.pac), k_cap=config.k_cap)

        if initial_policy is None:
            initial_policy = ReactivePolicy.random(self.space, self.n_actions, rng)
        self.policy = initial_policy.table.copy()
        self.initial_policy = initial_policy.table.copy()

        self.q = np.zeros((self.space.size, self.n_actions))
        self.counts = np.zeros((self.space.size, self.n_actions), dtype=np.int64)
        self._certified: set[int] = set()

        warmup = config.warmup
        if warmup is None:
            warmup = max(self.T, self.schedule.k_m // 2)
        self.ledger = RegretLedger(self.space, config.phi or 0.0, warmup, config.prob_floor)
        self.pruning_on = config.phi is not None

        self.records: list[StageRecord] = []
        self.transforms = 0
        self.total_trajectories = 0
        self.total_samples = 0
        self._stage_samples = 0
        self._stage_trajectories = 0
        self._rr_cursor = 0

    # -- sampling -------------------------------------------------------------

    def _subject_bank(self) -> AgentPolicies:
        return AgentPolicies.single(self.policy)

    def _collect_contexts(self, node: int, level: int, goal: int) -> PrefixBatch | None:
        """Accepted prefix contexts realizing the target sequence; None when
        the per-target rejection cap is exhausted."""
        banks = [self._subject_bank(), self.opp_bank]
        parts: list[PrefixBatch] = []
        have = 0
        rejected = 0
        p_hat = max(self.ledger.estimate_probability(node), 0.02)
        while have < goal:
            if rejected > self.cfg.rejection_cap:
                return None
            need = goal - have
            batch = int(np.clip(need / p_hat * 1.3 + 64, 256, self.cfg.batch_cap))
            pre = self.domain.simulate_prefix(banks, batch, level, self.rng)
            self.ledger.observe_nodes(pre.nodes[:, 0, :])
            self.total_trajectories += batch
            self._stage_trajectories += batch
            mask = pre.realized(0, node)
            hits = int(mask.sum())
            if hits:
                parts.append(pre.select(mask))
                have += hits
            rejected += batch - hits
            p_hat = max(self.ledger.estimate_probability(node), 1e-4)
        merged = concat_prefixes(parts)
        return merged.select(np.arange(merged.batch) < goal)

    def _branch_posts(self, contexts: PrefixBatch, level: int):
        """Post-sequence reward sums per action, branched from shared contexts."""
        banks = [self._subject_bank(), self.opp_bank]
        posts = {}
        n = contexts.batch
        for action in range(self.n_actions):
            sums, _obs, _nodes = self.domain.simulate_suffix(
                banks,
                contexts.end_states,
                contexts.end_nodes,
                contexts.components,
                level,
                (action, None),
                self.rng,
            )
            posts[action] = self.scaler.post(sums[:, 0], self.T - level)
            self.total_trajectories += n
            self._stage_trajectories += n
        return posts

    def _commit(self, node: int, posts: dict[int, np.ndarray]):
        n = min(p.size for p in posts.values())
        for action, post in posts.items():
            post = post[:n]
            c = self.counts[node, action]
            self.q[node, action] = (self.q[node, action] * c + post.sum()) / (c + n)
            self.counts[node, action] = c + n
        self._stage_samples += n * len(posts)
        self.total_samples += n * len(posts)
        return n

    def _sweep(self, node: int) -> str:
        inc = int(self.policy[node])
        have = int(self.counts[node, inc])
        room = self.schedule.k_m - have
        if room <= 0:
            return "saturated"
        # geometric ramp keeps the first probes of a sequence cheap; rare
        # targets get pruned before a full-size block is ever attempted
        chunk = max(1, min(room, max(64, 3 * have)))
        level = self.space.level_of(node)
        contexts = self._collect_contexts(node, level, chunk)
        if contexts is None or contexts.batch == 0:
            return "deferred"
        posts = self._branch_posts(contexts, level)
        self._commit(node, posts)
        return "committed"

    # -- decisions ------------------------------------------------------------

    def _transform_trigger(self, node: int):
        """(action, diff, eps) for the best triggering candidate, or None."""
        inc = int(self.policy[node])
        p_inc = int(self.counts[node, inc])
        best = None
        for action in range(self.n_actions):
            if action == inc:
                continue
            eps = self.schedule.epsilon_fn(int(self.counts[node, action]), p_inc)
            diff = self.q[node, action] - self.q[node, inc]
            if diff > eps:
                if best is None or self.q[node, action] > self.q[node, best[0]]:
                    best = (action, diff, eps)
        return best

    def _pair_certified(self, node: int, action: int) -> bool:
        inc = int(self.policy[node])
        p = int(self.counts[node, action])
        q_cnt = int(self.counts[node, inc])
        if p < 1 or p != q_cnt:
            return False
        diff = self.q[node, action] - self.q[node, inc]
        if p >= self.schedule.k_m:
            return diff <= self.pac.epsilon / 2.0
        return diff < self.pac.epsilon - self.schedule.epsilon_fn(p, q_cnt)

    def _node_certified(self, node: int) -> bool:
        """Sticky early-termination certificate for all candidates at a node."""
        if node in self._certified:
            return True
        inc = int(self.policy[node])
        ok = all(
            self._pair_certified(node, a) for a in range(self.n_actions) if a != inc
        )
        if ok:
            self._certified.add(node)
        return ok

    def _all_certified(self) -> bool:
        return all(
            self._node_certified(node)
            for node in range(self.space.size)
            if self.ledger.passes(node)
        )

    def _apply_transform(self, node: int, action: int, diff: float, eps: float):
        inc = int(self.policy[node])
        self.records.append(
            StageRecord(
                stage=self.schedule.stage,
                event="transform",
                node=node,
                action=action,
                samples=self._stage_samples,
                trajectories=self._stage_trajectories,
                k_m=self.schedule.k_m,
                q_candidate=float(self.q[node, action]),
                q_incumbent=float(self.q[node, inc]),
            )
        )
        self.policy[node] = action
        self.transforms += 1
        self.schedule.advance()
        self.q[:] = 0.0
        self.counts[:] = 0
        self._certified.clear()
        self._stage_samples = 0
        self._stage_trajectories = 0

    # -- scheduling -----------------------------------------------------------

    def _eligible(self):
        out = []
        for node in range(self.space.size):
            if not self.ledger.passes(node) or node in self._certified:
                continue
            if self.counts[node, int(self.policy[node])] < self.schedule.k_m:
                out.append(node)
        return out

    def _pick(self, eligible):
        if self.cfg.scheduler == "round-robin":
            self._rr_cursor += 1
            return eligible[self._rr_cursor % len(eligible)]
        return eligible[self.rng.integers(len(eligible))]

    # -- main loop ------------------------------------------------------------

    def run(self) -> RunResult:
        deferrals = 0
        while True:
            if self.transforms >= self.cfg.max_stages:
                return self._finish("stalled")
            if self.total_trajectories >= self.cfg.max_trajectories:
                return self._finish("budget")
            eligible = self._eligible()
            if not eligible:
                return self._finish("k-cap" if self.schedule.cap_binding else "terminate")
            node = self._pick(eligible)
            if self.pruning_on:
                # admission test runs before sampling the pick: a prunable
                # (rare) target is dropped without paying its rejection cost
                if self.cfg.greedy_prune:
                    self.ledger.prune_greedy()
                else:
                    self.ledger.maybe_prune(node)
                if not self.ledger.passes(node):
                    continue
            status = self._sweep(node)
            if status == "deferred":
                deferrals += 1
                if deferrals > 4 * max(len(eligible), 1):
                    return self._finish("stalled")
                continue
            deferrals = 0
            if status == "committed":
                trig = self._transform_trigger(node)
                if trig is not None:
                    self._apply_transform(node, *trig)
                    continue
                self._node_certified(node)
            if self._all_certified():
                return self._finish("k-cap" if self.schedule.cap_binding else "terminate")

    def _finish(self, reason: str) -> RunResult:
        self.records.append(
            StageRecord(
                stage=self.schedule.stage,
                event=reason,
                samples=self._stage_samples,
                trajectories=self._stage_trajectories,
                k_m=self.schedule.k_m,
            )
        )
        return RunResult(
            records=self.records,
            reason=reason,
            transforms=self.transforms,
            total_trajectories=self.total_trajectories,
            total_samples=self.total_samples,
            cap_voided=self.schedule.cap_binding,
            extras={"pruned": self.ledger.snapshot() if self.pruning_on else None},
        )

    def current_policy(self) -> ReactivePolicy:
        return ReactivePolicy(self.space, self.policy.copy(), self.n_actions)
