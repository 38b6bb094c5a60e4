"""Regret-bounded pruning of rare observation sequences.

The ledger tracks empirical sequence frequencies online (every simulated
trajectory contributes its realized prefix of each length), and admits a
sequence into the pruned set only once a warmup total is reached and the
cumulative normalized regret, including the candidate, stays within the
budget phi.  Regret for a sequence is

    Pr(seq) * (T - len(seq)) * (R_max - R_min)

normalized by T * (R_max - R_min).  Contributions are frozen at prune time
(the add-time estimates), so the budget invariant is stable as estimates
drift; the pruned set never shrinks within a stage.

Two admission orders are provided: the random-candidate form (prune the
just-sampled sequence when it fits, matching the pseudocode) and a greedy
ascending-regret fill.
"""

from __future__ import annotations

import numpy as np

from mces.policycore import SequenceSpace


class RegretLedger:
    def __init__(
        self,
        space: SequenceSpace,
        phi: float,
        warmup: int,
        prob_floor: float = 0.0,
    ):
        if phi < 0:
            raise ValueError("phi must be >= 0")
        self.space = space
        self.phi = phi
        self.warmup = warmup
        self.prob_floor = prob_floor
        self.seq_counts = np.zeros(space.size, dtype=np.int64)
        self.level_totals = np.zeros(space.horizon, dtype=np.int64)
        self.pruned_mask = np.zeros(space.size, dtype=bool)
        self.contributions: dict[int, float] = {}

    # -- frequency estimation ------------------------------------------------

    def observe_nodes(self, nodes: np.ndarray):
        """Record realized prefixes from a (batch, depth) node-id array.

        Partial-depth traces are fine: per-level denominators are tracked, so
        a trace covering levels 0..d contributes frequency mass only there.
        """
        depth = nodes.shape[-1]
        flat = nodes.reshape(-1)
        self.seq_counts += np.bincount(flat, minlength=self.space.size)
        self.level_totals[:depth] += nodes.shape[0]

    @property
    def total_trajectories(self) -> int:
        return int(self.level_totals[0])

    def estimate_probability(self, node: int) -> float:
        total = self.level_totals[self.space.level_of(node)]
        if total == 0:
            return 0.0
        return float(self.seq_counts[node]) / total

    # -- regret --------------------------------------------------------------

    def normalized_regret(self, node: int) -> float:
        prob = max(self.estimate_probability(node), self.prob_floor)
        seq_len = self.space.level_of(node)
        return prob * (self.space.horizon - seq_len) / self.space.horizon

    @property
    def warmup_met(self) -> bool:
        return int(self.seq_counts.sum()) >= self.warmup

    @property
    def cumulative_regret(self) -> float:
        return float(sum(self.contributions.values()))

    # -- mutation ------------------------------------------------------------

    def maybe_prune(self, node: int) -> bool:
        """Random-candidate admission of the just-sampled sequence."""
        if self.pruned_mask[node] or not self.warmup_met:
            return False
        contribution = self.normalized_regret(node)
        if self.cumulative_regret + contribution > self.phi:
            return False
        self.pruned_mask[node] = True
        self.contributions[node] = contribution
        assert self.cumulative_regret <= self.phi + 1e-12
        return True

    def prune_greedy(self) -> int:
        """Sort unpruned sequences by ascending regret and fill to the budget."""
        if not self.warmup_met:
            return 0
        added = 0
        order = sorted(
            (n for n in range(self.space.size) if not self.pruned_mask[n]),
            key=self.normalized_regret,
        )
        for node in order:
            if not self.maybe_prune(node):
                break
            added += 1
        return added

    # -- queries -------------------------------------------------------------

    def passes(self, node: int) -> bool:
        """Scheduler filter: False for pruned targets (the learner re-draws)."""
        return not bool(self.pruned_mask[node])

    def pruned_nodes(self) -> list[int]:
        return sorted(self.contributions)

    def snapshot(self) -> dict:
        """Serializable pruned-set snapshot (sequence ids + regret shares)."""
        return {
            "phi": self.phi,
            "warmup": self.warmup,
            "total_trajectories": self.total_trajectories,
            "cumulative_regret": self.cumulative_regret,
            "pruned": [
                {
                    "id": int(n),
                    "sequence": list(self.space.sequence(n)),
                    "regret_share": self.contributions[n],
                }
                for n in self.pruned_nodes()
            ],
        }


def regret_bound(
    prob: float, seq_len: int, horizon: int, r_min: float, r_max: float
) -> tuple[float, float]:
    """(raw, normalized) regret bound for removing one sequence."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError("prob must lie in [0, 1]")
    if seq_len >= horizon:
        raise ValueError("sequence length must be < horizon")
    raw = prob * (horizon - seq_len) * (r_max - r_min)
    denom = horizon * (r_max - r_min)
    return raw, (raw / denom if denom > 0 else 0.0)
