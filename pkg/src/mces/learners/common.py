"""Shared learner plumbing: configuration, stage records, reward scaling.

All three hill-climbers share the exploring-starts sampling discipline:
pick a target, simulate batches under the transformed policy, keep only
trajectories realizing the target sequence (rejection sampling), and commit
matched sample blocks so the candidate/incumbent counts stay in lockstep
(the comparison threshold is finite only at equal counts).

Reward normalization (optional, on in the desk presets) maps per-step
rewards affinely onto [0, 1] before Q updates and bound computation, so
Lambda = 2T; epsilon is then expressed in normalized units and oracle-side
comparisons rescale by (R_max - R_min).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LearnerConfig:
    epsilon: float
    delta: float
    k_cap: int | None = None
    normalize_rewards: bool = True
    phi: float | None = None  # pruning budget; None disables pruning
    warmup: int | None = None  # default: k_1 / 2 realized-prefix counts
    prob_floor: float = 0.0
    greedy_prune: bool = False
    rejection_cap: int = 1_000_000
    scheduler: str = "uniform"  # or "round-robin"
    chunk_divisor: int = 12
    batch_cap: int = 32_768
    max_stages: int = 64
    max_trajectories: int = 200_000_000
    # opponent-modeling options
    delta_e: float = 0.0
    bin_mode: str = "dominant"  # or "all" (every encountered bin must certify)
    material_share: float = 0.1
    strict_bins: bool = False  # conjunctive transform reading
    # team options
    radical_form: str = "printed"

    def __post_init__(self):
        if self.scheduler not in ("uniform", "round-robin"):
            raise ValueError("scheduler must be 'uniform' or 'round-robin'")
        if self.bin_mode not in ("dominant", "all"):
            raise ValueError("bin_mode must be 'dominant' or 'all'")


@dataclass
class StageRecord:
    """One per accepted transform, plus a final record for the run outcome."""

    stage: int
    event: str  # transform | terminate | k-cap | stalled | budget
    node: int | None = None
    action: int | None = None
    actions: tuple | None = None  # joint form (team learner)
    nodes: tuple | None = None
    bin_key: int | None = None
    samples: int = 0
    trajectories: int = 0
    k_m: int = 0
    q_candidate: float = float("nan")
    q_incumbent: float = float("nan")


@dataclass
class RunResult:
    records: list[StageRecord]
    reason: str
    transforms: int
    total_trajectories: int
    total_samples: int
    cap_voided: bool = False
    extras: dict = field(default_factory=dict)


class RewardScaler:
    """Affine per-step reward map onto [0, 1] (identity when disabled)."""

    def __init__(self, r_min: float, r_max: float, enabled: bool):
        self.enabled = enabled
        self.r_min = r_min
        self.span = r_max - r_min

    def post(self, post_sums: np.ndarray, steps: int) -> np.ndarray:
        if not self.enabled:
            return post_sums
        return (post_sums - steps * self.r_min) / self.span

    @property
    def bounds(self) -> tuple[float, float]:
        return (0.0, 1.0) if self.enabled else (self.r_min, self.r_min + self.span)

    def to_raw_gap(self, normalized_gap: float) -> float:
        """Convert a normalized value gap (e.g. epsilon) back to raw units."""
        return normalized_gap * self.span if self.enabled else normalized_gap
