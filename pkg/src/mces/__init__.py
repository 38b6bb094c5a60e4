"""Model-free Monte Carlo exploring-starts policy search for partially
observable multiagent problems: MCES-P, MCES-MP and MCES-IP with PAC
instantiations, regret-bounded observation-sequence pruning, benchmark
domain simulators, and a brute-force evaluation oracle."""

from mces.policycore import (
    Alphabet,
    NeighborRef,
    ObsSymbol,
    ReactivePolicy,
    SequenceSpace,
    Trajectory,
    enumerate_neighbors,
    neighborhood_formula,
    post_sequence_reward,
    transform_policy,
)

__all__ = [
    "Alphabet",
    "NeighborRef",
    "ObsSymbol",
    "ReactivePolicy",
    "SequenceSpace",
    "Trajectory",
    "enumerate_neighbors",
    "neighborhood_formula",
    "post_sequence_reward",
    "transform_policy",
]
