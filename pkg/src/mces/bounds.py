"""Closed-form PAC quantities for the exploring-starts learners.

Per-stage error budgets delta_m, range bounds Lambda, sample bounds k_m and
the three-branch comparison thresholds epsilon(m, p, q, k_m) for the
single-agent, team and opponent-modeling variants, including the imperfect
monitoring blend.  All functions are pure; learners cache the per-stage
values in a PacSchedule.

The +infinity branch of every epsilon function is represented by a finite
sentinel exceeding any attainable |Q| difference (twice the relevant Lambda),
which keeps comparisons total and the values serializable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from mces.policycore import sequence_count


@dataclass(frozen=True)
class PacConfig:
    """User-level PAC parameters plus the domain constants the bounds need."""

    epsilon: float
    delta: float
    horizon: int
    neighborhood: int
    reward_min: float
    reward_max: float
    agent_count: int = 1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.reward_max < self.reward_min:
            raise ValueError("reward_max must be >= reward_min")
        if self.horizon < 1 or self.neighborhood < 1 or self.agent_count < 1:
            raise ValueError("horizon, neighborhood and agent_count must be >= 1")


@dataclass(frozen=True)
class LambdaBound:
    """Upper bound on the range of per-trajectory value differences."""

    value: float
    kind: str = "policy-pair"  # policy-pair | per-action-sequence | complement

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("Lambda must be >= 0")


EpsilonFn = Callable[[int, int], float]


def delta_m(delta: float, stage: int) -> float:
    """Stage error budget 6*delta / (pi^2 * m^2); the series sums to delta."""
    if stage < 1:
        raise ValueError("stage must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return 6.0 * delta / (math.pi**2 * stage**2)


def infinity_sentinel(lam: float) -> float:
    """Finite stand-in for the +infinity branch: beats any |Q| difference."""
    return 2.0 * lam if lam > 0 else 1.0


def lambda_mcesp(cfg: PacConfig) -> LambdaBound:
    """Global pair bound 2*T*(R_max - R_min)."""
    return LambdaBound(2.0 * cfg.horizon * (cfg.reward_max - cfg.reward_min), "policy-pair")


def k_m_mcesp(lam: LambdaBound, cfg: PacConfig, dm: float) -> int:
    """ceil(2 (Lambda/eps)^2 ln(2N/delta_m)); one sample when Lambda is 0."""
    if lam.value == 0:
        return 1
    return math.ceil(2.0 * (lam.value / cfg.epsilon) ** 2 * math.log(2.0 * cfg.neighborhood / dm))


def epsilon_mcesp(lam_pair: float, cfg: PacConfig, dm: float, k_m: int) -> EpsilonFn:
    """Three-branch comparison threshold for the single-agent learner.

    radical at p = q < k_m, eps/2 exactly at p = q = k_m, sentinel otherwise
    (matched counts are required for a finite value).
    """
    sentinel = infinity_sentinel(lam_pair)
    log_term = math.log(max(2.0 * (k_m - 1) * cfg.neighborhood / dm, 1.0)) if k_m > 1 else 0.0

    def eps(p: int, q: int) -> float:
        if p != q or p < 0:
            return sentinel
        if p == k_m:
            return cfg.epsilon / 2.0
        if p < k_m:
            if p == 0:
                return sentinel
            return lam_pair * math.sqrt(log_term / (2.0 * p))
        return sentinel

    return eps


def joint_neighborhood_bound(action_count: int, obs_count: int, agent_count: int) -> int:
    """Printed joint bound |A|^Z * ((|O|^Z - 1)/(|O| - 1) - 1).

    Exposed for fidelity only; learners use constructive joint-target
    enumeration, which disagrees with this expression.
    """
    return action_count**agent_count * (sequence_count(obs_count, agent_count) - 1)


def mcesmp_bounds(
    cfg: PacConfig,
    lam: LambdaBound,
    dm: float,
    radical_form: str = "printed",
) -> tuple[int, EpsilonFn]:
    """Sample bound and threshold for the team learner (2Z-th root interior).

    radical_form selects the exponent on the 1/(2p) factor: "printed" keeps
    the square-rooted 1/sqrt(2p) as displayed in the main derivation,
    "proof" uses the plain 1/(2p) that the two-agent error analysis carries.
    Z < 2 falls back to the single-agent bounds.
    """
    if cfg.agent_count < 2:
        k = k_m_mcesp(lam, cfg, dm)
        return k, epsilon_mcesp(lam.value, cfg, dm, k)
    if radical_form not in ("printed", "proof"):
        raise ValueError("radical_form must be 'printed' or 'proof'")

    z2 = 2.0 * cfg.agent_count
    root = lambda x: x ** (1.0 / z2)  # noqa: E731
    if lam.value == 0:
        k_m = 1
    else:
        interior = root(4.0 * cfg.agent_count - 2.0) * cfg.neighborhood / root(dm)
        k_m = math.ceil(2.0 * (lam.value / cfg.epsilon) ** 2 * math.log(interior))

    sentinel = infinity_sentinel(lam.value)
    if k_m > 1:
        eps_interior = root((4.0 * cfg.agent_count - 2.0) * (k_m - 1)) * cfg.neighborhood / root(dm)
        log_term = math.log(max(eps_interior, 1.0))
    else:
        log_term = 0.0

    def eps(p: int, q: int) -> float:
        if p != q or p <= 0:
            return sentinel
        if p == k_m:
            return cfg.epsilon / 2.0
        if p < k_m:
            if radical_form == "printed":
                return lam.value * math.sqrt(log_term / math.sqrt(2.0 * p))
            return lam.value * math.sqrt(log_term / (2.0 * p))
        return sentinel

    return k_m, eps


def lambda_aj(per_step_ranges: list[tuple[float, float]]) -> LambdaBound:
    """Sum over steps of 2*(R_max^{a_j^t} - R_min^{a_j^t})."""
    total = 0.0
    for rmax, rmin in per_step_ranges:
        if rmax < rmin:
            raise ValueError("per-step range has max < min")
        total += 2.0 * (rmax - rmin)
    return LambdaBound(total, "per-action-sequence")


def mcesip_bounds(lam_aj: LambdaBound, cfg: PacConfig, dm: float) -> tuple[int, EpsilonFn]:
    """MCES-P bounds with Lambda replaced by the per-action-sequence bound.

    The eps/2 branch applies at p = q >= k_m (as printed for this variant).
    """
    if lam_aj.value == 0:
        k_m = 1
    else:
        k_m = math.ceil(
            2.0 * (lam_aj.value / cfg.epsilon) ** 2 * math.log(2.0 * cfg.neighborhood / dm)
        )
    sentinel = infinity_sentinel(lam_aj.value)
    log_term = math.log(max(2.0 * (k_m - 1) * cfg.neighborhood / dm, 1.0)) if k_m > 1 else 0.0

    def eps(p: int, q: int) -> float:
        if p != q or p <= 0:
            return sentinel
        if p >= k_m:
            return cfg.epsilon / 2.0
        return lam_aj.value * math.sqrt(log_term / (2.0 * p))

    return k_m, eps


def blended_lambda(lam_aj: LambdaBound, lam_bar: LambdaBound, delta_e: float) -> LambdaBound:
    """sqrt((1-de) Lambda^2 + de Lambda-bar^2) for imperfect monitoring."""
    if not 0.0 <= delta_e <= 1.0:
        raise ValueError("delta_e must lie in [0, 1]")
    value = math.sqrt((1.0 - delta_e) * lam_aj.value**2 + delta_e * lam_bar.value**2)
    return LambdaBound(value, "per-action-sequence")


def imperfect_monitoring_bounds(
    lam_aj: LambdaBound,
    lam_bar: LambdaBound,
    delta_e: float,
    cfg: PacConfig,
    dm: float,
) -> tuple[int, EpsilonFn, Callable[[float, float, float, float], bool]]:
    """Bounds with the effective blended Lambda, plus the blended line-11 test.

    transform_test(zeta, zeta_bar, eps, eps_bar) evaluates
    (1-de) zeta + de zeta_bar > (1-de) eps + de eps_bar.  delta_e = 0 recovers
    the perfect-monitoring bounds exactly.
    """
    lam_eff = blended_lambda(lam_aj, lam_bar, delta_e)
    k_m, eps = mcesip_bounds(lam_eff, cfg, dm)

    def transform_test(zeta: float, zeta_bar: float, eps_val: float, eps_bar: float) -> bool:
        return (1.0 - delta_e) * zeta + delta_e * zeta_bar > (
            1.0 - delta_e
        ) * eps_val + delta_e * eps_bar

    return k_m, eps, transform_test


@dataclass
class PacSchedule:
    """Stage-indexed bundle of delta_m, k_m and the comparison threshold.

    Stages count accepted transformations starting at 1.  k_cap, when set,
    is a hard ceiling on k_m (it also moves the eps/2 branch), which voids
    the PAC certificate; callers must surface that.
    """

    cfg: PacConfig
    lam: LambdaBound
    stage: int = 1
    k_cap: int | None = None
    variant: str = "mcesp"  # mcesp | mcesmp
    radical_form: str = "printed"

    def __post_init__(self):
        self._rebuild()

    def _rebuild(self):
        self.delta_m = delta_m(self.cfg.delta, self.stage)
        if self.variant == "mcesmp":
            k, _ = mcesmp_bounds(self.cfg, self.lam, self.delta_m, self.radical_form)
        else:
            k = k_m_mcesp(self.lam, self.cfg, self.delta_m)
        self.k_m_raw = k
        self.k_m = min(k, self.k_cap) if self.k_cap is not None else k
        if self.variant == "mcesmp":
            _, self.epsilon_fn = mcesmp_bounds(
                PacConfig(
                    epsilon=self.cfg.epsilon,
                    delta=self.cfg.delta,
                    horizon=self.cfg.horizon,
                    neighborhood=self.cfg.neighborhood,
                    reward_min=self.cfg.reward_min,
                    reward_max=self.cfg.reward_max,
                    agent_count=self.cfg.agent_count,
                ),
                self.lam,
                self.delta_m,
                self.radical_form,
            )
            if self.k_m != self.k_m_raw:
                self.epsilon_fn = _recapped(self.epsilon_fn, self.cfg, self.lam, self.delta_m,
                                            self.k_m, self.variant, self.radical_form)
        else:
            self.epsilon_fn = epsilon_mcesp(self.lam.value, self.cfg, self.delta_m, self.k_m)

    @property
    def cap_binding(self) -> bool:
        return self.k_cap is not None and self.k_m_raw > self.k_cap

    def advance(self):
        self.stage += 1
        self._rebuild()


def _recapped(eps_fn, cfg, lam, dm, k_eff, variant, radical_form):
    """Rebuild an mcesmp threshold whose branch point sits at the capped k."""
    z2 = 2.0 * cfg.agent_count
    root = lambda x: x ** (1.0 / z2)  # noqa: E731
    sentinel = infinity_sentinel(lam.value)
    if k_eff > 1:
        interior = root((4.0 * cfg.agent_count - 2.0) * (k_eff - 1)) * cfg.neighborhood / root(dm)
        log_term = math.log(max(interior, 1.0))
    else:
        log_term = 0.0

    def eps(p: int, q: int) -> float:
        if p != q or p <= 0:
            return sentinel
        if p == k_eff:
            return cfg.epsilon / 2.0
        if p < k_eff:
            if radical_form == "printed":
                return lam.value * math.sqrt(log_term / math.sqrt(2.0 * p))
            return lam.value * math.sqrt(log_term / (2.0 * p))
        return sentinel

    return eps
