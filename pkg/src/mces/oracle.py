"""Brute-force exact evaluation for enumerable two-agent domains.

Everything here enumerates the finite outcome tree: states x both agents'
observation-sequence nodes, weighted by the dense kernels.  One forward pass
(reach probabilities) plus one lazily-memoized backward pass (values-to-go)
yields the policy value, every single-edit neighbor's exact value, and the
exact conditional post-sequence action values, all in a single sweep; this
is what the probabilistic guarantees are verified against.

Evaluation order is fixed (sorted dict iteration over integer keys), so
repeated calls accumulate floating point identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mces.domains.base import AgentPolicies, OpponentExecutor, TabularDomain, lift_policy_table
from mces.policycore import ReactivePolicy


class EnumerationRefused(RuntimeError):
    """Outcome tree too large for exact enumeration; fall back to Monte Carlo."""


@dataclass
class ExactValue:
    value: float
    per_agent: list[float] = field(default_factory=list)


def _check_enumerable(domain, node_cap: int = 10**8):
    if not getattr(domain, "enumerable", False):
        raise EnumerationRefused(f"domain {domain.name} is generative-only")
    est = domain.n_states * domain.spaces[0].size * domain.spaces[1].size
    if est > node_cap:
        raise EnumerationRefused(f"estimated {est} enumeration nodes exceeds cap {node_cap}")


class _Evaluator:
    """Exact evaluation of one deterministic policy pair on a tabular domain."""

    def __init__(self, domain: TabularDomain, table0: np.ndarray, table1: np.ndarray):
        self.d = domain
        self.tables = (np.asarray(table0), np.asarray(table1))
        self.T = domain.horizon
        self._beta: dict[tuple[int, int, int], np.ndarray] = {}
        self._alpha: list[dict[tuple[int, int, int], float]] | None = None

    def _children(self, s, a0, a1):
        """Nonzero (prob, s', o0, o1) outcomes of one step."""
        d = self.d
        out = []
        ts = d.trans[s, a0, a1]
        for s2 in np.nonzero(ts)[0]:
            p1 = ts[s2]
            k0 = d.obs_kernels[0][s2, a0, a1]
            k1 = d.obs_kernels[1][s2, a0, a1]
            for o0 in np.nonzero(k0)[0]:
                for o1 in np.nonzero(k1)[0]:
                    out.append((p1 * k0[o0] * k1[o1], int(s2), int(o0), int(o1)))
        return out

    def beta(self, s: int, n0: int, n1: int) -> np.ndarray:
        """Expected per-agent value-to-go from (state, node0, node1)."""
        key = (s, n0, n1)
        cached = self._beta.get(key)
        if cached is not None:
            return cached
        d = self.d
        t = d.spaces[0].level_of(n0)
        a0 = int(self.tables[0][n0])
        a1 = int(self.tables[1][n1])
        val = np.array([d.rewards[0][s, a0, a1], d.rewards[1][s, a0, a1]])
        if t + 1 < self.T:
            for p, s2, o0, o1 in self._children(s, a0, a1):
                val = val + p * self.beta(
                    s2, d.spaces[0].child(n0, o0), d.spaces[1].child(n1, o1)
                )
        self._beta[key] = val
        return val

    def alpha(self) -> list[dict[tuple[int, int, int], float]]:
        """Reach probabilities per level under the given policy pair."""
        if self._alpha is not None:
            return self._alpha
        d = self.d
        levels = [{}]
        for s in np.nonzero(d.init)[0]:
            levels[0][(int(s), 0, 0)] = float(d.init[s])
        for t in range(self.T - 1):
            nxt: dict[tuple[int, int, int], float] = {}
            for (s, n0, n1), prob in sorted(levels[t].items()):
                a0 = int(self.tables[0][n0])
                a1 = int(self.tables[1][n1])
                for p, s2, o0, o1 in self._children(s, a0, a1):
                    key = (s2, d.spaces[0].child(n0, o0), d.spaces[1].child(n1, o1))
                    nxt[key] = nxt.get(key, 0.0) + prob * p
            levels.append(nxt)
        self._alpha = levels
        return levels

    def value(self) -> np.ndarray:
        total = np.zeros(2)
        for (s, n0, n1), prob in sorted(self.alpha()[0].items()):
            total = total + prob * self.beta(s, n0, n1)
        return total

    def q_post(self) -> tuple[dict, dict]:
        """Unnormalized exact post-values q[(node0, action)] (joint-probability
        weighted) and node reach probabilities pr[node0], for agent 0.

        V(pi <- (seq, a)) - V(pi) = q[(n, a)] - q[(n, pi(n))] exactly.
        """
        d = self.d
        q: dict[tuple[int, int], float] = {}
        pr: dict[int, float] = {}
        for t, level in enumerate(self.alpha()):
            for (s, n0, n1), prob in sorted(level.items()):
                pr[n0] = pr.get(n0, 0.0) + prob
                a1 = int(self.tables[1][n1])
                for a0 in range(d.n_actions[0]):
                    val = d.rewards[0][s, a0, a1]
                    if t + 1 < self.T:
                        for p, s2, o0, o1 in self._children(s, a0, a1):
                            val += p * self.beta(
                                s2, d.spaces[0].child(n0, o0), d.spaces[1].child(n1, o1)
                            )[0]
                    key = (n0, a0)
                    q[key] = q.get(key, 0.0) + prob * val
        return q, pr


def _opponent_tables(domain: TabularDomain, opponent: OpponentExecutor):
    tables = [
        lift_policy_table(p, domain.spaces[1], domain.alphabets[1]) for p in opponent.policies
    ]
    if opponent.mixture_weights is not None:
        weights = list(opponent.mixture_weights)
    else:
        weights = [1.0 / len(tables)] * len(tables)
    return tables, weights


def exact_policy_value(
    domain: TabularDomain, policy: ReactivePolicy, opponent: OpponentExecutor, node_cap: int = 10**8
) -> ExactValue:
    """True expected cumulative reward to the horizon, exact enumeration.

    Mixture opponents contribute the weighted average of component values.
    """
    _check_enumerable(domain, node_cap)
    tables, weights = _opponent_tables(domain, opponent)
    total = np.zeros(2)
    for table1, w in zip(tables, weights):
        total = total + w * _Evaluator(domain, policy.table, table1).value()
    return ExactValue(float(total[0]), total.tolist())


def exact_joint_value(domain: TabularDomain, policies: list[ReactivePolicy], node_cap: int = 10**8) -> ExactValue:
    """Exact per-agent values for a fixed two-agent joint policy."""
    _check_enumerable(domain, node_cap)
    table1 = lift_policy_table(policies[1], domain.spaces[1], domain.alphabets[1])
    vals = _Evaluator(domain, policies[0].table, table1).value()
    return ExactValue(float(vals[0]), vals.tolist())


def neighbor_values(
    domain: TabularDomain, policy: ReactivePolicy, opponent: OpponentExecutor, node_cap: int = 10**8
) -> dict[tuple[int, int], float]:
    """Exact value of every single-edit neighbor pi <- (node, action).

    Returned for all (node, action) including the current entries (those
    equal the policy's own value); computed in one enumeration sweep.
    """
    _check_enumerable(domain, node_cap)
    tables, weights = _opponent_tables(domain, opponent)
    out: dict[tuple[int, int], float] = {}
    base = 0.0
    per_component = []
    for table1, w in zip(tables, weights):
        ev = _Evaluator(domain, policy.table, table1)
        q, _ = ev.q_post()
        v = ev.value()[0]
        base += w * v
        per_component.append((w, v, q))
    for n0 in range(domain.spaces[0].size):
        inc = int(policy.table[n0])
        for a in range(domain.n_actions[0]):
            val = 0.0
            for w, v, q in per_component:
                val += w * (v + q.get((n0, a), 0.0) - q.get((n0, inc), 0.0))
            out[(n0, a)] = val
    return out


def exact_post_values(
    domain: TabularDomain, policy: ReactivePolicy, opponent: OpponentExecutor
) -> tuple[dict[tuple[int, int], float], dict[int, float]]:
    """Exact conditional post-sequence action values (what the learner's Q
    estimates) and sequence reach probabilities, mixture-averaged."""
    _check_enumerable(domain)
    tables, weights = _opponent_tables(domain, opponent)
    q_acc: dict[tuple[int, int], float] = {}
    pr_acc: dict[int, float] = {}
    for table1, w in zip(tables, weights):
        q, pr = _Evaluator(domain, policy.table, table1).q_post()
        for k, v in q.items():
            q_acc[k] = q_acc.get(k, 0.0) + w * v
        for k, v in pr.items():
            pr_acc[k] = pr_acc.get(k, 0.0) + w * v
    cond = {k: v / pr_acc[k[0]] for k, v in q_acc.items() if pr_acc.get(k[0], 0.0) > 0}
    return cond, pr_acc


def epsilon_local_check(
    domain: TabularDomain,
    policy: ReactivePolicy,
    opponent: OpponentExecutor,
    epsilon: float,
    nodes=None,
) -> tuple[bool, tuple[int, int] | None, float]:
    """True iff no enumerated neighbor exceeds the policy's exact value by
    more than epsilon; reports the max-gap neighbor.  `nodes` restricts the
    neighborhood (e.g. to the unpruned search space)."""
    values = neighbor_values(domain, policy, opponent)
    own = exact_policy_value(domain, policy, opponent).value
    worst, worst_gap = None, -np.inf
    for (n0, a), val in sorted(values.items()):
        if nodes is not None and n0 not in nodes:
            continue
        if a == int(policy.table[n0]):
            continue
        gap = val - own
        if gap > worst_gap:
            worst, worst_gap = (n0, a), gap
    return (worst_gap <= epsilon, worst, float(worst_gap))


def _minmax_paths(domain, tables, s, n0, n1, aj_filter=None, aj_prefix=()):
    """Min/max realizable post-sum for agent 0 from (s, node0, node1),
    optionally restricted to paths whose full opponent action sequence is
    consistent with aj_filter (a tuple of total length T)."""
    d = domain
    t = d.spaces[0].level_of(n0)
    a0 = int(tables[0][n0])
    a1 = int(tables[1][n1])
    if aj_filter is not None and aj_filter[len(aj_prefix)] != a1:
        return None
    r = d.rewards[0][s, a0, a1]
    if t + 1 >= d.horizon:
        return (r, r)
    lo, hi = np.inf, -np.inf
    ts = d.trans[s, a0, a1]
    for s2 in np.nonzero(ts)[0]:
        k0 = d.obs_kernels[0][s2, a0, a1]
        k1 = d.obs_kernels[1][s2, a0, a1]
        for o0 in np.nonzero(k0)[0]:
            for o1 in np.nonzero(k1)[0]:
                sub = _minmax_paths(
                    d,
                    tables,
                    int(s2),
                    d.spaces[0].child(n0, int(o0)),
                    d.spaces[1].child(n1, int(o1)),
                    aj_filter,
                    aj_prefix + (a1,),
                )
                if sub is None:
                    continue
                lo, hi = min(lo, sub[0]), max(hi, sub[1])
    if lo is np.inf:
        return None
    return (r + lo, r + hi)


def brute_force_lambda(
    domain: TabularDomain,
    policy: ReactivePolicy,
    seq: tuple[int, ...],
    action: int,
    opponent: OpponentExecutor,
    aj_filter: tuple[int, ...] | None = None,
) -> float:
    """Exact range of per-trajectory post-value differences between pi and
    the neighbor pi <- (seq, action).

    The two policies coincide until the edited sequence, so the difference is
    0 on every non-realizing trajectory and otherwise the difference of the
    two independent continuations from a shared reach context.  aj_filter
    restricts to trajectories whose opponent action sequence equals it.
    """
    _check_enumerable(domain)
    node = domain.spaces[0].index(seq)
    if action == int(policy.table[node]):
        return 0.0
    tables_cand = policy.transform(seq, action).table
    opp_tables, weights = _opponent_tables(domain, opponent)

    hi_diff, lo_diff = 0.0, 0.0  # 0 from non-realizing trajectories
    for table1, w in zip(opp_tables, weights):
        if w == 0:
            continue
        ev = _Evaluator(domain, policy.table, table1)
        level = len(seq)
        prefix = _opp_actions_prefix(domain, policy.table, table1)
        for (s, n0, n1), prob in sorted(ev.alpha()[level].items()):
            if n0 != node or prob <= 0:
                continue
            inc = _minmax_paths(
                domain, (policy.table, table1), s, n0, n1, aj_filter, prefix.get((s, n0, n1), ())
            )
            cand = _minmax_paths(
                domain, (tables_cand, table1), s, n0, n1, aj_filter, prefix.get((s, n0, n1), ())
            )
            if inc is None or cand is None:
                continue
            hi_diff = max(hi_diff, inc[1] - cand[0])
            lo_diff = min(lo_diff, inc[0] - cand[1])
    return float(hi_diff - lo_diff)


def _opp_actions_prefix(domain, table0, table1):
    """Opponent action prefixes leading to each reach context (for the
    action-sequence filter).  Recomputed per evaluator; memo-light."""
    ev = _Evaluator(domain, table0, table1)
    prefixes: dict[tuple[int, int, int], tuple[int, ...]] = {}
    frontier = {key: () for key in ev.alpha()[0]}
    prefixes.update(frontier)
    for t in range(domain.horizon - 1):
        nxt = {}
        for (s, n0, n1), pref in frontier.items():
            a0 = int(table0[n0])
            a1 = int(table1[n1])
            for p, s2, o0, o1 in ev._children(s, a0, a1):
                key = (s2, domain.spaces[0].child(n0, o0), domain.spaces[1].child(n1, o1))
                nxt[key] = pref + (a1,)
        prefixes.update(nxt)
        frontier = nxt
    return prefixes


def optimal_reactive_value(
    domain: TabularDomain,
    opponent: OpponentExecutor,
    frozen: dict[int, int] | None = None,
    node_cap: int = 10**8,
) -> tuple[float, np.ndarray]:
    """Exact optimal reactive-policy value for agent 0 against the fixed
    opponent, by belief-tree search over (state, component, opponent-node).

    `frozen` forces the action at given sequence nodes (pruned-space optimum
    under an incumbent assignment); free nodes are maximized.
    """
    _check_enumerable(domain, node_cap)
    d = domain
    opp_tables, weights = _opponent_tables(domain, opponent)

    def solve(n0: int, belief: dict[tuple[int, int, int], float]):
        t = d.spaces[0].level_of(n0)
        candidates = (
            [frozen[n0]] if frozen is not None and n0 in frozen else range(d.n_actions[0])
        )
        best_val, best_assign = -np.inf, {}
        for a0 in candidates:
            immediate = 0.0
            branches: dict[int, dict[tuple[int, int, int], float]] = {}
            for (s, k, n1), prob in sorted(belief.items()):
                a1 = int(opp_tables[k][n1])
                immediate += prob * d.rewards[0][s, a0, a1]
                if t + 1 >= d.horizon:
                    continue
                ts = d.trans[s, a0, a1]
                for s2 in np.nonzero(ts)[0]:
                    k0 = d.obs_kernels[0][s2, a0, a1]
                    k1 = d.obs_kernels[1][s2, a0, a1]
                    for o0 in np.nonzero(k0)[0]:
                        w0 = ts[s2] * k0[o0]
                        sub = branches.setdefault(int(o0), {})
                        for o1 in np.nonzero(k1)[0]:
                            key = (int(s2), k, d.spaces[1].child(n1, int(o1)))
                            sub[key] = sub.get(key, 0.0) + prob * w0 * k1[o1]
            val = immediate
            assign = {n0: a0}
            for o0, sub in sorted(branches.items()):
                mass = sum(sub.values())
                if mass <= 0:
                    continue
                child_val, child_assign = solve(
                    d.spaces[0].child(n0, o0), {kk: v / mass for kk, v in sub.items()}
                )
                val += mass * child_val
                assign.update(child_assign)
            if val > best_val:
                best_val, best_assign = val, assign
        return best_val, best_assign

    root_belief = {}
    for k, w in enumerate(weights):
        for s in np.nonzero(d.init)[0]:
            root_belief[(int(s), k, 0)] = float(d.init[s]) * w
    value, assignment = solve(0, root_belief)
    table = np.zeros(d.spaces[0].size, dtype=np.int64)
    for node, action in assignment.items():
        table[node] = action
    if frozen:
        for node, action in frozen.items():
            table[node] = action
    return float(value), table


def mc_policy_value(
    domain, banks: list[AgentPolicies], samples: int, rng: np.random.Generator, batch: int = 8192
):
    """Monte Carlo fallback: (per-agent mean, per-agent stderr)."""
    totals, sq, n = None, None, 0
    while n < samples:
        b = min(batch, samples - n)
        res = domain.simulate_batch(banks, b, rng)
        tot = res.rewards.sum(axis=2)  # (B, Z)
        if totals is None:
            totals = tot.sum(axis=0)
            sq = (tot**2).sum(axis=0)
        else:
            totals += tot.sum(axis=0)
            sq += (tot**2).sum(axis=0)
        n += b
    mean = totals / n
    var = sq / n - mean**2
    return mean, np.sqrt(np.maximum(var, 0.0) / n)
