"""Confidence-floor phase policies and committed-subset selection.

Instead of re-solving per realized arrivals, these policies solve one
assignment offline against shaved per-type counts (the floors hold with
high probability in every phase) and replay it online: each arriving
user consumes a unit from their own matching row, overflow arrivals
consume the slack row, and the rare phase where some floor is missed
falls back to salvaging the best live entry.

Subset selection comes in two flavors: exhaustive search over all
2^k - 1 subsets, and the k-step greedy that needs only O(k^2) solver
calls and inherits a (1 - 1/e) guarantee from submodularity.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    NEG_INF,
    Instance,
    InfeasibleError,
    ResourceGuardError,
    iter_subsets,
    validate,
)
from .env import Policy
from .matching import Aggregate, Matching, build_lcb_aggregate, doalg

__all__ = [
    "LcbState",
    "GreedyTrace",
    "lcb_policy_step",
    "lcb_star",
    "greedy_subset",
    "LcbPolicy",
    "AlcbPolicy",
    "subset_value_oracle",
]


class LcbState:
    """Live within-phase state of the replayed matching.

    ``M_live`` counts down from the template; the total remaining mass
    always equals the rounds left in the phase, which is what guarantees
    the step function can always pick something.
    """

    __slots__ = (
        "M_template",
        "M_live",
        "row_mass",
        "bad_event_flag",
        "phase_pulls",
        "deltas_eff",
        "mu",
        "ustar",
        "k",
    )

    def __init__(self, template: Matching, mu, deltas_eff, ustar: int):
        self.M_template = template
        self.mu = mu
        self.deltas_eff = deltas_eff  # committed thresholds, 0 elsewhere
        self.ustar = ustar  # slack row index, -1 when absent
        self.k = len(deltas_eff)
        self.reset()

    def reset(self) -> None:
        self.M_live = [list(row) for row in self.M_template.M]
        self.row_mass = [sum(row) for row in self.M_live]
        self.phase_pulls = [0] * self.k
        self.bad_event_flag = False


def lcb_policy_step(state: LcbState, u: int) -> int:
    """Serve one arrival from the live matching and return the arm.

    Row choice: the arrival's own row while it has mass, else the slack
    row, else (bad event) any row with mass.  Arm choice within the row
    maximizes the *actual* arriving type's utility; ties prefer the arm
    with the largest remaining committed deficit, then the smallest
    index.  The bad-event salvage maximizes the same utility over all
    live (row, arm) entries, ties toward smallest row then arm.
    """
    M = state.M_live
    mass = state.row_mass
    if mass[u] > 0:
        row = u
    elif state.ustar >= 0 and mass[state.ustar] > 0:
        row = state.ustar
    else:
        state.bad_event_flag = True
        row = -1
        best = -1.0
        arm = -1
        mu_u = state.mu[u]
        for r in range(len(M)):
            if mass[r] <= 0:
                continue
            Mr = M[r]
            for a in range(state.k):
                if Mr[a] > 0:
                    s = mu_u[a]
                    if s > best:
                        best, row, arm = s, r, a
        M[row][arm] -= 1
        mass[row] -= 1
        state.phase_pulls[arm] += 1
        return arm

    mu_u = state.mu[u]
    Mr = M[row]
    arm = -1
    best = -1.0
    best_deficit = -1
    pulls = state.phase_pulls
    deltas = state.deltas_eff
    for a in range(state.k):
        if Mr[a] > 0:
            s = mu_u[a]
            if s > best:
                arm, best = a, s
                d = deltas[a] - pulls[a]
                best_deficit = d if d > 0 else 0
            elif s == best:
                d = deltas[a] - pulls[a]
                if d < 0:
                    d = 0
                if d > best_deficit:
                    arm, best_deficit = a, d
    Mr[arm] -= 1
    mass[row] -= 1
    pulls[arm] += 1
    return arm


def subset_value_oracle(instance: Instance, aggregate: Aggregate | None = None):
    """f(Z) = value of the optimal aggregate matching committed to Z,
    with results cached across calls (the greedy re-queries prefixes)."""
    if aggregate is None:
        aggregate = build_lcb_aggregate(instance.P, instance.tau)
    cache: dict[frozenset, object] = {}

    def f(Z):
        Z = frozenset(Z)
        if Z in cache:
            return cache[Z]
        m = doalg(aggregate, Z, Z, instance)
        v = NEG_INF if m is NEG_INF else m.value
        cache[Z] = v
        return v

    f.aggregate = aggregate
    return f


def lcb_star(instance: Instance):
    """Exhaustive committed-subset search against the shaved aggregate.

    Returns (Z*, template matching); ties prefer smaller subsets, then
    lexicographic order.
    """
    validate(instance)
    if instance.k > 16:
        raise ResourceGuardError("2^k subset enumeration limited to k <= 16")
    aggregate = build_lcb_aggregate(instance.P, instance.tau)
    best_Z = None
    best_m = None
    best_v = None
    for Z in iter_subsets(instance.k):
        m = doalg(aggregate, frozenset(Z), frozenset(Z), instance)
        if m is NEG_INF:
            continue
        if best_v is None or m.value > best_v:
            best_Z, best_m, best_v = Z, m, m.value
    if best_Z is None:
        raise InfeasibleError("every commitment is infeasible for this instance")
    return frozenset(best_Z), best_m


@dataclass(frozen=True)
class GreedyTrace:
    """Record of one greedy subset-selection run."""

    order: tuple[int, ...]  # arms in the order added
    prefix_values: tuple  # f of each prefix, starting with f(empty)=0
    chosen: frozenset  # best prefix
    oracle_call_count: int


def greedy_subset(instance: Instance, oracle) -> GreedyTrace:
    """k rounds of marginal-gain greedy over arms, returning the best
    prefix seen (the value function is not monotone: committing to an
    expensive arm can hurt, so the full-size set may not be the best).

    Uses at most k(k+1)/2 <= k^2 + k oracle calls.  Candidates valued
    at the sentinel are treated as marginal -inf; once every remaining
    candidate is infeasible the scan stops early (supersets of an
    infeasible commitment stay infeasible).
    """
    k = instance.k
    calls = 0
    chosen: list[int] = []
    prefix_values: list = [0.0]
    best_len = 0
    best_value = 0.0
    remaining = list(range(k))
    while remaining:
        best_arm = None
        best_v = None
        for a in remaining:
            v = oracle(frozenset(chosen + [a]))
            calls += 1
            if v is NEG_INF:
                continue
            if best_v is None or v > best_v:
                best_arm, best_v = a, v
        if best_arm is None:
            break
        chosen.append(best_arm)
        remaining.remove(best_arm)
        prefix_values.append(best_v)
        if best_v > best_value:
            best_value = best_v
            best_len = len(chosen)
    return GreedyTrace(
        order=tuple(chosen),
        prefix_values=tuple(prefix_values),
        chosen=frozenset(chosen[:best_len]),
        oracle_call_count=calls,
    )


class LcbPolicy(Policy):
    """Replay the committed-subset matching phase after phase.

    ``bad_event_phases`` collects the 1-based phases whose arrivals
    missed some confidence floor (diagnosed by the fallback firing).
    """

    wants_feedback = False

    def __init__(self, instance: Instance, Z=None, template: Matching | None = None):
        validate(instance)
        self.instance = instance
        if Z is None:
            Z, template = lcb_star(instance)
        else:
            Z = frozenset(Z)
            if template is None:
                agg = build_lcb_aggregate(instance.P, instance.tau)
                m = doalg(agg, Z, Z, instance)
                if m is NEG_INF:
                    raise InfeasibleError(
                        f"commitment {sorted(Z)} cannot fit in a phase"
                    )
                template = m
        self.Z = frozenset(Z)
        self.template = template
        deltas_eff = [
            instance.delta[a] if a in self.Z else 0 for a in range(instance.k)
        ]
        mu = [list(row) for row in instance.mu]
        self.state = LcbState(template, mu, deltas_eff, ustar=instance.n)
        self._tau = instance.tau
        self.bad_event_phases: list[int] = []

    def start(self, rng) -> None:
        self.state.reset()
        self.bad_event_phases = []

    def choose(self, t: int, u: int, viable: frozenset) -> int | None:
        state = self.state
        if t % self._tau == 0:
            state.reset()
        flagged = state.bad_event_flag
        arm = lcb_policy_step(state, u)
        if state.bad_event_flag and not flagged:
            self.bad_event_phases.append(t // self._tau + 1)
        return arm


class AlcbPolicy(LcbPolicy):
    """Same replay as LcbPolicy, but the subset comes from the greedy
    search instead of exhaustive enumeration; keeps the trace around
    for diagnostics."""

    def __init__(self, instance: Instance):
        validate(instance)
        oracle = subset_value_oracle(instance)
        trace = greedy_subset(instance, oracle)
        if not trace.chosen:
            raise InfeasibleError("no viable commitment")
        template = doalg(oracle.aggregate, trace.chosen, trace.chosen, instance)
        assert template is not NEG_INF
        super().__init__(instance, Z=trace.chosen, template=template)
        self.trace = trace
