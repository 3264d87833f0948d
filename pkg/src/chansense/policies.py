"""Sensing policies: myopic, ordering-based, Gittins index rule, baselines.

Decision functions operate on a BeliefState and return a PolicyDecision.
Policy classes are small state machines (policy state must be hashable)
consumed by the evaluators and the simulator; all tie-breaks resolve to the
lowest channel index so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DOMINANCE_ATOL,
    BeliefState,
    DimensionMismatch,
    Pmf,
    ProblemSpec,
    dominates,
)


class IncomparableBeliefs(RuntimeError):
    """No channel stochastically dominates all others.

    Signals that the instance violates the ordering preconditions; the
    myopic rule is undefined at such a belief.
    """


class GittinsDomainError(ValueError):
    """Gittins index requested with discount >= 1."""


@dataclass(frozen=True)
class ChannelOrdering:
    """Permutation of channels 1..N; position N (right-most) is sensed next."""

    order: tuple[int, ...]

    def __post_init__(self):
        n = len(self.order)
        if sorted(self.order) != list(range(1, n + 1)):
            raise ValueError(f"{self.order} is not a permutation of 1..{n}")

    @classmethod
    def identity(cls, n: int) -> "ChannelOrdering":
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.order)

    def at(self, position: int) -> int:
        """Channel at a 1-based position."""
        if not 1 <= position <= self.n:
            raise IndexError(f"position {position} out of range 1..{self.n}")
        return self.order[position - 1]

    @property
    def rightmost(self) -> int:
        return self.order[-1]

    def position_of(self, channel: int) -> int:
        return self.order.index(channel) + 1

    def __iter__(self):
        return iter(self.order)


def shift(ordering: ChannelOrdering) -> ChannelOrdering:
    """Cyclic shift right: (O(N), O(1), ..., O(N-1))."""
    o = ordering.order
    return ChannelOrdering((o[-1],) + o[:-1])


def shift_ccw(ordering: ChannelOrdering, m: int) -> ChannelOrdering:
    """Counter-clockwise cyclic shift by m: (O(m+1), ..., O(N), O(1), ..., O(m))."""
    if not 0 <= m < ordering.n:
        raise IndexError(f"shift_ccw: m={m} out of range 0..{ordering.n - 1}")
    o = ordering.order
    return ChannelOrdering(o[m:] + o[:m])


def swap(ordering: ChannelOrdering, n: int, m: int) -> ChannelOrdering:
    """Exchange the channels at positions n and m (1 <= m < n <= N)."""
    if not 1 <= m < n <= ordering.n:
        raise IndexError(f"swap: need 1 <= m < n <= N, got m={m}, n={n}, N={ordering.n}")
    o = list(ordering.order)
    o[m - 1], o[n - 1] = o[n - 1], o[m - 1]
    return ChannelOrdering(tuple(o))


def lift(ordering: ChannelOrdering, n: int, m: int) -> ChannelOrdering:
    """Move the channel at position n to position m, shifting the block right.

    Result(m) = O(n); result(i) = O(i-1) for m < i <= n; identity elsewhere.
    """
    if not 1 <= m < n <= ordering.n:
        raise IndexError(f"lift: need 1 <= m < n <= N, got m={m}, n={n}, N={ordering.n}")
    o = ordering.order
    moved = o[: m - 1] + (o[n - 1],) + o[m - 1 : n - 1] + o[n:]
    return ChannelOrdering(moved)


def ordering_policy_step(ordering: ChannelOrdering, observed_state: int, threshold: int,
                         k: int | None = None) -> ChannelOrdering:
    """Update the ordering after sensing its right-most channel.

    Good observation (state >= threshold) keeps the ordering; a bad one
    rotates it so the just-sensed channel moves to the left-most slot.
    """
    if observed_state < 1 or (k is not None and observed_state > k):
        raise IndexError(f"observed state {observed_state} out of range")
    return ordering if observed_state >= threshold else shift(ordering)


def ordering_action(ordering: ChannelOrdering) -> PolicyDecision:
    """The ordering-driven decision: always sense the right-most channel."""
    return PolicyDecision(channel=ordering.rightmost, rationale="OrderingRightmost")


@dataclass(frozen=True)
class PolicyDecision:
    channel: int
    rationale: str
    scores: dict[int, float] | None = None
    note: str | None = None


def _dominant_channel(belief: BeliefState, tol: float) -> int | None:
    """Index of a channel whose PMF dominates every other, or None.

    The dominant set is computed with the tolerance, but ties within it are
    refined by exact comparison first: when float arithmetic still resolves
    a strict order below the tolerance, the true maximum wins; only
    genuinely unresolvable ties fall back to the lowest channel index.
    """
    tails = np.stack([p.tails[1:] for p in belief.pmfs])
    best = tails.max(axis=0)
    ok = np.all(tails >= best - tol, axis=1)
    hits = np.flatnonzero(ok)
    if not hits.size:
        return None
    if hits.size > 1:
        exact = np.flatnonzero(np.all(tails >= best, axis=1))
        if exact.size:
            return int(exact[0]) + 1
    return int(hits[0]) + 1


def myopic_action(belief: BeliefState, *, tol: float = DOMINANCE_ATOL,
                  fallback_expected_reward: np.ndarray | None = None) -> PolicyDecision:
    """Sense the stochastically largest channel; ties go to the lowest index.

    Raises IncomparableBeliefs when no channel dominates all others.  An
    expected-reward fallback is available for exploratory runs only: pass
    the reward vector to pick argmax of the one-step expected reward instead
    of failing.
    """
    ch = _dominant_channel(belief, tol)
    if ch is not None:
        return PolicyDecision(channel=ch, rationale="MyopicDominance")
    if fallback_expected_reward is not None:
        values = [p.expect(fallback_expected_reward) for p in belief.pmfs]
        ch = int(np.argmax(values)) + 1
        return PolicyDecision(channel=ch, rationale="MyopicDominance",
                              note="incomparable beliefs; expected-reward fallback used")
    raise IncomparableBeliefs(
        "no channel dominates all others; the ordering preconditions do not hold here")


def gittins_index(pi: Pmf, spec: ProblemSpec) -> float:
    """Closed-form index of a single channel at belief pi.

    nu(pi) = (pi R + beta pi(K) P_K R / (1 - beta p_KK))
             / (1 + beta pi(K) / (1 - beta p_KK)).

    Valid as the exact index for beliefs in the row hull between P_{K-1}
    and P_K when the threshold equals K; outside that band the same formula
    is returned and `gittins_band_ok` can flag the excursion.
    """
    beta = spec.discount
    if beta >= 1.0:
        raise GittinsDomainError(f"Gittins index needs discount < 1, got {beta}")
    if pi.k != spec.k:
        raise DimensionMismatch(f"belief has {pi.k} states, spec has {spec.k}")
    R = spec.rewards.values
    p_kk = float(spec.transition.matrix[spec.k - 1, spec.k - 1])
    top_value = float(spec.transition.matrix[spec.k - 1] @ R) / (1.0 - beta * p_kk)
    w = beta * float(pi.probs[spec.k - 1])
    return (float(pi.probs @ R) + w * top_value) / (1.0 + w / (1.0 - beta * p_kk))


def gittins_band_ok(pi: Pmf, spec: ProblemSpec, *, tol: float = DOMINANCE_ATOL) -> bool:
    """Cheap band check: P_{K-1} <=st pi <=st P_K (hull membership not tested)."""
    rows = spec.transition
    return (dominates(pi, rows.row(spec.k - 1), tol=tol)
            and dominates(rows.row(spec.k), pi, tol=tol))


def decisions_equivalent(belief: BeliefState, a: int, b: int, *,
                         tol: float = DOMINANCE_ATOL) -> bool:
    """Whether sensing channel a or b is the same decision up to belief ties.

    True when the two channels' PMFs dominate each other within the
    tolerance; such channels are interchangeable for any rule that ranks by
    stochastic order, so disagreeing on them is a tie artifact rather than
    a substantive policy difference.
    """
    if a == b:
        return True
    return (dominates(belief.pmfs[a - 1], belief.pmfs[b - 1], tol=tol)
            and dominates(belief.pmfs[b - 1], belief.pmfs[a - 1], tol=tol))


def gittins_action(belief: BeliefState, spec: ProblemSpec, *,
                   check_band: bool = False) -> PolicyDecision:
    """Sense the channel with the highest Gittins index; ties to lowest index."""
    scores = {n + 1: gittins_index(p, spec) for n, p in enumerate(belief.pmfs)}
    ch = max(scores, key=lambda n: (scores[n], -n))
    note = None
    if check_band:
        out = [n for n, p in enumerate(belief.pmfs, start=1) if not gittins_band_ok(p, spec)]
        if out:
            note = f"channels {out} outside the [P_(K-1), P_K] band; index formula unproven there"
    return PolicyDecision(channel=ch, rationale="GittinsArgmax", scores=scores, note=note)


# ---------------------------------------------------------------------------
# Policy state machines for the evaluators and the simulator


class Policy:
    """Deterministic sensing policy as a finite state machine.

    `start` yields the initial (hashable) policy state, `act` the channel to
    sense, and `step` the next policy state given the observation.  Policies
    whose action depends only on the current belief leave the state None.
    """

    name = "policy"

    def start(self, spec: ProblemSpec, belief: BeliefState):
        return None

    def act(self, state, belief: BeliefState, t: int) -> int:
        raise NotImplementedError

    def step(self, state, channel: int, observed_state: int, t: int):
        return state


class MyopicPolicy(Policy):
    name = "myopic"

    def act(self, state, belief, t):
        return myopic_action(belief).channel


class GittinsPolicy(Policy):
    name = "gittins"

    def __init__(self, spec: ProblemSpec):
        if spec.discount >= 1.0:
            raise GittinsDomainError("Gittins rule needs discount < 1")
        self.spec = spec

    def act(self, state, belief, t):
        return gittins_action(belief, self.spec).channel


class FixedPolicy(Policy):
    def __init__(self, channel: int):
        self.channel = channel
        self.name = f"fixed:{channel}"

    def act(self, state, belief, t):
        if self.channel > belief.n:
            raise IndexError(f"fixed channel {self.channel} > N={belief.n}")
        return self.channel


class RoundRobinPolicy(Policy):
    """Cycle 1, 2, ..., N regardless of observations."""

    name = "round_robin"

    def __init__(self, start_channel: int = 1):
        self.start_channel = start_channel

    def start(self, spec, belief):
        n = spec.n_channels
        return ((self.start_channel - 1) % n) + 1, n

    def act(self, state, belief, t):
        return state[0]

    def step(self, state, channel, observed_state, t):
        current, n = state
        return (current % n) + 1, n


class OrderingPolicy(Policy):
    """Sense the right-most channel of an ordering; rotate on bad observations."""

    def __init__(self, initial: ChannelOrdering, threshold: int):
        self.initial = initial
        self.threshold = threshold
        self.name = "ordering:" + ",".join(str(c) for c in initial)

    def start(self, spec, belief):
        return self.initial

    def act(self, state, belief, t):
        return state.rightmost

    def step(self, state, channel, observed_state, t):
        return ordering_policy_step(state, observed_state, self.threshold)


class RandomPolicy(Policy):
    """Uniform over channels.

    In the simulator each replication draws from its own stream; in the exact
    evaluator the policy is treated as the uniform mixture, which is its
    exact expectation.
    """

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def act_dist(self, state, belief, t) -> dict[int, float]:
        n = belief.n
        return {c: 1.0 / n for c in range(1, n + 1)}

    def act(self, state, belief, t):
        raise RuntimeError("RandomPolicy is evaluated via its action distribution")


def baseline_action(belief: BeliefState, kind: str, *, t: int = 0,
                    fixed_channel: int = 1, rng: np.random.Generator | None = None) -> PolicyDecision:
    """One-shot baseline decisions: 'fixed', 'round_robin', or 'random'."""
    n = belief.n
    if kind == "fixed":
        if not 1 <= fixed_channel <= n:
            raise IndexError(f"fixed channel {fixed_channel} out of range 1..{n}")
        return PolicyDecision(channel=fixed_channel, rationale="Fixed")
    if kind == "round_robin":
        return PolicyDecision(channel=(t % n) + 1, rationale="Fixed")
    if kind == "random":
        if rng is None:
            rng = np.random.default_rng(0)
        return PolicyDecision(channel=int(rng.integers(1, n + 1)), rationale="Random")
    raise ValueError(f"unknown baseline kind {kind!r}")
