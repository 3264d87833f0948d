"""Exact and simulated policy evaluation.

The joint belief of the N channels is canonicalized by provenance: each
channel's belief is some origin PMF (an initial belief or a transition row)
aged by repeated unobserved transitions.  Aged chains converge, so each
chain is materialized once and frozen at the first age whose one-step
change falls below float resolution; from there the chain is exactly
stationary in double precision.  This makes the reachable belief space
finite and the dynamic programs below exact.

Three interchangeable engines compute expected total discounted reward:

  tree   backward induction over the forward-reachable layers; supports any
         policy state machine and produces optimal action traces;
  chain  long-horizon evaluation of a fixed policy as a finite Markov
         reward chain (BFS closure + vectorized backward sweeps);
  grid   long-horizon optimal values by Bellman sweeps over the full
         product of per-channel chain states.

All are exact on the frozen space and cross-check each other in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BeliefState,
    Pmf,
    ProblemSpec,
    Provenance,
)
from .policies import (
    ChannelOrdering,
    FixedPolicy,
    GittinsPolicy,
    IncomparableBeliefs,
    MyopicPolicy,
    OrderingPolicy,
    Policy,
    RandomPolicy,
    RoundRobinPolicy,
    gittins_index,
    shift,
)

DEFAULT_NODE_BUDGET = 10_000_000
FREEZE_ATOL = 1e-15
TRUNCATION_EPS = 1e-8
_TREE_HORIZON_MAX = 8
_DOM_TOL = 1e-9


class NodeBudgetExceeded(RuntimeError):
    """The exact solver would need more nodes than the configured budget."""


@dataclass
class ValueResult:
    value: float
    policy_trace: dict | None = None
    stats: dict = field(default_factory=dict)


@dataclass
class SimulationReport:
    mean: float
    std_error: float
    replications: int
    seed: int
    policy_name: str
    totals: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "replications": self.replications,
            "seed": self.seed,
            "policy": self.policy_name,
        }


# ---------------------------------------------------------------------------
# Frozen belief chains


def _build_chain(origin: np.ndarray, P: np.ndarray, max_age: int | None,
                 freeze_atol: float, max_chain: int) -> tuple[np.ndarray, bool]:
    """Age a PMF until frozen (one-step change <= freeze_atol) or max_age."""
    chain = [np.asarray(origin, dtype=np.float64)]
    frozen = False
    while True:
        if max_age is not None and len(chain) > max_age:
            break
        nxt = chain[-1] @ P
        if np.max(np.abs(nxt - chain[-1])) <= freeze_atol:
            frozen = True
            break
        if len(chain) >= max_chain:
            raise NodeBudgetExceeded(
                f"belief chain did not settle within {max_chain} steps; "
                "the transition matrix mixes too slowly for an exact finite table")
        chain.append(nxt)
    return np.array(chain), frozen


class _ChannelTable:
    """Per-channel enumeration of (origin, age) belief states."""

    __slots__ = ("pmf", "aged", "reward", "tails", "nu", "obs0", "initial_id",
                 "frozen", "pmf_objs", "prov_objs", "size")

    def __init__(self, channel: int, spec: ProblemSpec, obs_chains, obs_frozen,
                 max_age, freeze_atol, max_chain):
        P = spec.transition.matrix
        init_chain, init_frozen = _build_chain(
            spec.initial_pmfs[channel - 1].probs, P, max_age, freeze_atol, max_chain)
        blocks = [init_chain] + list(obs_chains)
        self.pmf = np.concatenate(blocks, axis=0)
        self.size = self.pmf.shape[0]
        self.frozen = bool(init_frozen and all(obs_frozen))

        aged = np.empty(self.size, dtype=np.int64)
        prov: list[Provenance] = []
        obs0 = np.empty(spec.k, dtype=np.int64)
        offset = 0
        specs = [("init", channel, init_chain, init_frozen)] + [
            ("obs", i + 1, obs_chains[i], obs_frozen[i]) for i in range(spec.k)]
        for kind, index, chain, frozen in specs:
            n = chain.shape[0]
            if kind == "obs":
                obs0[index - 1] = offset
            for a in range(n):
                sid = offset + a
                aged[sid] = sid + 1 if a + 1 < n else sid
                prov.append(Provenance(kind, index, a))
            offset += n
        self.aged = aged
        self.obs0 = obs0
        self.initial_id = 0
        self.prov_objs = prov
        self.pmf_objs = [Pmf(self.pmf[sid]) for sid in range(self.size)]
        self.reward = self.pmf @ spec.rewards.values
        tails = np.cumsum(self.pmf[:, ::-1], axis=1)[:, ::-1]
        self.tails = tails[:, 1:]
        self.nu = None
        if spec.discount < 1.0:
            self.nu = np.array([gittins_index(p, spec) for p in self.pmf_objs])


class BeliefTable:
    """Joint belief space of an instance: one _ChannelTable per channel.

    `max_age=None` requires every chain to freeze, giving a finite space
    closed under aging (needed by the long-horizon engines).  A finite
    max_age only materializes ages up to a horizon (enough for the tree
    engine, which never ages a belief beyond the horizon).
    """

    def __init__(self, spec: ProblemSpec, *, max_age: int | None = None,
                 freeze_atol: float = FREEZE_ATOL, max_chain: int = 200_000):
        self.spec = spec
        P = spec.transition.matrix
        obs = [_build_chain(P[i], P, max_age, freeze_atol, max_chain)
               for i in range(spec.k)]
        obs_chains = [c for c, _ in obs]
        obs_frozen = [f for _, f in obs]
        self.channels = [
            _ChannelTable(c, spec, obs_chains, obs_frozen, max_age, freeze_atol, max_chain)
            for c in range(1, spec.n_channels + 1)]
        self.frozen = all(t.frozen for t in self.channels)

    @property
    def n(self) -> int:
        return len(self.channels)

    @property
    def grid_cells(self) -> int:
        return int(np.prod([t.size for t in self.channels]))

    def initial_ids(self) -> tuple[int, ...]:
        return tuple(t.initial_id for t in self.channels)

    def age_ids(self, ids: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(t.aged[i] for t, i in zip(self.channels, ids))

    def successor(self, ids: tuple[int, ...], channel: int, observed: int) -> tuple[int, ...]:
        """Joint ids after sensing `channel` and observing state `observed`."""
        nxt = list(self.age_ids(ids))
        nxt[channel - 1] = int(self.channels[channel - 1].obs0[observed - 1])
        return tuple(nxt)

    def belief(self, ids: tuple[int, ...]) -> BeliefState:
        return BeliefState(
            pmfs=tuple(t.pmf_objs[i] for t, i in zip(self.channels, ids)),
            provenance=tuple(t.prov_objs[i] for t, i in zip(self.channels, ids)))

    def obs_probs(self, ids: tuple[int, ...], channel: int) -> np.ndarray:
        return self.channels[channel - 1].pmf[ids[channel - 1]]

    def channel_reward(self, ids: tuple[int, ...], channel: int) -> float:
        return float(self.channels[channel - 1].reward[ids[channel - 1]])


# ---------------------------------------------------------------------------
# Policy actors: map Policy objects onto the table representation


class _Actor:
    deterministic = True

    def start(self, table: "BeliefTable"):
        return None

    def action(self, pstate, ids, t, table: "BeliefTable"):
        raise NotImplementedError

    def step(self, pstate, channel, observed, t):
        return pstate


class _MyopicActor(_Actor):
    def action(self, pstate, ids, t, table):
        tails = np.stack([ch.tails[i] for ch, i in zip(table.channels, ids)])
        best = tails.max(axis=0)
        ok = np.all(tails >= best - _DOM_TOL, axis=1)
        hits = np.flatnonzero(ok)
        if not hits.size:
            raise IncomparableBeliefs(
                "no channel dominates all others at a reachable belief")
        if hits.size > 1:
            exact = np.flatnonzero(np.all(tails >= best, axis=1))
            if exact.size:
                return int(exact[0]) + 1
        return int(hits[0]) + 1


class _GittinsActor(_Actor):
    def action(self, pstate, ids, t, table):
        nus = [ch.nu[i] for ch, i in zip(table.channels, ids)]
        return int(np.argmax(nus)) + 1


class _FixedActor(_Actor):
    def __init__(self, channel):
        self.channel = channel

    def action(self, pstate, ids, t, table):
        return self.channel


class _RoundRobinActor(_Actor):
    def __init__(self, start, n):
        self.start_channel = start
        self.n = n

    def start(self, table):
        return ((self.start_channel - 1) % self.n) + 1

    def action(self, pstate, ids, t, table):
        return pstate

    def step(self, pstate, channel, observed, t):
        return (pstate % self.n) + 1


class _OrderingActor(_Actor):
    def __init__(self, initial: ChannelOrdering, threshold: int):
        self.initial = initial
        self.threshold = threshold

    def start(self, table):
        return self.initial

    def action(self, pstate, ids, t, table):
        return pstate.rightmost

    def step(self, pstate, channel, observed, t):
        return pstate if observed >= self.threshold else shift(pstate)


class _UniformActor(_Actor):
    deterministic = False

    def action(self, pstate, ids, t, table):
        n = table.n
        return tuple((c, 1.0 / n) for c in range(1, n + 1))


class _GenericActor(_Actor):
    """Falls back to the user-facing Policy protocol on materialized beliefs."""

    def __init__(self, policy: Policy, spec: ProblemSpec):
        self.policy = policy
        self.spec = spec

    def start(self, table):
        return self.policy.start(self.spec, table.belief(table.initial_ids()))

    def action(self, pstate, ids, t, table):
        return self.policy.act(pstate, table.belief(ids), t)

    def step(self, pstate, channel, observed, t):
        return self.policy.step(pstate, channel, observed, t)


class _TracePolicyActor(_Actor):
    """Replays an optimal action map recorded by the tree engine."""

    def __init__(self, trace: dict):
        self.trace = trace

    def action(self, pstate, ids, t, table):
        key = (t, table.belief(ids).provenance)
        return self.trace[key]


def _make_actor(policy, spec: ProblemSpec) -> _Actor:
    if isinstance(policy, MyopicPolicy):
        return _MyopicActor()
    if isinstance(policy, GittinsPolicy):
        return _GittinsActor()
    if isinstance(policy, FixedPolicy):
        return _FixedActor(policy.channel)
    if isinstance(policy, RoundRobinPolicy):
        return _RoundRobinActor(policy.start_channel, spec.n_channels)
    if isinstance(policy, OrderingPolicy):
        return _OrderingActor(policy.initial, policy.threshold)
    if isinstance(policy, RandomPolicy):
        return _UniformActor()
    if isinstance(policy, Policy):
        return _GenericActor(policy, spec)
    if isinstance(policy, dict):
        return _TracePolicyActor(policy)
    if callable(policy):
        wrapped = Policy()
        wrapped.act = lambda pstate, belief, t: policy(belief, t)  # type: ignore[assignment]
        return _GenericActor(wrapped, spec)
    raise TypeError(f"unsupported policy object {policy!r}")


# ---------------------------------------------------------------------------
# Tree engine


def _tree_value(spec: ProblemSpec, T: int, actor: _Actor | None, budget: int,
                want_trace: bool) -> ValueResult:
    """Backward induction over forward-reachable (policy-state, ids) layers.

    actor=None computes the optimal value (max over channels each step).
    """
    table = BeliefTable(spec, max_age=T)
    root = (actor.start(table) if actor is not None else None, table.initial_ids())
    layers: list[dict] = [{root: None}]
    total_nodes = 1
    for t in range(T):
        frontier = layers[t]
        nxt: dict = {}
        for (ps, ids) in frontier:
            if actor is None:
                choices = [(c, 1.0) for c in range(1, spec.n_channels + 1)]
            else:
                act = actor.action(ps, ids, t, table)
                choices = act if not actor.deterministic else [(act, 1.0)]
                frontier[(ps, ids)] = act
            for channel, _w in choices:
                probs = table.obs_probs(ids, channel)
                for i in range(spec.k):
                    if probs[i] <= 0.0:
                        continue
                    ps_next = actor.step(ps, channel, i + 1, t) if actor is not None else None
                    key = (ps_next, table.successor(ids, channel, i + 1))
                    if key not in nxt:
                        nxt[key] = None
        total_nodes += len(nxt)
        if total_nodes > budget:
            raise NodeBudgetExceeded(
                f"reachable belief nodes exceed budget {budget} at depth {t + 1}")
        layers.append(nxt)

    # cache actions for the terminal layer too
    if actor is not None:
        for (ps, ids) in layers[T]:
            layers[T][(ps, ids)] = actor.action(ps, ids, T, table)

    beta = spec.discount
    values: dict = {}
    trace: dict | None = {} if want_trace else None
    for t in range(T, -1, -1):
        new_values: dict = {}
        for (ps, ids), act in layers[t].items():
            def q(channel: int) -> float:
                r = table.channel_reward(ids, channel)
                if t == T:
                    return r
                probs = table.obs_probs(ids, channel)
                acc = 0.0
                for i in range(spec.k):
                    if probs[i] <= 0.0:
                        continue
                    ps_next = actor.step(ps, channel, i + 1, t) if actor is not None else None
                    key = (ps_next, table.successor(ids, channel, i + 1))
                    acc += probs[i] * values[key]
                return r + beta * acc

            if actor is None:
                qs = [q(c) for c in range(1, spec.n_channels + 1)]
                best = int(np.argmax(qs)) + 1
                new_values[(ps, ids)] = qs[best - 1]
                if trace is not None:
                    trace[(t, table.belief(ids).provenance)] = best
            elif actor.deterministic:
                new_values[(ps, ids)] = q(act)
            else:
                new_values[(ps, ids)] = sum(w * q(c) for c, w in act)
        values = new_values
    stats = {"engine": "tree", "nodes": total_nodes, "horizon": T}
    return ValueResult(value=float(values[root]), policy_trace=trace, stats=stats)


# ---------------------------------------------------------------------------
# Chain engine: fixed policy, long horizons


def _chain_value(spec: ProblemSpec, T: int, actor: _Actor, budget: int) -> ValueResult:
    table = BeliefTable(spec)
    if not table.frozen:
        raise NodeBudgetExceeded("belief chains did not freeze; chain engine unavailable")
    k = spec.k
    root = (actor.start(table), table.initial_ids())
    index: dict = {root: 0}
    order = [root]
    rows: list[tuple[int, float, float, np.ndarray, list]] = []
    # BFS closure; each row is one (node, action) pair with its weight
    head = 0
    while head < len(order):
        ps, ids = order[head]
        node = head
        head += 1
        act = actor.action(ps, ids, 0, table)
        choices = [(act, 1.0)] if actor.deterministic else list(act)
        for channel, w in choices:
            probs = table.obs_probs(ids, channel)
            succ = np.empty(k, dtype=np.int64)
            for i in range(k):
                ps_next = actor.step(ps, channel, i + 1, 0)
                key = (ps_next, table.successor(ids, channel, i + 1))
                if key not in index:
                    if len(index) >= budget:
                        raise NodeBudgetExceeded(
                            f"policy-reachable belief nodes exceed budget {budget}")
                    index[key] = len(order)
                    order.append(key)
                succ[i] = index[key]
            rows.append((node, w, table.channel_reward(ids, channel), probs, succ))
    n_nodes = len(order)
    row_node = np.array([r[0] for r in rows], dtype=np.int64)
    row_w = np.array([r[1] for r in rows])
    row_r = np.array([r[2] for r in rows])
    row_probs = np.stack([r[3] for r in rows])
    row_succ = np.stack([r[4] for r in rows])
    one_row_per_node = len(rows) == n_nodes and np.array_equal(row_node, np.arange(n_nodes))

    beta = spec.discount
    v = np.zeros(n_nodes)
    for _ in range(T + 1):
        contrib = row_w * (row_r + beta * (row_probs * v[row_succ]).sum(axis=1))
        if one_row_per_node:
            v = contrib
        else:
            nv = np.zeros(n_nodes)
            np.add.at(nv, row_node, contrib)
            v = nv
    stats = {"engine": "chain", "nodes": n_nodes, "horizon": T}
    return ValueResult(value=float(v[0]), stats=stats)


# note: the chain engine calls actor.action with t=0 for every node, so it is
# only valid for stationary policies; time-indexed policies go through the
# tree engine.  All built-in actors are stationary (round-robin's phase and
# the ordering live in the policy state, not in t).


# ---------------------------------------------------------------------------
# Grid engine: optimal values, long horizons


def _grid_optimal_value(spec: ProblemSpec, T: int, budget: int) -> ValueResult:
    table = BeliefTable(spec)
    if not table.frozen:
        raise NodeBudgetExceeded("belief chains did not freeze; grid engine unavailable")
    cells = table.grid_cells
    if cells > budget:
        raise NodeBudgetExceeded(f"joint chain grid has {cells} cells > budget {budget}")
    n = table.n
    beta = spec.discount
    sizes = [t.size for t in table.channels]
    aged = [t.aged for t in table.channels]
    obs0 = [t.obs0 for t in table.channels]
    pmf = [t.pmf for t in table.channels]
    rshape = [
        t.reward.reshape([1] * c + [sizes[c]] + [1] * (n - c - 1))
        for c, t in enumerate(table.channels)]

    v = np.zeros(sizes)
    for _ in range(T + 1):
        best = None
        for c in range(n):
            idx = [aged[j] for j in range(n)]
            idx[c] = obs0[c]
            gathered = v[np.ix_(*idx)]  # axis c indexes the observed state
            cont = np.tensordot(gathered, pmf[c], axes=([c], [1]))
            cont = np.moveaxis(cont, -1, c)
            q = rshape[c] + beta * cont
            best = q if best is None else np.maximum(best, q)
        v = best
    root = table.initial_ids()
    stats = {"engine": "grid", "nodes": cells, "horizon": T}
    return ValueResult(value=float(v[root]), stats=stats)


# ---------------------------------------------------------------------------
# Public evaluation operations


def optimal_value_dp(spec: ProblemSpec, T: int, *, budget: int = DEFAULT_NODE_BUDGET,
                     want_trace: bool = False, engine: str = "auto") -> ValueResult:
    """Exact optimal expected total discounted reward over horizon T.

    Decisions happen at t = 0..T inclusive; rewards are discounted by
    beta^t.  The oracle either returns the exact value or aborts on the
    node budget; it never approximates.
    """
    if T < 0:
        raise ValueError("horizon T must be >= 0")
    if engine == "tree" or want_trace or (engine == "auto" and T <= _TREE_HORIZON_MAX):
        return _tree_value(spec, T, None, budget, want_trace)
    if engine in ("auto", "grid"):
        try:
            return _grid_optimal_value(spec, T, budget)
        except NodeBudgetExceeded:
            if engine == "grid":
                raise
            return _tree_value(spec, T, None, budget, want_trace)
    raise ValueError(f"unknown engine {engine!r}")


def policy_value_dp(spec: ProblemSpec, T: int, policy, *, budget: int = DEFAULT_NODE_BUDGET,
                    engine: str = "auto") -> ValueResult:
    """Exact expected value of a fixed policy by the same belief recursion."""
    if T < 0:
        raise ValueError("horizon T must be >= 0")
    actor = _make_actor(policy, spec)
    if engine == "tree" or (engine == "auto" and T <= _TREE_HORIZON_MAX):
        return _tree_value(spec, T, actor, budget, want_trace=False)
    if engine in ("auto", "chain"):
        if isinstance(actor, (_GenericActor, _TracePolicyActor)):
            return _tree_value(spec, T, actor, budget, want_trace=False)
        try:
            return _chain_value(spec, T, actor, budget)
        except NodeBudgetExceeded:
            if engine == "chain":
                raise
            return _tree_value(spec, T, actor, budget, want_trace=False)
    raise ValueError(f"unknown engine {engine!r}")


def ordering_value(ordering: ChannelOrdering, pmfs, spec: ProblemSpec, t: int, T: int) -> float:
    """Expected reward V_t of the ordering-driven policy from raw beliefs.

    Senses the right-most channel each step; a below-threshold observation
    rotates the ordering.  Defined for arbitrary PMFs, not only canonical
    ones, because the ordering-value bounds quantify over the whole hull.
    """
    if t > T:
        raise ValueError("ordering_value needs t <= T")
    P = spec.transition.matrix
    R = spec.rewards.values
    beta = spec.discount
    el = spec.threshold
    k = spec.k
    vecs = [p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=np.float64) for p in pmfs]
    if len(vecs) != ordering.n:
        raise ValueError(f"{len(vecs)} beliefs for an ordering of {ordering.n} channels")

    def rec(order: ChannelOrdering, beliefs: list[np.ndarray], depth: int) -> float:
        sensed = order.rightmost
        pi = beliefs[sensed - 1]
        r = float(pi @ R)
        if depth == T - t:
            return r
        aged = [b @ P for b in beliefs]
        acc = 0.0
        for i in range(k):
            w = float(pi[i])
            if w <= 0.0:
                continue
            nxt = list(aged)
            nxt[sensed - 1] = P[i]
            nxt_order = order if (i + 1) >= el else shift(order)
            acc += w * rec(nxt_order, nxt, depth + 1)
        return r + beta * acc

    return rec(ordering, vecs, 0)


def ordering_value_diff(ordering: ChannelOrdering, pi_hat, pmfs, spec: ProblemSpec,
                        t: int, T: int) -> float:
    """V_t with channel 1's belief replaced by pi_hat, minus V_t as given."""
    hat = list(pmfs)
    hat[0] = pi_hat
    return (ordering_value(ordering, hat, spec, t, T)
            - ordering_value(ordering, pmfs, spec, t, T))


def truncation_horizon(spec: ProblemSpec, eps: float = TRUNCATION_EPS) -> int:
    """Smallest T with beta^(T+1) * max|R| / (1 - beta) < eps."""
    beta = spec.discount
    if beta >= 1.0:
        raise ValueError("truncation needs discount < 1")
    bound = max(abs(float(spec.rewards.values[0])), abs(float(spec.rewards.values[-1])))
    if bound == 0.0:
        return 0
    T = max(0, math.ceil(math.log(eps * (1.0 - beta) / bound) / math.log(beta)) - 1)
    while beta ** (T + 1) * bound / (1.0 - beta) >= eps:
        T += 1
    return T


def infinite_horizon_value(spec: ProblemSpec, policy=None, *, eps: float = TRUNCATION_EPS,
                           budget: int = DEFAULT_NODE_BUDGET) -> ValueResult:
    """Discounted infinite-horizon value via truncation.

    Evaluates at the horizon where the geometric tail drops below eps; the
    reported value is within eps of the infinite-horizon value.  policy=None
    gives the optimal value.
    """
    if spec.discount >= 1.0:
        raise ValueError("infinite-horizon evaluation needs discount < 1")
    T = truncation_horizon(spec, eps)
    if policy is None:
        res = optimal_value_dp(spec, T, budget=budget)
    else:
        res = policy_value_dp(spec, T, policy, budget=budget)
    res.stats.update({
        "truncation_horizon": T,
        "tail_bound": float(spec.discount ** (T + 1)
                            * max(abs(float(spec.rewards.values[0])),
                                  abs(float(spec.rewards.values[-1]))) / (1 - spec.discount)),
        "eps": eps,
    })
    return res


def reachable_beliefs(spec: ProblemSpec, T: int, *, budget: int = DEFAULT_NODE_BUDGET):
    """Joint beliefs reachable under some policy, per time step 0..T.

    Yields (t, BeliefState) pairs; used by the theorem-level verifications
    that quantify over every reachable belief.
    """
    table = BeliefTable(spec, max_age=T)
    layer = {table.initial_ids()}
    total = 1
    for t in range(T + 1):
        for ids in sorted(layer):
            yield t, table.belief(ids)
        if t == T:
            break
        nxt = set()
        for ids in layer:
            for channel in range(1, spec.n_channels + 1):
                probs = table.obs_probs(ids, channel)
                for i in range(spec.k):
                    if probs[i] > 0.0:
                        nxt.add(table.successor(ids, channel, i + 1))
        total += len(nxt)
        if total > budget:
            raise NodeBudgetExceeded(f"reachable beliefs exceed budget {budget}")
        layer = nxt


# ---------------------------------------------------------------------------
# Monte Carlo simulator


def simulate(spec: ProblemSpec, policy, T: int, replications: int, seed: int) -> SimulationReport:
    """Sample hidden channel trajectories and accrue the policy's rewards.

    All replications run vectorized off a single seeded generator; slicing
    by replication index plays the role of per-replication streams, so
    results are reproducible bit-for-bit given (spec, policy, T,
    replications, seed).
    """
    if replications < 1:
        raise ValueError("need replications >= 1")
    if T < 0:
        raise ValueError("horizon T must be >= 0")
    table = BeliefTable(spec, max_age=T + 1)
    n, k = spec.n_channels, spec.k
    P = spec.transition.matrix
    R = spec.rewards.values
    beta = spec.discount
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    cum = np.cumsum(P, axis=1)
    init_cum = np.stack([np.cumsum(p.probs) for p in spec.initial_pmfs])

    u0 = rng.random((replications, n))
    true = (u0[:, :, None] >= init_cum[None, :, :]).sum(axis=2)
    true = np.minimum(true, k - 1)

    ids = np.tile([t.initial_id for t in table.channels], (replications, 1)).astype(np.int64)
    aged = [t.aged for t in table.channels]
    obs0 = np.stack([t.obs0 for t in table.channels])
    tails = [t.tails for t in table.channels]
    nus = [t.nu for t in table.channels]

    kind, detail = _simulation_policy_kind(policy, spec)
    perm = None
    if kind == "ordering":
        base = np.array(detail.initial.order, dtype=np.int64) - 1
        perm = np.tile(base, (replications, 1))

    totals = np.zeros(replications)
    disc = 1.0
    reps = np.arange(replications)
    for t in range(T + 1):
        if kind == "myopic":
            stacked = np.stack([tails[c][ids[:, c]] for c in range(n)], axis=1)
            best = stacked.max(axis=1, keepdims=True)
            ok = np.all(stacked >= best - _DOM_TOL, axis=2)
            if not ok.any(axis=1).all():
                raise IncomparableBeliefs("incomparable beliefs in a simulated trajectory")
            exact = np.all(stacked >= best, axis=2)
            actions = np.where(exact.any(axis=1), exact.argmax(axis=1), ok.argmax(axis=1))
        elif kind == "gittins":
            stacked = np.stack([nus[c][ids[:, c]] for c in range(n)], axis=1)
            actions = stacked.argmax(axis=1)
        elif kind == "fixed":
            actions = np.full(replications, detail - 1, dtype=np.int64)
        elif kind == "round_robin":
            actions = np.full(replications, (detail - 1 + t) % n, dtype=np.int64)
        elif kind == "ordering":
            actions = perm[:, -1]
        elif kind == "random":
            actions = rng.integers(0, n, size=replications)
        else:  # pragma: no cover
            raise TypeError(f"unsupported simulation policy kind {kind}")

        y = true[reps, actions]
        totals += disc * R[y]

        nxt_ids = np.stack([aged[c][ids[:, c]] for c in range(n)], axis=1)
        nxt_ids[reps, actions] = obs0[actions, y]
        ids = nxt_ids
        if kind == "ordering":
            rotate = y < (spec.threshold - 1)
            if rotate.any():
                perm[rotate] = np.roll(perm[rotate], 1, axis=1)

        if t < T:
            u = rng.random((replications, n))
            true = (u[:, :, None] >= cum[true]).sum(axis=2)
            true = np.minimum(true, k - 1)
            disc *= beta

    mean = float(totals.mean())
    se = float(totals.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
    name = getattr(policy, "name", str(policy))
    return SimulationReport(mean=mean, std_error=se, replications=replications,
                            seed=seed, policy_name=name, totals=totals)


def _simulation_policy_kind(policy, spec: ProblemSpec):
    if isinstance(policy, MyopicPolicy):
        return "myopic", None
    if isinstance(policy, GittinsPolicy):
        return "gittins", None
    if isinstance(policy, FixedPolicy):
        return "fixed", policy.channel
    if isinstance(policy, RoundRobinPolicy):
        return "round_robin", policy.start_channel
    if isinstance(policy, OrderingPolicy):
        return "ordering", policy
    if isinstance(policy, RandomPolicy):
        return "random", None
    raise TypeError(
        f"simulate supports the built-in policy kinds, got {type(policy).__name__}")
