"""PMF algebra for multi-state channel beliefs.

Probability row vectors over K channel states, stochastic dominance,
belief evolution under a shared transition matrix, and the split of a
PMF around a threshold state used by the ordering-value bounds.

State indices are 1-based throughout the public API (states run 1..K,
channels 1..N); arrays are stored 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Absolute tolerances. Dominance works on tail sums; the gate is fixed so
# the relation is deterministic across platforms.
SUM_ATOL = 1e-9
NEG_ATOL = 1e-9
CLAMP_ATOL = 1e-12
DOMINANCE_ATOL = 1e-9
RECON_ATOL = 1e-12


class InvalidDistribution(ValueError):
    """Raised when a vector cannot be interpreted as a PMF."""


class DimensionMismatch(ValueError):
    """Raised when operands disagree on the number of states K."""


def _as_prob_array(values: Iterable[float], *, normalize: bool, what: str) -> np.ndarray:
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                     dtype=np.float64).copy()
    if arr.ndim != 1:
        raise InvalidDistribution(f"{what}: expected a 1-d vector, got shape {arr.shape}")
    if arr.size < 2:
        raise InvalidDistribution(f"{what}: need K >= 2 states, got {arr.size}")
    if np.any(arr < -NEG_ATOL):
        bad = float(arr.min())
        raise InvalidDistribution(f"{what}: entry {bad} is negative beyond tolerance {NEG_ATOL}")
    # matrix powers can leave tiny negatives; clamp them before the mass check
    arr[arr < 0.0] = 0.0
    total = float(arr.sum())
    if normalize:
        if not 0.5 <= total <= 1.5:
            raise InvalidDistribution(f"{what}: mass {total} too far from 1 to normalize")
    elif abs(total - 1.0) > SUM_ATOL:
        raise InvalidDistribution(f"{what}: mass {total} differs from 1 beyond tolerance {SUM_ATOL}")
    if total != 1.0:
        arr /= total
    arr.flags.writeable = False
    return arr


class Pmf:
    """Immutable probability mass function over K channel states.

    Entries are clamped at ``CLAMP_ATOL`` (genuine negatives beyond
    ``NEG_ATOL`` are rejected) and rescaled to unit mass.  Tail sums are
    precomputed since every dominance query reads them.
    """

    __slots__ = ("probs", "_tails")

    def __init__(self, probs: Iterable[float], *, normalize: bool = False):
        self.probs = _as_prob_array(probs, normalize=normalize, what="Pmf")
        tails = np.cumsum(self.probs[::-1])[::-1].copy()
        tails.flags.writeable = False
        self._tails = tails

    @property
    def k(self) -> int:
        return int(self.probs.size)

    @classmethod
    def basis(cls, i: int, k: int) -> "Pmf":
        """Degenerate PMF e_i with all mass on state i (1-based)."""
        if not 1 <= i <= k:
            raise IndexError(f"basis state {i} out of range 1..{k}")
        v = np.zeros(k)
        v[i - 1] = 1.0
        return cls(v)

    @classmethod
    def uniform(cls, k: int) -> "Pmf":
        return cls(np.full(k, 1.0 / k))

    def prob(self, i: int) -> float:
        """P(state = i), 1-based."""
        if not 1 <= i <= self.k:
            raise IndexError(f"state {i} out of range 1..{self.k}")
        return float(self.probs[i - 1])

    def tail(self, i: int) -> float:
        """P(state >= i), 1-based."""
        if not 1 <= i <= self.k:
            raise IndexError(f"state {i} out of range 1..{self.k}")
        return float(self._tails[i - 1])

    @property
    def tails(self) -> np.ndarray:
        """Vector of tail sums, tails[j] = P(state >= j+1)."""
        return self._tails

    def expect(self, values: Sequence[float] | np.ndarray) -> float:
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (self.k,):
            raise DimensionMismatch(f"expect: values shape {v.shape} != ({self.k},)")
        return float(self.probs @ v)

    def dominates(self, other: "Pmf", *, tol: float = DOMINANCE_ATOL) -> bool:
        return dominates(self, other, tol=tol)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Pmf) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        body = ", ".join(f"{p:.6g}" for p in self.probs)
        return f"Pmf([{body}])"


def dominates(x: Pmf, y: Pmf, *, tol: float = DOMINANCE_ATOL) -> bool:
    """First-order stochastic dominance x >=st y.

    True iff every upper-tail sum of x weakly exceeds that of y, within an
    absolute tolerance on each tail.  Tails start at state 2: the full-mass
    tail is always equal.
    """
    if x.k != y.k:
        raise DimensionMismatch(f"dominates: {x.k} vs {y.k} states")
    return bool(np.all(x.tails[1:] >= y.tails[1:] - tol))


def compare(x: Pmf, y: Pmf, *, tol: float = DOMINANCE_ATOL) -> str:
    """Classify the pair under dominance: 'ge', 'le', 'eq', or 'incomparable'."""
    ge = dominates(x, y, tol=tol)
    le = dominates(y, x, tol=tol)
    if ge and le:
        return "eq"
    if ge:
        return "ge"
    if le:
        return "le"
    return "incomparable"


class TransitionMatrix:
    """Row-stochastic K x K matrix; row i is the next-state PMF from state i."""

    __slots__ = ("matrix",)

    def __init__(self, rows: Iterable[Iterable[float]] | np.ndarray, *, normalize: bool = False):
        raw = np.asarray(rows, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise InvalidDistribution(f"TransitionMatrix: expected square matrix, got {raw.shape}")
        validated = np.stack([
            _as_prob_array(raw[i], normalize=normalize, what=f"TransitionMatrix row {i + 1}")
            for i in range(raw.shape[0])
        ])
        validated.flags.writeable = False
        self.matrix = validated

    @property
    def k(self) -> int:
        return int(self.matrix.shape[0])

    def row(self, i: int) -> Pmf:
        """Row P_i as a PMF, 1-based."""
        if not 1 <= i <= self.k:
            raise IndexError(f"row {i} out of range 1..{self.k}")
        return Pmf(self.matrix[i - 1])

    def rows(self) -> list[Pmf]:
        return [self.row(i) for i in range(1, self.k + 1)]

    def power(self, t: int) -> np.ndarray:
        """P^t by binary exponentiation (deterministic, no eigendecomposition)."""
        if t < 0:
            raise ValueError("power: t must be >= 0")
        result = np.eye(self.k)
        base = self.matrix.copy()
        while t:
            if t & 1:
                result = result @ base
            t >>= 1
            if t:
                base = base @ base
        return result

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TransitionMatrix) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())

    def __repr__(self) -> str:
        return f"TransitionMatrix(K={self.k})"


class RewardVector:
    """Per-state rewards, required nondecreasing in the state index."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable[float]):
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                         dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidDistribution(f"RewardVector: expected >= 2 entries, got shape {arr.shape}")
        if np.any(np.diff(arr) < 0):
            raise InvalidDistribution("RewardVector: rewards must be nondecreasing in the state index")
        arr.flags.writeable = False
        self.values = arr

    @property
    def k(self) -> int:
        return int(self.values.size)

    def __getitem__(self, i: int) -> float:
        """Reward R_i, 1-based."""
        if not 1 <= i <= self.k:
            raise IndexError(f"state {i} out of range 1..{self.k}")
        return float(self.values[i - 1])

    def __repr__(self) -> str:
        return f"RewardVector({list(self.values)})"


@dataclass(frozen=True)
class ProblemSpec:
    """A full sensing instance: N channels over a shared K-state chain."""

    n_channels: int
    transition: TransitionMatrix
    rewards: RewardVector
    initial_pmfs: tuple[Pmf, ...]
    threshold: int
    discount: float
    label: str = ""

    def __post_init__(self):
        k = self.transition.k
        if self.rewards.k != k:
            raise DimensionMismatch(f"rewards have {self.rewards.k} entries for K={k}")
        if self.n_channels < 1:
            raise InvalidDistribution(f"need N >= 1 channels, got {self.n_channels}")
        if len(self.initial_pmfs) != self.n_channels:
            raise DimensionMismatch(
                f"{len(self.initial_pmfs)} initial PMFs for N={self.n_channels} channels")
        for n, pmf in enumerate(self.initial_pmfs, start=1):
            if pmf.k != k:
                raise DimensionMismatch(f"initial PMF for channel {n} has {pmf.k} states, K={k}")
        if not 2 <= self.threshold <= k:
            raise InvalidDistribution(f"threshold L={self.threshold} outside 2..{k}")
        if not 0.0 < self.discount <= 1.0:
            raise InvalidDistribution(f"discount {self.discount} outside (0, 1]")

    @property
    def k(self) -> int:
        return self.transition.k

    @property
    def n(self) -> int:
        return self.n_channels


def evolve(x: Pmf, transition: TransitionMatrix, steps: int = 1) -> Pmf:
    """Belief after `steps` unobserved transitions: x P^steps.

    Applied one step at a time so repeated evolution and a single call with
    the summed step count agree at float precision scale.
    """
    if steps < 0:
        raise ValueError("evolve: steps must be >= 0")
    if x.k != transition.k:
        raise DimensionMismatch(f"evolve: PMF has {x.k} states, matrix has {transition.k}")
    v = x.probs
    for _ in range(steps):
        v = v @ transition.matrix
    return Pmf(v) if steps else x


def observe_update(transition: TransitionMatrix, i: int) -> Pmf:
    """Belief of the sensed channel after observing state i: row P_i."""
    return transition.row(i)


def decompose(x: Pmf, threshold: int) -> tuple[Pmf, Pmf, float]:
    """Split x around the threshold state L.

    Returns (under, over, mass_hi) where `under` collapses all mass from
    state L-1 upward onto state L-1, `over` collapses all mass up to state L
    onto state L, and mass_hi is the total mass on states >= L.  The parts
    satisfy  under + over - e_L + mass_hi * (e_L - e_{L-1}) = x  entrywise.
    """
    k = x.k
    if not 2 <= threshold <= k:
        raise ValueError(f"decompose: threshold L={threshold} outside 2..{k}")
    p = x.probs
    li = threshold - 1  # 0-based position of state L
    under = np.zeros(k)
    under[: li - 1] = p[: li - 1]
    under[li - 1] = p[li - 1 :].sum()
    over = np.zeros(k)
    over[li] = p[: li + 1].sum()
    over[li + 1 :] = p[li + 1 :]
    mass_hi = float(p[li:].sum())
    return Pmf(under), Pmf(over), mass_hi


def decompose_reconstruct(under: Pmf, over: Pmf, mass_hi: float, threshold: int) -> np.ndarray:
    """Rebuild the original vector from its threshold split."""
    k = under.k
    e_l = np.zeros(k)
    e_l[threshold - 1] = 1.0
    e_lm1 = np.zeros(k)
    e_lm1[threshold - 2] = 1.0
    return under.probs + over.probs - e_l + mass_hi * (e_l - e_lm1)


@dataclass(frozen=True)
class Provenance:
    """Origin of a channel belief: an initial PMF or an observed state, aged.

    kind 'init' with index n means (initial PMF of channel n) P^steps;
    kind 'obs' with index i means P_i P^steps.
    """

    kind: str
    index: int
    steps: int

    def __post_init__(self):
        if self.kind not in ("init", "obs"):
            raise ValueError(f"provenance kind {self.kind!r} must be 'init' or 'obs'")
        if self.index < 1:
            raise ValueError("provenance index is 1-based")
        if self.steps < 0:
            raise ValueError("provenance steps must be >= 0")

    @classmethod
    def initial(cls, channel: int, steps: int = 0) -> "Provenance":
        return cls("init", channel, steps)

    @classmethod
    def observed(cls, state: int, steps: int = 0) -> "Provenance":
        return cls("obs", state, steps)

    def aged(self, by: int = 1) -> "Provenance":
        return Provenance(self.kind, self.index, self.steps + by)

    def materialize(self, spec: ProblemSpec) -> Pmf:
        if self.kind == "init":
            if self.index > spec.n_channels:
                raise IndexError(f"initial-provenance channel {self.index} > N={spec.n_channels}")
            base = spec.initial_pmfs[self.index - 1]
        else:
            base = spec.transition.row(self.index)
        return evolve(base, spec.transition, self.steps)


@dataclass(frozen=True)
class BeliefState:
    """Joint belief over all channels plus the provenance that generated it.

    Equality and hashing use provenance only, so memoization in the exact
    solvers never depends on float tolerances.
    """

    pmfs: tuple[Pmf, ...]
    provenance: tuple[Provenance, ...]

    def __post_init__(self):
        if len(self.pmfs) != len(self.provenance):
            raise DimensionMismatch("BeliefState: pmfs and provenance lengths differ")

    @property
    def n(self) -> int:
        return len(self.pmfs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BeliefState) and self.provenance == other.provenance

    def __hash__(self) -> int:
        return hash(self.provenance)


def canonical_belief(spec: ProblemSpec, provenance: Sequence[Provenance]) -> BeliefState:
    """Materialize a BeliefState from per-channel provenance records."""
    if len(provenance) != spec.n_channels:
        raise DimensionMismatch(
            f"{len(provenance)} provenance records for N={spec.n_channels} channels")
    pmfs = tuple(p.materialize(spec) for p in provenance)
    return BeliefState(pmfs=pmfs, provenance=tuple(provenance))


def initial_belief(spec: ProblemSpec) -> BeliefState:
    return canonical_belief(spec, [Provenance.initial(n) for n in range(1, spec.n_channels + 1)])
