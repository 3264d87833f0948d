"""Sufficient-condition checking for myopic-policy optimality.

Four conditions are verified for an instance:

  A1  transition rows form a dominance chain P_1 <=st ... <=st P_K;
  A2  every initial belief lies in the convex hull of the rows and the
      initial beliefs themselves form a dominance chain;
  A3  one-step evolution from the extreme rows stays pinched around the
      threshold state: P_1 P >=st P_{L-1} and P_K P <=st P_L;
  A4  reward gaps between adjacent states are wide enough to overcome the
      discounted future advantage of sensing a better channel first,
      expressed through the derived vectors U, M and the scalar bound h.

Every inequality is reported as a signed margin (negative = violated);
the pass gate is margin >= -MARGIN_GATE_ATOL on each.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _opt

from .core import (
    Pmf,
    ProblemSpec,
    TransitionMatrix,
    evolve,
)

MARGIN_GATE_ATOL = 1e-9
RESIDUAL_ATOL = 1e-9
SINGULAR_ATOL = 1e-12


class DegenerateComputation(ArithmeticError):
    """A derived quantity has no stable solution for this instance."""


@dataclass(frozen=True)
class DerivedRewards:
    """The reward-separation quantities entering condition A4."""

    U: np.ndarray
    M: np.ndarray
    h: float


@dataclass
class Violation:
    condition: str
    key: str
    margin: float
    detail: str


@dataclass
class ConditionReport:
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    a4_ok: bool
    margins: dict[str, float]
    failures: list[Violation] = field(default_factory=list)
    derived: DerivedRewards | None = None
    degenerate: str | None = None

    @property
    def all_ok(self) -> bool:
        return self.a1_ok and self.a2_ok and self.a3_ok and self.a4_ok

    def to_dict(self) -> dict:
        out = {
            "a1": self.a1_ok,
            "a2": self.a2_ok,
            "a3": self.a3_ok,
            "a4": self.a4_ok,
            "all": self.all_ok,
            "margins": dict(self.margins),
            "failures": [
                {"condition": v.condition, "key": v.key, "margin": v.margin, "detail": v.detail}
                for v in self.failures
            ],
        }
        if self.derived is not None:
            out["derived"] = {
                "U": [float(u) for u in self.derived.U],
                "M": [float(m) for m in self.derived.M],
                "h": float(self.derived.h),
            }
        if self.degenerate is not None:
            out["degenerate"] = self.degenerate
        return out


def compute_U(spec: ProblemSpec) -> np.ndarray:
    """Solve the self-referential reward vector U.

    U_i = R_i below the threshold; at and above it, U_i = R_i +
    beta (P_i - P_{L-1}) U, a (K-L+1)-dimensional linear system solved by
    direct elimination.  Residuals of the defining equations are verified.
    """
    k, el, beta = spec.k, spec.threshold, spec.discount
    P = spec.transition.matrix
    R = spec.rewards.values
    m = k - el + 1
    diff = P[el - 1 :, :] - P[el - 2, :]  # rows P_L..P_K minus P_{L-1}
    a_mat = np.eye(m) - beta * diff[:, el - 1 :]
    if abs(np.linalg.det(a_mat)) < SINGULAR_ATOL:
        raise DegenerateComputation(
            f"U system is singular (|det|={abs(np.linalg.det(a_mat)):.3e}) "
            f"for beta={beta}, L={el}")
    b = R[el - 1 :] + beta * diff[:, : el - 1] @ R[: el - 1]
    top = np.linalg.solve(a_mat, b)
    U = np.concatenate([R[: el - 1], top])
    residual = np.max(np.abs(U[el - 1 :] - (R[el - 1 :] + beta * diff @ U)))
    if residual > RESIDUAL_ATOL:
        raise DegenerateComputation(f"U solve residual {residual:.3e} exceeds {RESIDUAL_ATOL}")
    return U


def compute_M(spec: ProblemSpec, U: np.ndarray) -> np.ndarray:
    """M = U + beta * (mass of row K at/above the threshold) * (P U)."""
    k, el, beta = spec.k, spec.threshold, spec.discount
    P = spec.transition.matrix
    mass_hi = float(P[k - 1, el - 1 :].sum())
    return U + beta * mass_hi * (P @ U)


def compute_h(spec: ProblemSpec) -> float:
    """Continuation-value bound h for the lift inequality.

    h = (P_K R - beta * sum_{i<L} p_Ki P_i R) / (1 - beta * sum_{i<L} p_Ki).
    Degenerate when the denominator vanishes (beta = 1 with all of row K's
    mass below the threshold).
    """
    k, el, beta = spec.k, spec.threshold, spec.discount
    P = spec.transition.matrix
    R = spec.rewards.values
    mass_lo = float(P[k - 1, : el - 1].sum())
    denom = 1.0 - beta * mass_lo
    if abs(denom) <= SINGULAR_ATOL:
        raise DegenerateComputation(
            f"h denominator 1 - beta*sum_(i<L) p_Ki = {denom:.3e} is degenerate")
    num = float(P[k - 1] @ R) - beta * float(P[k - 1, : el - 1] @ (P[: el - 1] @ R))
    return num / denom


def derived_rewards(spec: ProblemSpec) -> DerivedRewards:
    U = compute_U(spec)
    return DerivedRewards(U=U, M=compute_M(spec, U), h=compute_h(spec))


def hull_membership_margin(pi: Pmf, transition: TransitionMatrix) -> float:
    """Signed margin for pi being a convex combination of the rows of P.

    When the rows are affinely independent the unique weight vector is
    solved directly and the margin is its minimum entry (weights sum to 1
    automatically).  Otherwise an LP minimizes the sup-norm reconstruction
    error s and the margin is -s.  Margin >= -1e-9 counts as membership.
    """
    P = transition.matrix
    k = transition.k
    try:
        cond = np.linalg.cond(P)
    except np.linalg.LinAlgError:
        cond = np.inf
    # direct solve only while its rounding noise stays well under the gate
    if np.isfinite(cond) and cond < 1e5:
        weights = np.linalg.solve(P.T, pi.probs)
        return float(weights.min())
    # rows affinely dependent: fall back to an LP feasibility check
    # variables: x (K weights), s (sup-norm error); minimize s
    c = np.zeros(k + 1)
    c[-1] = 1.0
    a_ub = np.zeros((2 * k, k + 1))
    b_ub = np.zeros(2 * k)
    a_ub[:k, :k] = P.T
    a_ub[:k, -1] = -1.0
    b_ub[:k] = pi.probs
    a_ub[k:, :k] = -P.T
    a_ub[k:, -1] = -1.0
    b_ub[k:] = -pi.probs
    a_eq = np.zeros((1, k + 1))
    a_eq[0, :k] = 1.0
    res = _opt.linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                       bounds=[(0, None)] * k + [(0, None)], method="highs")
    if not res.success:
        return -np.inf
    return -float(res.fun)


def _chain_margin(pmfs: list[Pmf]) -> tuple[float, int]:
    """Worst tail slack over consecutive dominance requirements x_{j+1} >=st x_j."""
    worst = np.inf
    worst_at = 0
    for j in range(len(pmfs) - 1):
        slack = float(np.min(pmfs[j + 1].tails[1:] - pmfs[j].tails[1:]))
        if slack < worst:
            worst, worst_at = slack, j + 1
    return (worst if len(pmfs) > 1 else np.inf), worst_at


def check_conditions(spec: ProblemSpec) -> ConditionReport:
    """Evaluate conditions A1-A4 and report per-inequality margins."""
    k, el, beta = spec.k, spec.threshold, spec.discount
    P = spec.transition
    R = spec.rewards.values
    margins: dict[str, float] = {}
    failures: list[Violation] = []

    def gate(condition: str, key: str, margin: float, detail: str) -> bool:
        margins[key] = float(margin)
        ok = margin >= -MARGIN_GATE_ATOL
        if not ok:
            failures.append(Violation(condition, key, float(margin), detail))
        return ok

    rows = P.rows()

    # A1: rows form a dominance chain
    a1_ok = True
    for i in range(2, k + 1):
        slack = float(np.min(rows[i - 1].tails[1:] - rows[i - 2].tails[1:]))
        a1_ok &= gate("A1", f"a1:P{i}>=P{i - 1}", slack,
                      f"row {i} must dominate row {i - 1}")

    # A2: initial beliefs live in the row hull and form a chain
    a2_ok = True
    for n, pi in enumerate(spec.initial_pmfs, start=1):
        margin = hull_membership_margin(pi, P)
        a2_ok &= gate("A2", f"a2:member:{n}", margin,
                      f"initial PMF of channel {n} must be a convex combination of the rows")
    for n in range(2, spec.n_channels + 1):
        lo, hi = spec.initial_pmfs[n - 2], spec.initial_pmfs[n - 1]
        slack = float(np.min(hi.tails[1:] - lo.tails[1:]))
        a2_ok &= gate("A2", f"a2:chain:{n}>={n - 1}", slack,
                      f"initial PMF {n} must dominate initial PMF {n - 1}")

    # A3: one-step evolution pinches around the threshold
    p1p = evolve(rows[0], P, 1)
    pkp = evolve(rows[k - 1], P, 1)
    slack = float(np.min(p1p.tails[1:] - rows[el - 2].tails[1:]))
    a3_ok = gate("A3", f"a3:P1P>=P{el - 1}", slack,
                 f"P_1 P must dominate P_{el - 1}")
    slack = float(np.min(rows[el - 1].tails[1:] - pkp.tails[1:]))
    a3_ok &= gate("A3", f"a3:P{el}>=PKP", slack,
                  f"P_{el} must dominate P_K P")

    # A4: reward gaps dominate the discounted future advantage
    a4_ok = True
    degenerate = None
    derived = None
    try:
        derived = derived_rewards(spec)
    except DegenerateComputation as exc:
        degenerate = str(exc)
        a4_ok = False
        failures.append(Violation("A4", "a4:degenerate", -np.inf, degenerate))
    if derived is not None:
        U, M, h = derived.U, derived.M, derived.h
        Pm = P.matrix
        for i in range(2, k + 1):
            if i == el:
                continue
            d = Pm[i - 1] - Pm[i - 2]
            gap = float(R[i - 1] - R[i - 2])
            dm = beta * float(d @ M)
            du = beta * float(d @ U)
            a4_ok &= gate("A4", f"a4:gap{i}:reward_vs_M", gap - dm,
                          f"R_{i}-R_{i - 1} must cover beta (P_{i}-P_{i - 1}) M")
            a4_ok &= gate("A4", f"a4:gap{i}:M_vs_U", dm - du,
                          f"beta (P_{i}-P_{i - 1}) M must cover the same against U")
            a4_ok &= gate("A4", f"a4:gap{i}:U_nonneg", du,
                          f"beta (P_{i}-P_{i - 1}) U must be nonnegative")
        gap_l = float(R[el - 1] - R[el - 2])
        lift = beta * (h - float(Pm[el - 2] @ R))
        a4_ok &= gate("A4", f"a4:gap{el}:reward_vs_h", gap_l - lift,
                      f"R_{el}-R_{el - 1} must cover beta (h - P_{el - 1} R)")
        a4_ok &= gate("A4", f"a4:gap{el}:lift_nonneg", lift,
                      "beta (h - P_{L-1} R) must be nonnegative")
        if a1_ok:
            a4_ok &= gate("A4", "a4:h_ge_PKR", h - float(Pm[k - 1] @ R),
                          "h must be at least the expected reward from the top row")

    return ConditionReport(a1_ok=bool(a1_ok), a2_ok=bool(a2_ok), a3_ok=bool(a3_ok),
                           a4_ok=bool(a4_ok), margins=margins, failures=failures,
                           derived=derived, degenerate=degenerate)


@dataclass
class TwoStateReport:
    """The K=2 reduction: the full condition set collapses to three checks."""

    p12: float
    p22: float
    initial_up_probs: list[float]
    positively_correlated: bool
    initial_in_band: bool
    initial_chain: bool
    agrees_with_full_check: bool

    @property
    def ok(self) -> bool:
        return self.positively_correlated and self.initial_in_band and self.initial_chain

    def to_dict(self) -> dict:
        return {
            "p12": self.p12,
            "p22": self.p22,
            "initial_up_probs": list(self.initial_up_probs),
            "positively_correlated": self.positively_correlated,
            "initial_in_band": self.initial_in_band,
            "initial_chain": self.initial_chain,
            "ok": self.ok,
            "agrees_with_full_check": self.agrees_with_full_check,
        }


def two_state_reduce(spec: ProblemSpec) -> TwoStateReport:
    """Reduced condition set for two-state channels.

    Requires p_22 >= p_12 (positive correlation), every initial up-probability
    inside [p_12, p_22], and the initial up-probabilities nondecreasing.
    Uses the same -1e-9 gates as the full checker and records whether the
    two verdicts agree on this instance.
    """
    if spec.k != 2:
        raise ValueError(f"two_state_reduce requires K=2, got K={spec.k}")
    p12 = float(spec.transition.matrix[0, 1])
    p22 = float(spec.transition.matrix[1, 1])
    ups = [float(pi.probs[1]) for pi in spec.initial_pmfs]
    tol = MARGIN_GATE_ATOL
    positively_correlated = p22 >= p12 - tol
    initial_in_band = all(p12 - tol <= p <= p22 + tol for p in ups)
    initial_chain = all(ups[j + 1] >= ups[j] - tol for j in range(len(ups) - 1))
    reduced_ok = positively_correlated and initial_in_band and initial_chain
    full = check_conditions(spec)
    return TwoStateReport(
        p12=p12,
        p22=p22,
        initial_up_probs=ups,
        positively_correlated=positively_correlated,
        initial_in_band=initial_in_band,
        initial_chain=initial_chain,
        agrees_with_full_check=(reduced_ok == full.all_ok),
    )
