"""Belief algebra tour: PMFs, stochastic dominance, evolution, threshold splits.

Each channel is a hidden K-state Markov chain; what the decision maker
tracks is a PMF over its states.  Sensing a channel reveals its state and
resets the belief to a transition row; leaving a channel alone ages the
belief by one application of the transition matrix.
"""

import numpy as np

import chansense as cs

spec = cs.load_builtin("golden_k5")
P = spec.transition

print("Transition rows (worse to better):")
for i in range(1, spec.k + 1):
    print(f"  P_{i} =", np.round(P.row(i).probs, 4))

# Condition A1 in action: every row dominates the one below it
print("\nRow dominance chain:", all(
    cs.dominates(P.row(i), P.row(i - 1)) for i in range(2, spec.k + 1)))

# Aging a belief: one step from the worst row already climbs above row 4
p1p = cs.evolve(P.row(1), P, 1)
print("\nP_1 after one unobserved step:", np.round(p1p.probs, 4))
print("dominates row 4?", cs.dominates(p1p, P.row(4)))

# Tail sums are what the order compares
print("\ntails(P_1 P) =", np.round(p1p.tails, 4))
print("tails(P_4)   =", np.round(P.row(4).tails, 4))

# Not all PMFs are comparable
x, y = cs.Pmf([0.5, 0.0, 0.5]), cs.Pmf([0.4, 0.3, 0.3])
print("\nIncomparable pair:", cs.compare(x, y))

# Threshold split used by the ordering-value bounds: mass below the
# threshold collapses up, mass above collapses down, and the original
# vector reconstructs exactly
under, over, hi = cs.decompose(P.row(3), spec.threshold)
recon = cs.decompose_reconstruct(under, over, hi, spec.threshold)
print("\nthreshold split of P_3:")
print("  under  =", np.round(under.probs, 4))
print("  over   =", np.round(over.probs, 4))
print("  mass at/above threshold =", round(hi, 4))
print("  reconstruction error =", float(np.abs(recon - P.row(3).probs).max()))

# Beliefs carry provenance so exact solvers can canonicalize them
belief = cs.canonical_belief(spec, [cs.Provenance.observed(1, 1)] + [
    cs.Provenance.initial(n, 1) for n in range(2, spec.n + 1)])
print("\nbelief of a channel observed in state 1 one step ago:")
print("  ", np.round(belief.pmfs[0].probs, 4), "=", belief.provenance[0])
