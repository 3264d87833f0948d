"""Sufficient-condition checking on the bundled five-state instance.

Four conditions together guarantee that always sensing the stochastically
best channel maximizes expected discounted reward: a dominance chain on
the transition rows (A1), chain-ordered initial beliefs inside the row
hull (A2), one-step evolution pinched around the threshold state (A3),
and reward gaps wide enough to beat the discounted future advantage (A4).
"""

import numpy as np

import chansense as cs

spec = cs.load_builtin("golden_k5")
report = cs.check_conditions(spec)

print(f"A1={report.a1_ok}  A2={report.a2_ok}  A3={report.a3_ok}  A4={report.a4_ok}")

der = report.derived
print("\nderived reward quantities:")
print("  U =", np.round(der.U, 4))
print("  M =", np.round(der.M, 4))
print("  h =", round(der.h, 4))

print("\nworst slack per inequality (negative would mean violated):")
for key in sorted(report.margins):
    print(f"  {key:32s} {report.margins[key]: .4f}")

# The same checker on a two-state instance reduces to three scalar tests
two = cs.load_builtin("two_state")
reduced = cs.two_state_reduce(two)
print("\ntwo-state reduction:")
print("  p12, p22:", reduced.p12, reduced.p22)
print("  positively correlated:", reduced.positively_correlated)
print("  initial beliefs in [p12, p22]:", reduced.initial_in_band)
print("  initial beliefs sorted:", reduced.initial_chain)
print("  agrees with the full checker:", reduced.agrees_with_full_check)

# Breaking the dominance chain flips A1 (and the reduction agrees)
flipped = cs.ProblemSpec(
    n_channels=2,
    transition=cs.TransitionMatrix([[0.3, 0.7], [0.7, 0.3]]),
    rewards=cs.RewardVector([0.0, 1.0]),
    initial_pmfs=(cs.Pmf([0.5, 0.5]), cs.Pmf([0.5, 0.5])),
    threshold=2,
    discount=0.9,
)
print("\nnegatively correlated two-state chain:")
print("  full checker:", cs.check_conditions(flipped).all_ok)
print("  reduced:", cs.two_state_reduce(flipped).ok)
