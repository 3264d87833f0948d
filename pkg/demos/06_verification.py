"""One-shot verification runs: property batteries on any instance.

verify_all bundles the distributional invariants (P1-P4), the
ordering-value bounds (P5-P9), the value-function linearity (L1), and the
theorem-level oracle equivalences (T1-T4) into a deterministic report.
Checks whose hypotheses fail on the instance are skipped, never passed.
"""

import chansense as cs

golden = cs.load_builtin("golden_k5")
print("bundled five-state instance (discount 1, so index-rule checks skip):")
for r in cs.verify_all(golden, cs.VerifyConfig.quick(seed=0)):
    status = "SKIP" if r.skipped else ("pass" if r.passed else "FAIL")
    note = f"  ({r.skip_reason})" if r.skipped else f"  [{r.samples} samples]"
    print(f"  {r.check:3s} {status}{note}")

# a generated discounted instance exercises everything, including the
# index-rule coincidence checks
spec = cs.random_spec(4, 3, 4, 0.9, seed=11, constraint="try_A1toA4")
print(f"\ngenerated instance {spec.label} (K=4, threshold=K, discount 0.9):")
for r in cs.verify_all(spec, cs.VerifyConfig.quick(seed=0)):
    status = "SKIP" if r.skipped else ("pass" if r.passed else "FAIL")
    print(f"  {r.check:3s} {status}")

# violated hypotheses gate the dependent checks
broken = cs.ProblemSpec(
    n_channels=2,
    transition=cs.TransitionMatrix([[0.3, 0.7], [0.7, 0.3]]),
    rewards=cs.RewardVector([0.0, 1.0]),
    initial_pmfs=(cs.Pmf([0.5, 0.5]), cs.Pmf([0.5, 0.5])),
    threshold=2,
    discount=0.9,
)
print("\nnegatively correlated chain: dependent checks skip with a reason")
for r in cs.verify_all(broken, cs.VerifyConfig.quick(seed=0)):
    if r.skipped:
        print(f"  {r.check:3s} SKIP  ({r.skip_reason})")

# failure payloads replay bit-exactly
from chansense.verifier import _check_p1  # noqa: E402  (demo of the replay contract)

bad = cs.ProblemSpec(
    n_channels=2,
    transition=cs.TransitionMatrix([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2],
                                    [0.3, 0.3, 0.4]]),
    rewards=cs.RewardVector([0.0, 1.0, 2.0]),
    initial_pmfs=(cs.Pmf([1 / 3] * 3), cs.Pmf([1 / 3] * 3)),
    threshold=2,
    discount=0.9,
)
report = _check_p1(bad, cs.VerifyConfig.quick(seed=0))
payload = report.failures[0]
print(f"\nrecorded order-preservation counterexample margin: {payload['margin']:.6f}")
print("replayed margin matches bit-exactly:",
      cs.replay(bad, payload) == payload["margin"])
