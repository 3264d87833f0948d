"""Command-line surface: `sense check|eval|simulate|gittins|verify`.

JSON goes to stdout; CSV tables go to `--out`/`--csv` paths with a sidecar
`<path>.manifest.json`.  Every run embeds a manifest (command, resolved
config, seed, version, timestamp, input hash).  Timestamps honor
SOURCE_DATE_EPOCH so identical runs can be compared byte for byte.

Exit codes: 0 success/pass, 1 semantic fail, 2 parse error, 3 degenerate
math, 4 node budget exceeded, 5 incomparable beliefs, 6 scope assertion,
7 sampling exhausted.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .conditions import DegenerateComputation, check_conditions
from .core import InvalidDistribution, Pmf, initial_belief
from .evaluation import (
    NodeBudgetExceeded,
    optimal_value_dp,
    policy_value_dp,
    reachable_beliefs,
    simulate,
)
from .instances import InstanceParseError, load_instance
from .policies import (
    ChannelOrdering,
    FixedPolicy,
    GittinsPolicy,
    GittinsDomainError,
    IncomparableBeliefs,
    MyopicPolicy,
    OrderingPolicy,
    RandomPolicy,
    RoundRobinPolicy,
    gittins_band_ok,
    gittins_index,
    gittins_action,
    myopic_action,
)
from .verifier import RejectionExhausted, VerifyConfig, random_spec, verify_all

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_BUDGET = 4
EXIT_INCOMPARABLE = 5
EXIT_SCOPE = 6
EXIT_EXHAUSTED = 7


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        dt = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        dt = datetime.now(tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def _manifest(command: str, config: dict, seed: int | None, instance_path: str | None) -> dict:
    digest = None
    if instance_path is not None:
        with open(instance_path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "timestamp": _timestamp(),
        "input_sha256": digest,
    }


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _write_csv(path: str, header: list[str], rows: list[list], manifest: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else ("" if v is None else v)
                             for v in row])
    with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True)
        fh.write("\n")


def _load(path: str):
    return load_instance(path)


def _apply_beta(spec, beta):
    if beta is None:
        return spec
    if not 0.0 < beta <= 1.0:
        raise InstanceParseError(f"--beta {beta} outside (0, 1]")
    return replace(spec, discount=float(beta))


def _make_policy(name: str, spec, seed: int):
    if name == "myopic":
        return MyopicPolicy()
    if name == "gittins":
        return GittinsPolicy(spec)
    if name == "random":
        return RandomPolicy(seed)
    if name == "round_robin":
        return RoundRobinPolicy()
    if name.startswith("fixed:"):
        return FixedPolicy(int(name.split(":", 1)[1]))
    if name.startswith("ordering:"):
        perm = tuple(int(x) for x in name.split(":", 1)[1].split(","))
        return OrderingPolicy(ChannelOrdering(perm), spec.threshold)
    raise InstanceParseError(
        f"unknown policy {name!r}; expected myopic|gittins|ordering:<perm>|fixed:<n>|random|round_robin")


# ---------------------------------------------------------------------------
# Commands


def cmd_check(args) -> int:
    spec = _load(args.instance)
    report = check_conditions(spec)
    manifest = _manifest("check", {"instance": args.instance, "csv": args.csv,
                                   "pretty": args.pretty}, None, args.instance)
    doc = {"manifest": manifest, "report": report.to_dict()}
    if args.pretty:
        _print_pretty_check(report)
    else:
        _emit(doc)
    if args.csv:
        keys = sorted(report.margins)
        _write_csv(args.csv, keys, [[report.margins[k] for k in keys]], manifest)
    if report.degenerate is not None:
        return EXIT_DEGENERATE
    return EXIT_OK if report.all_ok else EXIT_FAIL


def _print_pretty_check(report) -> None:
    print(f"A1 {'pass' if report.a1_ok else 'FAIL'}   A2 {'pass' if report.a2_ok else 'FAIL'}   "
          f"A3 {'pass' if report.a3_ok else 'FAIL'}   A4 {'pass' if report.a4_ok else 'FAIL'}")
    if report.derived is not None:
        print("U = [" + "  ".join(f"{u:.4f}" for u in report.derived.U) + "]")
        print("M = [" + "  ".join(f"{m:.4f}" for m in report.derived.M) + "]")
        print(f"h = {report.derived.h:.4f}")
    for key in sorted(report.margins):
        print(f"{key:32s} {report.margins[key]: .4f}")


def cmd_eval(args) -> int:
    spec = _apply_beta(_load(args.instance), args.beta)
    policy = _make_policy(args.policy, spec, args.seed)
    result = policy_value_dp(spec, args.horizon, policy, budget=args.budget)
    optimal = gap = None
    if args.optimal:
        opt = optimal_value_dp(spec, args.horizon, budget=args.budget)
        optimal = opt.value
        gap = optimal - result.value
    config = {"instance": args.instance, "policy": args.policy, "horizon": args.horizon,
              "beta": spec.discount, "optimal": args.optimal, "budget": args.budget}
    manifest = _manifest("eval", config, args.seed, args.instance)
    doc = {
        "manifest": manifest,
        "policy": args.policy,
        "horizon": args.horizon,
        "beta": spec.discount,
        "value": result.value,
        "stats": result.stats,
    }
    if optimal is not None:
        doc["optimal_value"] = optimal
        doc["gap"] = gap
    _emit(doc)
    if args.csv:
        _write_csv(args.csv,
                   ["policy", "horizon", "beta", "value", "optimal_value", "gap"],
                   [[args.policy, args.horizon, spec.discount, result.value, optimal, gap]],
                   manifest)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _apply_beta(_load(args.instance), args.beta)
    policy = _make_policy(args.policy, spec, args.seed)
    report = simulate(spec, policy, args.horizon, args.reps, args.seed)
    config = {"instance": args.instance, "policy": args.policy, "horizon": args.horizon,
              "reps": args.reps, "beta": spec.discount}
    manifest = _manifest("simulate", config, args.seed, args.instance)
    doc = {"manifest": manifest, **report.to_dict()}
    _emit(doc)
    if args.out:
        rows = [[i, float(v)] for i, v in enumerate(report.totals)]
        _write_csv(args.out, ["replication", "total_discounted_reward"], rows, manifest)
    return EXIT_OK


def cmd_gittins(args) -> int:
    spec = _apply_beta(_load(args.instance), args.beta)
    if spec.discount >= 1.0:
        print("gittins requires a discount < 1; pass --beta", file=sys.stderr)
        return EXIT_DEGENERATE
    if args.assert_coincide and spec.threshold != spec.k:
        print(f"threshold L={spec.threshold} != K={spec.k}: the index rule is only known "
              "to match the myopic rule for L = K", file=sys.stderr)
        return EXIT_SCOPE
    config = {"instance": args.instance, "beta": spec.discount, "grid": args.grid,
              "trace": args.trace, "assert_coincide": args.assert_coincide}
    manifest = _manifest("gittins", config, args.seed, args.instance)

    if args.trace is None:
        belief = initial_belief(spec)
        channels = []
        for n, pmf in enumerate(belief.pmfs, start=1):
            channels.append({
                "channel": n,
                "index": gittins_index(pmf, spec),
                "in_band": gittins_band_ok(pmf, spec),
            })
        basis = [{"state": i, "index": gittins_index(spec.transition.row(i), spec)}
                 for i in range(1, spec.k + 1)]
        doc = {"manifest": manifest, "channels": channels, "row_indices": basis}
        _emit(doc)
        if args.csv:
            rows = [[c["channel"], c["index"], c["in_band"]] for c in channels]
            _write_csv(args.csv, ["channel", "gittins_index", "in_band"], rows, manifest)
        return EXIT_OK

    per_step: dict[int, list[int]] = {}
    for t, belief in reachable_beliefs(spec, args.trace, budget=args.budget):
        my = myopic_action(belief).channel
        gi = gittins_action(belief, spec).channel
        agree, total = per_step.get(t, [0, 0])
        per_step[t] = [agree + (my == gi), total + 1]
    # decisions at step 0 sit outside the coincidence guarantee
    steps = [{"t": t, "agree": per_step[t][0], "beliefs": per_step[t][1],
              "rate": per_step[t][0] / per_step[t][1],
              "outside_guarantee": t == 0} for t in sorted(per_step)]
    later = [s for s in steps if s["t"] >= 1]
    agreement = (sum(s["agree"] for s in later) / sum(s["beliefs"] for s in later)
                 if later else 1.0)
    doc = {"manifest": manifest, "steps": steps,
           "agreement_after_step0": agreement,
           "step0_excluded": True}
    _emit(doc)
    if args.csv:
        _write_csv(args.csv, ["t", "agree", "beliefs", "rate"],
                   [[s["t"], s["agree"], s["beliefs"], float(s["rate"])] for s in steps],
                   manifest)
    if args.assert_coincide and agreement < 1.0:
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.random is not None:
        k, n, el, beta, seed, attempts = args.random
        spec = random_spec(int(k), int(n), int(el), float(beta), int(seed),
                           constraint="try_A1toA4", attempts=int(attempts))
        instance_path = None
        config = {"random": list(args.random), "depth": args.depth}
    else:
        if args.instance is None:
            print("verify needs an instance path or --random", file=sys.stderr)
            return EXIT_PARSE
        spec = _load(args.instance)
        instance_path = args.instance
        config = {"instance": args.instance, "depth": args.depth}
    vcfg = VerifyConfig(seed=args.seed) if args.depth == "full" else VerifyConfig.quick(args.seed)
    reports = verify_all(spec, vcfg)
    manifest = _manifest("verify", config, args.seed, instance_path)
    failures = sum(len(r.failures) for r in reports)
    doc = {
        "manifest": manifest,
        "label": spec.label,
        "checks": [r.to_dict() for r in reports],
        "failures": failures,
        "all_passed": failures == 0,
    }
    _emit(doc)
    return EXIT_OK if failures == 0 else EXIT_FAIL


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sense",
        description="Channel sensing policies over multi-state Markov channels: "
                    "condition checks, exact policy evaluation, simulation, "
                    "Gittins-index comparisons, and property verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="evaluate the sufficient conditions on an instance")
    p.add_argument("instance")
    p.add_argument("--csv", help="write a one-row margins table to this path")
    p.add_argument("--pretty", action="store_true", help="human table at 4 decimals")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="exact policy value by dynamic programming")
    p.add_argument("instance")
    p.add_argument("--policy", default="myopic")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--beta", type=float, default=None, help="override the discount")
    p.add_argument("--optimal", action="store_true", help="also compute the optimal value")
    p.add_argument("--csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10_000_000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="Monte Carlo rollouts of a policy")
    p.add_argument("instance")
    p.add_argument("--policy", default="myopic")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--out", help="write per-replication totals to this CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gittins", help="Gittins indices and myopic-agreement traces")
    p.add_argument("instance")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--grid", action="store_true",
                   help="emit indices for each channel and each transition row (default)")
    p.add_argument("--trace", type=int, default=None,
                   help="compare myopic and index-rule actions over this horizon")
    p.add_argument("--assert-coincide", action="store_true",
                   help="fail unless the rules agree (threshold must equal K)")
    p.add_argument("--csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10_000_000)
    p.set_defaults(func=cmd_gittins)

    p = sub.add_parser("verify", help="run the property and theorem check suite")
    p.add_argument("instance", nargs="?")
    p.add_argument("--random", nargs=6, metavar=("K", "N", "L", "BETA", "SEED", "ATTEMPTS"),
                   help="verify a randomly generated condition-satisfying instance")
    p.add_argument("--depth", choices=["quick", "full"], default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegenerateComputation, GittinsDomainError, InvalidDistribution) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NodeBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except IncomparableBeliefs as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPARABLE
    except RejectionExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED


if __name__ == "__main__":
    sys.exit(main())
