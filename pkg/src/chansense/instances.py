"""Instance files: a JSON schema mapping onto ProblemSpec.

Schema (all keys required unless noted):

    {
      "label":        optional string,
      "n_channels":   int N >= 1,
      "n_states":     int K >= 2,
      "threshold_L":  int in 2..K,
      "discount":     float in (0, 1],
      "transition":   K x K array, rows sum to 1 within 1e-3,
      "rewards":      length-K nondecreasing array,
      "initial_pmfs": N x K array, rows sum to 1 within 1e-3
    }

Probability rows are renormalized exactly on load, so instances published
with rounded decimals remain usable; parse failures name the offending
field path.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .core import (
    InvalidDistribution,
    Pmf,
    ProblemSpec,
    RewardVector,
    TransitionMatrix,
)

ROW_SUM_TOL = 1e-3


class InstanceParseError(ValueError):
    """Instance file rejected; the message carries the field path."""


def _require(doc: dict, key: str, types, path: str = ""):
    where = f"{path}{key}"
    if key not in doc:
        raise InstanceParseError(f"{where}: missing required field")
    value = doc[key]
    if not isinstance(value, types):
        raise InstanceParseError(
            f"{where}: expected {getattr(types, '__name__', types)}, got {type(value).__name__}")
    return value


def _prob_row(raw, k: int, where: str) -> Pmf:
    if not isinstance(raw, (list, tuple)) or len(raw) != k:
        raise InstanceParseError(f"{where}: expected a length-{k} array")
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InstanceParseError(f"{where}: non-numeric entry ({exc})") from exc
    total = float(arr.sum())
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise InstanceParseError(
            f"{where}: row sums to {total}, expected 1 within {ROW_SUM_TOL}")
    try:
        return Pmf(arr, normalize=True)
    except InvalidDistribution as exc:
        raise InstanceParseError(f"{where}: {exc}") from exc


def spec_from_dict(doc: dict) -> ProblemSpec:
    if not isinstance(doc, dict):
        raise InstanceParseError("top level: expected a JSON object")
    n = _require(doc, "n_channels", int)
    k = _require(doc, "n_states", int)
    el = _require(doc, "threshold_L", int)
    beta = _require(doc, "discount", (int, float))
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise InstanceParseError("label: expected a string")
    if k < 2:
        raise InstanceParseError(f"n_states: need K >= 2, got {k}")
    if n < 1:
        raise InstanceParseError(f"n_channels: need N >= 1, got {n}")

    transition_raw = _require(doc, "transition", list)
    if len(transition_raw) != k:
        raise InstanceParseError(f"transition: expected {k} rows, got {len(transition_raw)}")
    rows = [_prob_row(transition_raw[i], k, f"transition[{i}]") for i in range(k)]
    transition = TransitionMatrix(np.stack([r.probs for r in rows]))

    rewards_raw = _require(doc, "rewards", list)
    if len(rewards_raw) != k:
        raise InstanceParseError(f"rewards: expected {k} entries, got {len(rewards_raw)}")
    try:
        rewards = RewardVector(np.asarray(rewards_raw, dtype=np.float64))
    except (InvalidDistribution, TypeError, ValueError) as exc:
        raise InstanceParseError(f"rewards: {exc}") from exc

    init_raw = _require(doc, "initial_pmfs", list)
    if len(init_raw) != n:
        raise InstanceParseError(f"initial_pmfs: expected {n} rows, got {len(init_raw)}")
    initial = tuple(_prob_row(init_raw[i], k, f"initial_pmfs[{i}]") for i in range(n))

    if not 2 <= el <= k:
        raise InstanceParseError(f"threshold_L: {el} outside 2..{k}")
    if not 0.0 < float(beta) <= 1.0:
        raise InstanceParseError(f"discount: {beta} outside (0, 1]")

    return ProblemSpec(n_channels=n, transition=transition, rewards=rewards,
                       initial_pmfs=initial, threshold=el, discount=float(beta),
                       label=label)


def spec_to_dict(spec: ProblemSpec) -> dict:
    return {
        "label": spec.label,
        "n_channels": spec.n_channels,
        "n_states": spec.k,
        "threshold_L": spec.threshold,
        "discount": spec.discount,
        "transition": [[float(x) for x in row] for row in spec.transition.matrix],
        "rewards": [float(x) for x in spec.rewards.values],
        "initial_pmfs": [[float(x) for x in p.probs] for p in spec.initial_pmfs],
    }


def load_instance(path) -> ProblemSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InstanceParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_dict(doc)


def save_instance(spec: ProblemSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


def builtin_names() -> list[str]:
    root = resources.files(__package__) / "data"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_builtin(name: str) -> ProblemSpec:
    """Bundled instances: 'golden_k5' (the five-state worked example with six
    channels) and 'two_state' (a positively correlated two-state instance)."""
    res = resources.files(__package__) / "data" / f"{name}.json"
    if not res.is_file():
        raise InstanceParseError(f"no builtin instance named {name!r}; have {builtin_names()}")
    return spec_from_dict(json.loads(res.read_text(encoding="utf-8")))


def builtin_path(name: str) -> str:
    """Filesystem path of a bundled instance (for CLI use)."""
    res = resources.files(__package__) / "data" / f"{name}.json"
    if not res.is_file():
        raise InstanceParseError(f"no builtin instance named {name!r}; have {builtin_names()}")
    return str(res)
