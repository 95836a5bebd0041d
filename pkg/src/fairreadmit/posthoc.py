"""Calibrated equalized-odds post-processing.

The group with the lower generalized error rate has a random share of its
scores replaced by its base rate, raising its cost until it matches the other
group's.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class PosthocError(ValueError):
    pass


COST_KINDS = ("gfpr", "gfnr")


def generalized_cost(scores, y, sel, cost_kind, weights=None):
    """Mean score over negatives (gfpr) or mean ``1 - score`` over positives (gfnr)."""
    w = np.ones(len(scores)) if weights is None else np.asarray(weights, dtype=np.float64)
    if cost_kind == "gfpr":
        cell = sel & (y == 0)
        vals = scores[cell]
    elif cost_kind == "gfnr":
        cell = sel & (y == 1)
        vals = 1.0 - scores[cell]
    else:
        raise PosthocError(f"cost_kind must be one of {COST_KINDS}, got {cost_kind!r}")
    if not cell.any():
        raise PosthocError(f"empty label cell while computing {cost_kind}")
    return float(np.average(vals, weights=w[cell]))


@dataclass(frozen=True)
class EqOddsMixer:
    cost_kind: str
    target_group: str  # "priv" or "unpriv"
    mix_probability: float
    base_rate: float
    fitted_costs: dict
    clamped: bool = False

    def to_dict(self):
        return asdict(self)


def fit_mixer(scores, y, group, mask=None, cost_kind="gfpr", weights=None) -> EqOddsMixer:
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    group = np.asarray(group)
    keep = np.ones(len(y), dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=np.float64)
    sels = {"priv": keep & (group == 1), "unpriv": keep & (group == 0)}
    for name, sel in sels.items():
        if not ((y[sel] == 0).any() and (y[sel] == 1).any()):
            raise PosthocError(f"{name} group must contain both labels")
    costs = {name: generalized_cost(scores, y, sel, cost_kind, w) for name, sel in sels.items()}
    # ties go to the privileged group; p is 0 either way
    target = "priv" if costs["priv"] <= costs["unpriv"] else "unpriv"
    other = "unpriv" if target == "priv" else "priv"
    sel = sels[target]
    base_rate = float(np.average(y[sel] == 1, weights=w[sel]))
    base_cost = base_rate if cost_kind == "gfpr" else 1.0 - base_rate
    gap = costs[other] - costs[target]
    if gap == 0.0:
        p, clamped = 0.0, False
    else:
        if base_cost == costs[target]:
            raise PosthocError(
                f"base-rate cost equals the {target} group's cost ({base_cost}); mixing cannot close the gap"
            )
        raw = gap / (base_cost - costs[target])
        p = min(max(raw, 0.0), 1.0)
        clamped = p != raw
    return EqOddsMixer(
        cost_kind=cost_kind,
        target_group=target,
        mix_probability=float(p),
        base_rate=base_rate,
        fitted_costs=costs,
        clamped=clamped,
    )


def apply_mixer(mixer: EqOddsMixer, scores, group, mask=None, seed=0):
    """Replace each target-group score by the base rate with the mixing probability.

    One uniform draw is consumed per row in row order, so row i always uses
    draw i regardless of group membership.
    """
    scores = np.asarray(scores, dtype=np.float64)
    group = np.asarray(group)
    keep = np.ones(len(scores), dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
    g = 1 if mixer.target_group == "priv" else 0
    draws = np.random.default_rng(seed).random(len(scores))
    replace = keep & (group == g) & (draws < mixer.mix_probability)
    out = scores.copy()
    out[replace] = mixer.base_rate
    return out
