"""Reweighing: per-(group, label) example weights that make group and label
independent in the weighted training data."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import EncodedDataset, GroupSpec


class ReweighingError(ValueError):
    pass


_GROUPS = (("priv", 1), ("unpriv", 0))


@dataclass(frozen=True)
class ReweighingWeights:
    spec_name: str
    favorable_label: int
    weights: dict  # {(group, outcome): weight}, group in {priv, unpriv}, outcome in {fav, unfav}
    cell_counts: dict
    group_totals: dict
    label_totals: dict
    total: float

    def weight(self, group, outcome):
        return self.weights[(group, outcome)]

    def to_dict(self):
        return {
            "spec_name": self.spec_name,
            "favorable_label": self.favorable_label,
            "weights": {f"{g}_{o}": v for (g, o), v in sorted(self.weights.items())},
            "cell_counts": {f"{g}_{o}": v for (g, o), v in sorted(self.cell_counts.items())},
            "group_totals": dict(sorted(self.group_totals.items())),
            "label_totals": dict(sorted(self.label_totals.items())),
            "total": self.total,
        }


def _cells(y, group, mask, favorable_label):
    keep = ~mask
    fav = y == favorable_label
    for gname, g in _GROUPS:
        in_group = keep & (group == g)
        yield (gname, "fav"), in_group & fav
        yield (gname, "unfav"), in_group & ~fav


def compute_weights(train: EncodedDataset, spec: GroupSpec) -> ReweighingWeights:
    """Cell weight = n_g * n_y / (n * n_{g,y}), counting with the current row weights."""
    group, mask = train.group(spec.name)
    w = train.w
    counts = {}
    for cell, sel in _cells(train.y, group, mask, spec.favorable_label):
        if not sel.any():
            raise ReweighingError(f"spec {spec.name!r}: empty cell {cell}; cannot reweigh")
        counts[cell] = math.fsum(w[sel])
    n = math.fsum(counts.values())
    n_g = {g: counts[(g, "fav")] + counts[(g, "unfav")] for g, _ in _GROUPS}
    n_y = {o: counts[("priv", o)] + counts[("unpriv", o)] for o in ("fav", "unfav")}
    weights = {(g, o): n_g[g] * n_y[o] / (n * counts[(g, o)]) for (g, o) in counts}
    return ReweighingWeights(
        spec_name=spec.name,
        favorable_label=spec.favorable_label,
        weights=weights,
        cell_counts=counts,
        group_totals=n_g,
        label_totals=n_y,
        total=n,
    )


def apply_weights(train: EncodedDataset, rw: ReweighingWeights, spec: GroupSpec) -> EncodedDataset:
    """Scale each unmasked row's weight by its cell weight; masked rows are untouched.

    With unit input weights this is a plain replacement.
    """
    if rw.spec_name != spec.name or rw.favorable_label != spec.favorable_label:
        raise ReweighingError(
            f"weights were computed for {rw.spec_name!r}/favorable={rw.favorable_label}, "
            f"not {spec.name!r}/favorable={spec.favorable_label}"
        )
    group, mask = train.group(spec.name)
    new_w = train.w.copy()
    for cell, sel in _cells(train.y, group, mask, spec.favorable_label):
        new_w[sel] = train.w[sel] * rw.weights[cell]
    return train.with_weights(new_w)
