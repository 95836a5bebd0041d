"""Group fairness metrics and the four-fifths disparate-impact audit."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np


class FairnessError(ValueError):
    """Base class for metric failures that must not turn into silent NaNs."""


class EmptyGroupError(FairnessError):
    pass


class UndefinedRateError(FairnessError):
    pass


class FairnessWarning(UserWarning):
    pass


def _prepare(group, mask, *arrays, weights=None):
    group = np.asarray(group)
    n = len(group)
    arrays = [np.asarray(a) for a in arrays]
    for a in arrays:
        if len(a) != n:
            raise FairnessError(f"length mismatch: {len(a)} vs {n}")
    keep = np.ones(n, dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
    if len(keep) != n:
        raise FairnessError(f"length mismatch: mask has {len(keep)} rows, expected {n}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(w) != n:
        raise FairnessError(f"length mismatch: weights have {len(w)} rows, expected {n}")
    return group, keep, w, arrays


def _favorable_sums(outcomes, group, mask, favorable_label, weights):
    """(favorable weight, total weight, row count) for privileged then unprivileged."""
    group, keep, w, (outcomes,) = _prepare(group, mask, outcomes, weights=weights)
    fav = outcomes == favorable_label
    out = []
    for g in (1, 0):
        sel = keep & (group == g)
        total = float(w[sel].sum())
        if not sel.any() or total <= 0:
            label = "privileged" if g == 1 else "unprivileged"
            raise EmptyGroupError(f"{label} group has no unmasked rows")
        out.append((float(w[sel & fav].sum()), total, int(sel.sum())))
    return out


def group_favorable_rates(outcomes, group, mask=None, favorable_label=0, weights=None):
    """Weighted favorable-outcome rate and row count for (privileged, unprivileged)."""
    (fp, tp, n_p), (fu, tu, n_u) = _favorable_sums(outcomes, group, mask, favorable_label, weights)
    return fp / tp, fu / tu, n_p, n_u


def disparate_impact(outcomes, group, mask=None, favorable_label=0, weights=None) -> float:
    """Pr(favorable | unprivileged) / Pr(favorable | privileged).

    ``outcomes`` may be true labels (dataset audit) or predictions. A zero
    privileged rate returns ``inf`` and emits a :class:`FairnessWarning`.
    """
    (fav_p, tot_p, _), (fav_u, tot_u, _) = _favorable_sums(outcomes, group, mask, favorable_label, weights)
    if fav_p == 0.0:
        warnings.warn(
            "privileged favorable rate is zero; disparate impact reported as inf",
            FairnessWarning,
            stacklevel=2,
        )
        return math.inf
    # one division: with integer counts this is the correctly rounded ratio
    return (fav_u * tot_p) / (tot_u * fav_p)


def di_score(di: float) -> float:
    if di < 0:
        raise FairnessError(f"disparate impact must be non-negative, got {di}")
    return abs(1.0 - di)


@dataclass(frozen=True)
class Confusion:
    tp: float
    fp: float
    tn: float
    fn: float

    def _rate(self, num, den, name):
        if den <= 0:
            raise UndefinedRateError(f"{name} undefined: zero denominator")
        return num / den

    @property
    def tpr(self):
        return self._rate(self.tp, self.tp + self.fn, "TPR")

    @property
    def fpr(self):
        return self._rate(self.fp, self.fp + self.tn, "FPR")

    @property
    def tnr(self):
        return self._rate(self.tn, self.fp + self.tn, "TNR")

    @property
    def fnr(self):
        return self._rate(self.fn, self.tp + self.fn, "FNR")


@dataclass(frozen=True)
class GroupConfusion:
    priv: Confusion
    unpriv: Confusion


def _confusion(y, y_hat, w, positive_label):
    pos = y == positive_label
    pred_pos = y_hat == positive_label
    return Confusion(
        tp=float(w[pos & pred_pos].sum()),
        fp=float(w[~pos & pred_pos].sum()),
        tn=float(w[~pos & ~pred_pos].sum()),
        fn=float(w[pos & ~pred_pos].sum()),
    )


def confusion_by_group(y, y_hat, group, mask=None, weights=None, positive_label=1) -> GroupConfusion:
    """Confusion counts per group over unmasked rows.

    ``positive_label`` selects the class whose detection counts as a true
    positive; metric reports pass the GroupSpec's favorable label here.
    """
    group, keep, w, (y, y_hat) = _prepare(group, mask, y, y_hat, weights=weights)
    parts = []
    for g in (1, 0):
        sel = keep & (group == g)
        if not sel.any():
            label = "privileged" if g == 1 else "unprivileged"
            raise EmptyGroupError(f"{label} group has no unmasked rows")
        parts.append(_confusion(y[sel], y_hat[sel], w[sel], positive_label))
    return GroupConfusion(priv=parts[0], unpriv=parts[1])


# Rate differences are formed over a common denominator so that, with
# integer counts, each metric is a single correctly rounded division.

def _rate_gap(num_a, den_a, num_b, den_b):
    """(num_a/den_a - num_b/den_b) as (numerator, denominator)."""
    return num_a * den_b - num_b * den_a, den_a * den_b


def _require(c: GroupConfusion, *rates):
    for part in (c.unpriv, c.priv):
        for rate in rates:
            getattr(part, rate)  # raises UndefinedRateError on a zero denominator


def average_odds_difference(c: GroupConfusion) -> float:
    _require(c, "fpr", "tpr")
    u, p = c.unpriv, c.priv
    f_num, f_den = _rate_gap(u.fp, u.fp + u.tn, p.fp, p.fp + p.tn)
    t_num, t_den = _rate_gap(u.tp, u.tp + u.fn, p.tp, p.tp + p.fn)
    return (f_num * t_den + t_num * f_den) / (2.0 * f_den * t_den)


def equal_opportunity_difference(c: GroupConfusion) -> float:
    _require(c, "tpr")
    u, p = c.unpriv, c.priv
    num, den = _rate_gap(u.tp, u.tp + u.fn, p.tp, p.tp + p.fn)
    return num / den


def balanced_accuracy(y, y_hat, weights=None) -> float:
    y = np.asarray(y)
    y_hat = np.asarray(y_hat)
    if len(y) != len(y_hat):
        raise FairnessError(f"length mismatch: {len(y)} vs {len(y_hat)}")
    if not ((y == 1).any() and (y == 0).any()):
        raise UndefinedRateError("balanced accuracy needs both classes in y")
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=np.float64)
    c = _confusion(y, y_hat, w, 1)
    pos, neg = c.tp + c.fn, c.tn + c.fp
    return (c.tp * neg + c.tn * pos) / (2.0 * pos * neg)


def is_biased(di: float, threshold=0.8) -> bool:
    """Symmetric four-fifths rule: flag DI below ``threshold`` or above its inverse."""
    if threshold <= 0:
        return False
    return di < threshold or di > 1.0 / threshold


@dataclass
class FairnessReport:
    spec_name: str
    di: float
    di_score: float
    avg_odd: float | None
    eq_opp: float | None
    balanced_acc: float | None
    favorable_rate_priv: float
    favorable_rate_unpriv: float
    n_priv: int
    n_unpriv: int
    biased: bool

    def to_dict(self):
        return asdict(self)


def audit(outcomes, group, mask, spec, threshold=0.8, weights=None) -> FairnessReport:
    """Dataset-level audit: DI, its score, group rates and the biased verdict."""
    priv, unpriv, n_priv, n_unpriv = group_favorable_rates(
        outcomes, group, mask, spec.favorable_label, weights
    )
    di = disparate_impact(outcomes, group, mask, spec.favorable_label, weights)
    return FairnessReport(
        spec_name=spec.name,
        di=di,
        di_score=di_score(di),
        avg_odd=None,
        eq_opp=None,
        balanced_acc=None,
        favorable_rate_priv=priv,
        favorable_rate_unpriv=unpriv,
        n_priv=n_priv,
        n_unpriv=n_unpriv,
        biased=is_biased(di, threshold),
    )


def evaluate(y, y_hat, group, mask, spec, threshold=0.8) -> FairnessReport:
    """Full metric set for one set of predictions (DI measured on ``y_hat``)."""
    report = audit(y_hat, group, mask, spec, threshold)
    c = confusion_by_group(y, y_hat, group, mask, positive_label=spec.favorable_label)
    report.avg_odd = average_odds_difference(c)
    report.eq_opp = equal_opportunity_difference(c)
    report.balanced_acc = balanced_accuracy(y, y_hat)
    return report
