import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import T10_GROUP, T10_Y, counting_oracle as oracle, gender_spec
from fairreadmit import fairness
from fairreadmit.fairness import (
    Confusion,
    EmptyGroupError,
    FairnessReport,
    FairnessWarning,
    GroupConfusion,
    UndefinedRateError,
    audit,
    average_odds_difference,
    balanced_accuracy,
    confusion_by_group,
    di_score,
    disparate_impact,
    equal_opportunity_difference,
)


def test_t10_disparate_impact():
    assert disparate_impact(T10_Y, T10_GROUP, favorable_label=0) == pytest.approx(0.375, abs=1e-12)


def test_identical_rates_give_parity():
    y = np.array([0, 1, 0, 1])
    g = np.array([1, 1, 0, 0])
    assert disparate_impact(y, g) == 1.0


def test_group_swap_inverts_di():
    di = disparate_impact(T10_Y, T10_GROUP, favorable_label=0)
    swapped = disparate_impact(T10_Y, 1 - T10_GROUP, favorable_label=0)
    assert swapped == pytest.approx(1 / di)


def test_zero_privileged_rate_is_flagged():
    y = np.array([1, 1, 0, 1])
    g = np.array([1, 1, 0, 0])
    with pytest.warns(FairnessWarning):
        assert disparate_impact(y, g, favorable_label=0) == math.inf


def test_empty_group_is_reported():
    with pytest.raises(EmptyGroupError):
        disparate_impact(np.array([0, 1]), np.array([1, 1]))
    with pytest.raises(EmptyGroupError):
        disparate_impact(np.array([0, 1]), np.array([1, 0]), mask=np.array([False, True]))


def test_di_score():
    assert di_score(0.375) == pytest.approx(0.625)
    assert di_score(1.0) == 0.0
    # a reported score of 0.4498 means DI is 0.5502 or 1.4498
    assert di_score(0.5502) == pytest.approx(0.4498)
    assert di_score(1.4498) == pytest.approx(0.4498)
    with pytest.raises(fairness.FairnessError):
        di_score(-0.1)


def test_confusion_example():
    c = confusion_by_group([1, 1, 0, 0], [1, 0, 0, 1], [1, 1, 0, 0])
    assert (c.priv.tp, c.priv.fn, c.priv.tn, c.priv.fp) == (1, 1, 0, 0)
    assert (c.unpriv.tn, c.unpriv.fp, c.unpriv.tp, c.unpriv.fn) == (1, 1, 0, 0)


def test_perfect_classifier_confusion():
    y = np.array([1, 0, 1, 0, 1, 1])
    c = confusion_by_group(y, y, [1, 1, 1, 0, 0, 0])
    for part in (c.priv, c.unpriv):
        assert part.fp == part.fn == 0


def test_all_masked_confusion():
    with pytest.raises(EmptyGroupError):
        confusion_by_group([1, 0], [1, 0], [1, 0], mask=[True, True])


def test_confusion_length_mismatch():
    with pytest.raises(fairness.FairnessError, match="length"):
        confusion_by_group([1, 0], [1, 0, 1], [1, 0])


def _gc(tpr_u, fpr_u, tpr_p, fpr_p):
    # 20 positives / 10 negatives per group, so the rates are exact
    def conf(tpr, fpr):
        return Confusion(tp=20 * tpr, fn=20 * (1 - tpr), fp=10 * fpr, tn=10 * (1 - fpr))
    return GroupConfusion(priv=conf(tpr_p, fpr_p), unpriv=conf(tpr_u, fpr_u))


def test_average_odds_hand_example():
    c = _gc(tpr_u=0.5, fpr_u=0.2, tpr_p=0.75, fpr_p=0.1)
    assert average_odds_difference(c) == pytest.approx(-0.075)
    assert equal_opportunity_difference(c) == pytest.approx(-0.25)


def test_equal_rates_give_zero_differences():
    c = _gc(0.6, 0.3, 0.6, 0.3)
    assert average_odds_difference(c) == 0.0
    assert equal_opportunity_difference(c) == 0.0


def test_undefined_rates_are_reported():
    c = GroupConfusion(priv=Confusion(tp=0, fn=0, fp=1, tn=1), unpriv=Confusion(tp=1, fn=1, fp=1, tn=1))
    with pytest.raises(UndefinedRateError):
        equal_opportunity_difference(c)
    with pytest.raises(UndefinedRateError):
        average_odds_difference(c)


def test_balanced_accuracy():
    assert balanced_accuracy([1, 0, 1, 0], [1, 0, 1, 0]) == 1.0
    y = np.array([1] * 10 + [0] * 10)
    y_hat = np.array([1] * 8 + [0] * 2 + [0] * 7 + [1] * 3)  # TPR 0.8, TNR 0.7
    assert balanced_accuracy(y, y_hat) == pytest.approx(0.75)
    with pytest.raises(UndefinedRateError):
        balanced_accuracy([1, 1], [1, 0])


def test_audit_verdicts():
    rep = audit(T10_Y, T10_GROUP, None, gender_spec(0))
    assert rep.biased and rep.di == pytest.approx(0.375)
    assert (rep.n_priv, rep.n_unpriv) == (6, 4)
    assert rep.favorable_rate_priv == pytest.approx(4 / 6)
    assert fairness.is_biased(0.85) is False
    assert fairness.is_biased(1.30) is True
    assert fairness.is_biased(0.375, threshold=0.0) is False


def test_report_field_names():
    rep = audit(T10_Y, T10_GROUP, None, gender_spec(0))
    assert list(rep.to_dict()) == [
        "spec_name", "di", "di_score", "avg_odd", "eq_opp", "balanced_acc",
        "favorable_rate_priv", "favorable_rate_unpriv", "n_priv", "n_unpriv", "biased",
    ]
    assert isinstance(rep, FairnessReport)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=20),
       st.integers(0, 1))
def test_metrics_match_counting_oracle(rows, fav):
    y, y_hat, g = (np.array(c) for c in zip(*rows))
    exp = oracle(y, y_hat, g, fav)
    if exp["di"] is not None:
        assert disparate_impact(y_hat, g, favorable_label=fav) == pytest.approx(float(exp["di"]), abs=1e-12)
    if exp["eq_opp"] is not None and exp["avg_odd"] is not None:
        c = confusion_by_group(y, y_hat, g, positive_label=fav)
        assert equal_opportunity_difference(c) == pytest.approx(float(exp["eq_opp"]), abs=1e-12)
        assert average_odds_difference(c) == pytest.approx(float(exp["avg_odd"]), abs=1e-12)
    if exp["bacc"] is not None:
        assert balanced_accuracy(y, y_hat) == pytest.approx(float(exp["bacc"]), abs=1e-12)


@pytest.mark.filterwarnings("ignore::fairreadmit.fairness.FairnessWarning")
@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)), min_size=8, max_size=40),
       st.randoms(use_true_random=False))
def test_swap_and_permutation_properties(rows, rnd):
    y, y_hat, g = (np.array(c) for c in zip(*rows))
    try:
        c = confusion_by_group(y, y_hat, g)
        aod, eod = average_odds_difference(c), equal_opportunity_difference(c)
        di = disparate_impact(y_hat, g, favorable_label=1)
    except fairness.FairnessError:
        return
    if di in (0.0, math.inf):
        return
    cs = confusion_by_group(y, y_hat, 1 - g)
    assert average_odds_difference(cs) == pytest.approx(-aod)
    assert equal_opportunity_difference(cs) == pytest.approx(-eod)
    assert disparate_impact(y_hat, 1 - g, favorable_label=1) == pytest.approx(1 / di)
    perm = list(range(len(y)))
    rnd.shuffle(perm)
    cp = confusion_by_group(y[perm], y_hat[perm], g[perm])
    assert average_odds_difference(cp) == pytest.approx(aod)
    assert disparate_impact(y_hat[perm], g[perm], favorable_label=1) == pytest.approx(di)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=4, max_size=30))
def test_perfect_predictions_are_fair(rows):
    y, g = (np.array(c) for c in zip(*rows))
    if len(set(zip(y.tolist(), g.tolist()))) < 4:
        return
    c = confusion_by_group(y, y, g)
    assert average_odds_difference(c) == 0.0
    assert equal_opportunity_difference(c) == 0.0
    assert balanced_accuracy(y, y) == 1.0


@given(st.floats(0, 10, allow_nan=False))
def test_di_score_zero_iff_parity(di):
    s = di_score(di)
    assert s >= 0
    assert (s == 0) == (di == 1.0)
