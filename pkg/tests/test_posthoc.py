import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairreadmit.posthoc import PosthocError, apply_mixer, fit_mixer, generalized_cost

# target (priv): negatives score 0.1, base rate 0.5; other (unpriv): negatives score 0.3
Y = np.array([0, 0, 1, 1, 0, 0, 1, 1])
G = np.array([1, 1, 1, 1, 0, 0, 0, 0])


def scores_for(neg_priv, neg_unpriv):
    return np.array([neg_priv, neg_priv, 0.9, 0.9, neg_unpriv, neg_unpriv, 0.9, 0.9])


def test_gfpr_mixing_probability_example():
    m = fit_mixer(scores_for(0.1, 0.3), Y, G, cost_kind="gfpr")
    assert m.target_group == "priv"
    assert m.base_rate == 0.5
    assert m.mix_probability == pytest.approx(0.5)
    assert not m.clamped
    assert m.fitted_costs == pytest.approx({"priv": 0.1, "unpriv": 0.3})


def test_equal_costs_need_no_mixing():
    m = fit_mixer(scores_for(0.2, 0.2), Y, G, cost_kind="gfpr")
    assert m.mix_probability == 0.0


def test_out_of_range_probability_is_clamped():
    m = fit_mixer(scores_for(0.1, 0.9), Y, G, cost_kind="gfpr")
    assert m.mix_probability == 1.0
    assert m.clamped


def test_target_is_lower_cost_group():
    m = fit_mixer(scores_for(0.3, 0.1), Y, G, cost_kind="gfpr")
    assert m.target_group == "unpriv"


def test_unsolvable_and_invalid_inputs():
    # target cost already equals its base-rate cost
    with pytest.raises(PosthocError, match="cannot close"):
        fit_mixer(scores_for(0.5, 0.7), Y, G, cost_kind="gfpr")
    with pytest.raises(PosthocError, match="both labels"):
        fit_mixer(np.full(4, 0.5), [0, 0, 0, 1], [1, 1, 0, 0])
    with pytest.raises(PosthocError, match="cost_kind"):
        generalized_cost(np.full(2, 0.5), np.array([0, 1]), np.array([True, True]), "fdr")


def test_apply_extremes():
    s = np.random.default_rng(0).random(50)
    g = np.r_[np.ones(25, int), np.zeros(25, int)]
    m = fit_mixer(scores_for(0.1, 0.3), Y, G, cost_kind="gfpr")
    none = apply_mixer(_with_p(m, 0.0), s, g, seed=1)
    np.testing.assert_array_equal(none, s)
    full = apply_mixer(_with_p(m, 1.0), s, g, seed=1)
    np.testing.assert_array_equal(full[:25], m.base_rate)
    np.testing.assert_array_equal(full[25:], s[25:])


def _with_p(mixer, p):
    from dataclasses import replace
    return replace(mixer, mix_probability=p)


def test_monte_carlo_matches_closed_form():
    rng = np.random.default_rng(7)
    n = 10_000
    y = rng.integers(0, 2, n)
    s = rng.uniform(0, 0.5, n)
    g = np.ones(n, int)
    m = fit_mixer(scores_for(0.1, 0.3), Y, G, cost_kind="gfpr")
    out = apply_mixer(m, s, g, seed=3)
    neg = y == 0
    expected = (1 - m.mix_probability) * s[neg].mean() + m.mix_probability * m.base_rate
    assert abs(out[neg].mean() - expected) <= 0.01


def calibrated_scores(rng, n, a, b):
    s = rng.beta(a, b, n)
    return s, (rng.random(n) < s).astype(int)


@pytest.mark.parametrize("cost_kind", ["gfpr", "gfnr"])
def test_post_mix_costs_match_on_calibrated_scores(cost_kind):
    rng = np.random.default_rng(11)
    # same base rate, sharper scores in the privileged group
    s1, y1 = calibrated_scores(rng, 10_000, 0.5, 0.5)
    s0, y0 = calibrated_scores(rng, 10_000, 5, 5)
    s, y = np.r_[s1, s0], np.r_[y1, y0]
    g = np.r_[np.ones(10_000, int), np.zeros(10_000, int)]
    m = fit_mixer(s, y, g, cost_kind=cost_kind)
    assert m.target_group == "priv" and not m.clamped
    out = apply_mixer(m, s, g, seed=5)
    post = {name: generalized_cost(out, y, g == val, cost_kind) for name, val in (("priv", 1), ("unpriv", 0))}
    assert abs(post["priv"] - post["unpriv"]) <= 0.02
    other = 0 if m.target_group == "priv" else 1
    np.testing.assert_array_equal(out[g == other], s[g == other])


def test_clamped_mixing_narrows_but_cannot_close_gap():
    rng = np.random.default_rng(12)
    s1, y1 = calibrated_scores(rng, 10_000, 2, 5)
    s0, y0 = calibrated_scores(rng, 10_000, 3, 3)
    s, y = np.r_[s1, s0], np.r_[y1, y0]
    g = np.r_[np.ones(10_000, int), np.zeros(10_000, int)]
    m = fit_mixer(s, y, g, cost_kind="gfpr")
    assert m.clamped and m.mix_probability == 1.0
    out = apply_mixer(m, s, g, seed=0)
    before = abs(m.fitted_costs["priv"] - m.fitted_costs["unpriv"])
    after = abs(generalized_cost(out, y, g == 1, "gfpr") - generalized_cost(out, y, g == 0, "gfpr"))
    assert after < before


def test_masked_rows_untouched_and_seeded():
    s = np.linspace(0.05, 0.95, 40)
    g = np.ones(40, int)
    mask = np.zeros(40, bool)
    mask[::3] = True
    m = _with_p(fit_mixer(scores_for(0.1, 0.3), Y, G, cost_kind="gfpr"), 0.7)
    a = apply_mixer(m, s, g, mask=mask, seed=9)
    np.testing.assert_array_equal(a[mask], s[mask])
    np.testing.assert_array_equal(a, apply_mixer(m, s, g, mask=mask, seed=9))
    assert not np.array_equal(a, apply_mixer(m, s, g, mask=mask, seed=10))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_row_draws_do_not_depend_on_other_rows(seed, p):
    rng = np.random.default_rng(seed)
    n = 60
    s = rng.random(n)
    g = rng.integers(0, 2, n)
    m = _with_p(fit_mixer(scores_for(0.1, 0.3), Y, G, cost_kind="gfpr"), p)
    a = apply_mixer(m, s, g, seed=seed)
    s2 = s.copy()
    s2[g == 0] = rng.random(int((g == 0).sum()))
    b = apply_mixer(m, s2, g, seed=seed)
    np.testing.assert_array_equal(a[g == 1], b[g == 1])
    np.testing.assert_array_equal(b[g == 0], s2[g == 0])
