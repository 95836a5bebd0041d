import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gender_spec, make_dataset
from fairreadmit.fairness import disparate_impact
from fairreadmit.reweigh import ReweighingError, apply_weights, compute_weights

SPEC = gender_spec(0)


def test_t10_weights(t10):
    rw = compute_weights(t10, SPEC)
    assert rw.weight("priv", "fav") == pytest.approx(0.75)
    assert rw.weight("priv", "unfav") == pytest.approx(1.5)
    assert rw.weight("unpriv", "fav") == pytest.approx(2.0)
    assert rw.weight("unpriv", "unfav") == pytest.approx(2 / 3)
    assert rw.cell_counts[("priv", "fav")] == 4
    assert rw.total == 10


def test_t10_weighted_parity(t10):
    out = apply_weights(t10, compute_weights(t10, SPEC), SPEC)
    assert out.w.sum() == pytest.approx(10.0)
    g, m = out.group("gender")
    for grp in (0, 1):
        sel = g == grp
        assert out.w[sel & (out.y == 0)].sum() / out.w[sel].sum() == pytest.approx(0.5)
    assert disparate_impact(out.y, g, m, 0, out.w) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(out.X, t10.X)
    np.testing.assert_array_equal(out.y, t10.y)


def test_independent_data_gets_unit_weights():
    y = np.array([0, 1, 0, 1, 0, 0, 1, 1])
    g = np.array([1, 1, 1, 1, 0, 0, 0, 0])
    d = make_dataset(np.zeros((8, 1)), y, g)
    rw = compute_weights(d, SPEC)
    assert all(v == pytest.approx(1.0) for v in rw.weights.values())
    np.testing.assert_allclose(apply_weights(d, rw, SPEC).w, 1.0)


def test_recomputed_weights_on_reweighed_data_are_one(t10):
    once = apply_weights(t10, compute_weights(t10, SPEC), SPEC)
    again = compute_weights(once, SPEC)
    for v in again.weights.values():
        assert v == pytest.approx(1.0, abs=1e-12)


def test_empty_cell_is_reported():
    d = make_dataset(np.zeros((4, 1)), [0, 0, 0, 1], [1, 1, 0, 0])
    with pytest.raises(ReweighingError, match=r"\('priv', 'unfav'\)"):
        compute_weights(d, SPEC)


def test_spec_mismatch(t10):
    rw = compute_weights(t10, SPEC)
    with pytest.raises(ReweighingError):
        apply_weights(t10, rw, gender_spec(1))


def test_masked_rows_keep_weight():
    y = np.array([0, 0, 1, 0, 1, 1, 0])
    g = np.array([1, 1, 1, 0, 0, 0, 1])
    mask = np.array([False] * 6 + [True])
    d = make_dataset(np.zeros((7, 1)), y, g, mask=mask)
    out = apply_weights(d, compute_weights(d, SPEC), SPEC)
    assert out.w[-1] == 1.0
    assert out.w.sum() == pytest.approx(7.0)


@st.composite
def cell_datasets(draw, max_rows=200):
    n = draw(st.integers(4, max_rows))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    g = rng.integers(0, 2, n)
    # force all four (group, label) cells to be non-empty
    y[:4] = [0, 1, 0, 1]
    g[:4] = [0, 0, 1, 1]
    return y, g, draw(st.integers(0, 1))


@settings(max_examples=200, deadline=None)
@given(cell_datasets())
def test_exact_weighted_parity_and_factorization(args):
    y, g, fav = args
    n = len(y)
    spec = gender_spec(fav)
    d = make_dataset(np.zeros((n, 1)), y, g)
    out = apply_weights(d, compute_weights(d, spec), spec)
    w = out.w
    assert abs(w.sum() - n) <= 1e-9 * n
    assert abs(disparate_impact(y, g, None, fav, w) - 1.0) <= 1e-9
    total = w.sum()
    for grp in (0, 1):
        for lab in (0, 1):
            joint = w[(g == grp) & (y == lab)].sum() / total
            marg = (w[g == grp].sum() / total) * (w[y == lab].sum() / total)
            assert abs(joint - marg) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(cell_datasets(60), st.randoms(use_true_random=False))
def test_weights_invariant_to_permutation_and_duplication(args, rnd):
    y, g, fav = args
    spec = gender_spec(fav)
    base = compute_weights(make_dataset(np.zeros((len(y), 1)), y, g), spec).weights
    perm = list(range(len(y)))
    rnd.shuffle(perm)
    permuted = compute_weights(make_dataset(np.zeros((len(y), 1)), y[perm], g[perm]), spec).weights
    doubled = compute_weights(
        make_dataset(np.zeros((2 * len(y), 1)), np.r_[y, y], np.r_[g, g]), spec
    ).weights
    for cell, v in base.items():
        assert permuted[cell] == pytest.approx(v, rel=1e-12)
        assert doubled[cell] == pytest.approx(v, rel=1e-12)
