"""Compiled boosting kernels.

Gradient/hessian sums are accumulated in double-double arithmetic from
error-free products, so every histogram cell is (up to vanishing odds) the
correctly rounded exact sum. That makes the sums independent of row order,
which is what lets integer weights and physical row duplication grow the same
trees bit for bit.
"""
import numpy as np

from .._accel import njit

_SPLITTER = 134217729.0  # 2**27 + 1


@njit
def split_threshold(lo, hi):
    """Midpoint of two adjacent distinct values, nudged so that lo < t <= hi.

    Adjacent floats have a midpoint that rounds onto ``lo``; using ``hi`` then
    keeps ``x < t`` routing identical to the split the histogram scan scored.
    """
    t = 0.5 * (lo + hi)
    if not np.isfinite(t):
        t = 0.5 * lo + 0.5 * hi
    if t <= lo:
        t = hi
    return t


@njit
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit
def _dd_add(hi, lo, x_hi, x_lo):
    s, e = _two_sum(hi, x_hi)
    e += lo + x_lo
    t = s + e
    return t, e - (t - s)


@njit
def build_histograms(indptr, rows, codes, bin_offset, default_code, node_of_row,
                     gp, ge, hp, he, n_nodes):
    """Per-(node, bin) gradient/hessian sums and row counts.

    ``gp + ge`` is the exact product ``w * g`` for each row (likewise for h).
    Bins equal to a feature's default code are filled as node total minus the
    double-double sums of that feature's other bins, so which value is the
    default does not change the result.
    """
    n_features = len(bin_offset) - 1
    n_bins = bin_offset[n_features]
    g_hi = np.zeros((n_nodes, n_bins))
    g_lo = np.zeros((n_nodes, n_bins))
    h_hi = np.zeros((n_nodes, n_bins))
    h_lo = np.zeros((n_nodes, n_bins))
    cnt = np.zeros((n_nodes, n_bins), dtype=np.int64)
    tg = np.zeros((n_nodes, 2))
    th = np.zeros((n_nodes, 2))
    tc = np.zeros(n_nodes, dtype=np.int64)

    for r in range(len(node_of_row)):
        k = node_of_row[r]
        if k < 0:
            continue
        tg[k, 0], tg[k, 1] = _dd_add(tg[k, 0], tg[k, 1], gp[r], ge[r])
        th[k, 0], th[k, 1] = _dd_add(th[k, 0], th[k, 1], hp[r], he[r])
        tc[k] += 1

    for j in range(n_features):
        off = bin_offset[j]
        for e in range(indptr[j], indptr[j + 1]):
            r = rows[e]
            k = node_of_row[r]
            if k < 0:
                continue
            b = off + codes[e]
            g_hi[k, b], g_lo[k, b] = _dd_add(g_hi[k, b], g_lo[k, b], gp[r], ge[r])
            h_hi[k, b], h_lo[k, b] = _dd_add(h_hi[k, b], h_lo[k, b], hp[r], he[r])
            cnt[k, b] += 1

    G = g_hi + g_lo
    H = h_hi + h_lo
    for k in range(n_nodes):
        for j in range(n_features):
            b0 = bin_offset[j] + default_code[j]
            ag_hi, ag_lo = tg[k, 0], tg[k, 1]
            ah_hi, ah_lo = th[k, 0], th[k, 1]
            c = tc[k]
            for b in range(bin_offset[j], bin_offset[j + 1]):
                if b == b0:
                    continue
                ag_hi, ag_lo = _dd_add(ag_hi, ag_lo, -g_hi[k, b], -g_lo[k, b])
                ah_hi, ah_lo = _dd_add(ah_hi, ah_lo, -h_hi[k, b], -h_lo[k, b])
                c -= cnt[k, b]
            G[k, b0] = ag_hi + ag_lo
            H[k, b0] = ah_hi + ah_lo
            cnt[k, b0] = c

    return G, H, cnt, tg[:, 0] + tg[:, 1], th[:, 0] + th[:, 1], tc


@njit
def find_best_splits(G, H, cnt, g_tot, h_tot, bin_offset, bin_values, lam, min_child_weight):
    """Best (feature, left-code, threshold, gain) per node; feature -1 when no split qualifies.

    Features and candidate thresholds are scanned in ascending order and only
    a strictly larger gain replaces the incumbent.
    """
    n_nodes = G.shape[0]
    n_features = len(bin_offset) - 1
    best_feature = np.full(n_nodes, -1, dtype=np.int64)
    best_code = np.full(n_nodes, -1, dtype=np.int64)
    best_threshold = np.zeros(n_nodes)
    best_gain = np.zeros(n_nodes)
    for k in range(n_nodes):
        gt = g_tot[k]
        ht = h_tot[k]
        parent = gt * gt / (ht + lam)
        top = 0.0
        for j in range(n_features):
            lo_b = bin_offset[j]
            hi_b = bin_offset[j + 1]
            gl = 0.0
            hl = 0.0
            prev = -1
            for b in range(lo_b, hi_b):
                if cnt[k, b] == 0:
                    continue
                if prev >= 0:
                    hr = ht - hl
                    if hl >= min_child_weight and hr >= min_child_weight:
                        gr = gt - gl
                        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
                        if gain > top:
                            top = gain
                            best_feature[k] = j
                            best_code[k] = prev - lo_b
                            best_threshold[k] = split_threshold(bin_values[prev], bin_values[b])
                            best_gain[k] = gain
                gl += G[k, b]
                hl += H[k, b]
                prev = b
    return best_feature, best_code, best_threshold, best_gain


@njit
def partition(indptr, rows, codes, default_code, node_of_row, split_feature, split_code,
              left_local, right_local, leaf_id, leaf_of_row):
    """Route rows of split nodes to next-level local ids; retire rows of leaf nodes."""
    n = len(node_of_row)
    new_node = np.full(n, -1, dtype=np.int64)
    for r in range(n):
        k = node_of_row[r]
        if k < 0:
            continue
        f = split_feature[k]
        if f < 0:
            leaf_of_row[r] = leaf_id[k]
        elif default_code[f] <= split_code[k]:
            new_node[r] = left_local[k]
        else:
            new_node[r] = right_local[k]
    for k in range(len(split_feature)):
        f = split_feature[k]
        if f < 0:
            continue
        for e in range(indptr[f], indptr[f + 1]):
            r = rows[e]
            if node_of_row[r] != k:
                continue
            if codes[e] <= split_code[k]:
                new_node[r] = left_local[k]
            else:
                new_node[r] = right_local[k]
    return new_node


@njit
def predict_tree_csr(indptr, indices, data, feature, threshold, left, right, value, out, scale):
    """``out[r] += scale * leaf_value(row r)`` for a CSR matrix."""
    n = len(indptr) - 1
    for r in range(n):
        node = 0
        start = indptr[r]
        stop = indptr[r + 1]
        while feature[node] >= 0:
            f = feature[node]
            lo = start
            hi = stop
            while lo < hi:
                mid = (lo + hi) // 2
                if indices[mid] < f:
                    lo = mid + 1
                else:
                    hi = mid
            x = data[lo] if lo < stop and indices[lo] == f else 0.0
            node = left[node] if x < threshold[node] else right[node]
        out[r] += scale * value[node]
