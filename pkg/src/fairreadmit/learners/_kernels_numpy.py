"""Pure-numpy twins of the compiled boosting kernels (same signatures, same results)."""
import math

import numpy as np


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


def _exact_sum_pair(values):
    """(hi, lo) with hi = round(sum), lo = round(sum - hi); sum taken exactly."""
    hi = math.fsum(values)
    lo = math.fsum(list(values) + [-hi])
    return hi, lo


def build_histograms(indptr, rows, codes, bin_offset, default_code, node_of_row,
                     gp, ge, hp, he, n_nodes):
    n_features = len(bin_offset) - 1
    n_bins = int(bin_offset[n_features])
    G = np.zeros((n_nodes, n_bins))
    H = np.zeros((n_nodes, n_bins))
    cnt = np.zeros((n_nodes, n_bins), dtype=np.int64)
    g_tot = np.zeros((n_nodes, 2))
    h_tot = np.zeros((n_nodes, 2))
    tc = np.bincount(node_of_row[node_of_row >= 0], minlength=n_nodes).astype(np.int64)
    for k in range(n_nodes):
        sel = node_of_row == k
        g_tot[k] = _exact_sum_pair(np.concatenate([gp[sel], ge[sel]]).tolist())
        h_tot[k] = _exact_sum_pair(np.concatenate([hp[sel], he[sel]]).tolist())

    feat_of_entry = np.repeat(np.arange(n_features), np.diff(indptr))
    node = node_of_row[rows]
    keep = node >= 0
    r = rows[keep]
    key = node[keep] * n_bins + bin_offset[feat_of_entry[keep]] + codes[keep]
    order = np.argsort(key, kind="stable")
    key, r = key[order], r[order]
    uniq, starts, counts = np.unique(key, return_index=True, return_counts=True)
    gvals = np.stack([gp[r], ge[r]], axis=1)
    hvals = np.stack([hp[r], he[r]], axis=1)
    g_lo = np.zeros((n_nodes, n_bins))
    h_lo = np.zeros((n_nodes, n_bins))
    gsum = [_exact_sum_pair(gvals[s:s + c].ravel().tolist()) for s, c in zip(starts, counts)]
    hsum = [_exact_sum_pair(hvals[s:s + c].ravel().tolist()) for s, c in zip(starts, counts)]
    if gsum:
        G.ravel()[uniq], g_lo.ravel()[uniq] = np.array(gsum).T
        H.ravel()[uniq], h_lo.ravel()[uniq] = np.array(hsum).T
    cnt.ravel()[uniq] = counts

    for k in range(n_nodes):
        for j in range(n_features):
            lo_b, hi_b = int(bin_offset[j]), int(bin_offset[j + 1])
            b0 = lo_b + int(default_code[j])
            others = np.r_[lo_b:b0, b0 + 1:hi_b]
            G[k, b0] = math.fsum([g_tot[k, 0], g_tot[k, 1]] + (-G[k, others]).tolist() + (-g_lo[k, others]).tolist())
            H[k, b0] = math.fsum([h_tot[k, 0], h_tot[k, 1]] + (-H[k, others]).tolist() + (-h_lo[k, others]).tolist())
            cnt[k, b0] = tc[k] - cnt[k, others].sum()

    return G, H, cnt, g_tot[:, 0] + g_tot[:, 1], h_tot[:, 0] + h_tot[:, 1], tc


def find_best_splits(G, H, cnt, g_tot, h_tot, bin_offset, bin_values, lam, min_child_weight):
    n_nodes = G.shape[0]
    n_features = len(bin_offset) - 1
    best_feature = np.full(n_nodes, -1, dtype=np.int64)
    best_code = np.full(n_nodes, -1, dtype=np.int64)
    best_threshold = np.zeros(n_nodes)
    best_gain = np.zeros(n_nodes)
    feat_of_bin = np.repeat(np.arange(n_features), np.diff(bin_offset))
    for k in range(n_nodes):
        present = cnt[k] > 0
        idx = np.flatnonzero(present)
        if len(idx) < 2:
            continue
        f = feat_of_bin[idx]
        # running left sums restart at every feature boundary
        gl = np.zeros(len(idx))
        hl = np.zeros(len(idx))
        gvals, hvals = G[k, idx], H[k, idx]
        starts = np.flatnonzero(np.r_[True, f[1:] != f[:-1]])
        ends = np.r_[starts[1:], len(idx)]
        for s, e in zip(starts, ends):
            gl[s:e] = np.cumsum(gvals[s:e])
            hl[s:e] = np.cumsum(hvals[s:e])
        # candidate i splits between present bins idx[i] and idx[i + 1]
        cand = np.flatnonzero(f[:-1] == f[1:])
        if len(cand) == 0:
            continue
        gl_c, hl_c = gl[cand], hl[cand]
        gt, ht = g_tot[k], h_tot[k]
        hr_c = ht - hl_c
        gr_c = gt - gl_c
        parent = gt * gt / (ht + lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (gl_c * gl_c / (hl_c + lam) + gr_c * gr_c / (hr_c + lam) - parent)
        ok = (hl_c >= min_child_weight) & (hr_c >= min_child_weight) & (gain > 0)
        if not ok.any():
            continue
        gain = np.where(ok, gain, -np.inf)
        i = int(np.argmax(gain))
        left_bin, right_bin = idx[cand[i]], idx[cand[i] + 1]
        j = int(f[cand[i]])
        best_feature[k] = j
        best_code[k] = left_bin - bin_offset[j]
        best_threshold[k] = split_threshold(bin_values[left_bin], bin_values[right_bin])
        best_gain[k] = gain[i]
    return best_feature, best_code, best_threshold, best_gain


def partition(indptr, rows, codes, default_code, node_of_row, split_feature, split_code,
              left_local, right_local, leaf_id, leaf_of_row):
    n = len(node_of_row)
    new_node = np.full(n, -1, dtype=np.int64)
    active = node_of_row >= 0
    k = np.where(active, node_of_row, 0)
    f = split_feature[k]
    is_leaf = active & (f < 0)
    leaf_of_row[is_leaf] = leaf_id[k[is_leaf]]
    splitting = active & (f >= 0)
    goes_left = default_code[np.maximum(f, 0)] <= split_code[k]
    new_node[splitting] = np.where(goes_left, left_local[k], right_local[k])[splitting]
    for kk in np.flatnonzero(split_feature >= 0):
        ff = split_feature[kk]
        seg = slice(indptr[ff], indptr[ff + 1])
        r = rows[seg]
        mine = node_of_row[r] == kk
        r = r[mine]
        new_node[r] = np.where(codes[seg][mine] <= split_code[kk], left_local[kk], right_local[kk])
    return new_node


def predict_tree_csr(indptr, indices, data, feature, threshold, left, right, value, out, scale):
    import scipy.sparse as sp

    n = len(indptr) - 1
    n_cols = int(indices.max()) + 1 if len(indices) else 0
    n_cols = max(n_cols, int(feature.max()) + 1, 1)
    X = sp.csr_matrix((data, indices, indptr), shape=(n, n_cols))
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        f = feature[node]
        inner = f >= 0
        if not inner.any():
            break
        r = rows[inner]
        x = np.asarray(X[r, f[inner]]).ravel()
        node[r] = np.where(x < threshold[node[r]], left[node[r]], right[node[r]])
    out += scale * value[node]
