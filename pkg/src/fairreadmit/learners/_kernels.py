"""Kernel dispatch: compiled kernels unless FAIRREADMIT_DISABLE_NUMBA is set."""
from .._accel import USE_NUMBA

if USE_NUMBA:
    from ._kernels_numba import build_histograms, find_best_splits, partition, predict_tree_csr
else:
    from ._kernels_numpy import build_histograms, find_best_splits, partition, predict_tree_csr

__all__ = ["build_histograms", "find_best_splits", "partition", "predict_tree_csr"]
