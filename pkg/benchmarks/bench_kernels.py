"""Compare the compiled and pure-numpy boosting kernels.

Trains the same GBM on a synthetic sparse one-hot problem with each kernel
set, reports wall time per stage, and checks that both produce the same model.

    python3 benchmarks/bench_kernels.py --rows 20000 --features 400 --trees 10
"""
import argparse
import hashlib
import logging
import time
import types

import numpy as np
import scipy.sparse as sp

from fairreadmit.dataset import EncodedDataset
from fairreadmit.learners import GbmHyper, gbm, model_to_json
from fairreadmit.learners import _kernels_numpy

log = logging.getLogger("bench_kernels")

KERNEL_NAMES = ("build_histograms", "find_best_splits", "partition", "predict_tree_csr")


def make_problem(n_rows, n_features, density, seed):
    rng = np.random.default_rng(seed)
    X = sp.random(n_rows, n_features, density=density, format="csr", random_state=seed,
                  data_rvs=lambda k: rng.integers(1, 5, k).astype(float))
    coef = rng.normal(size=n_features)
    logit = X @ coef - 0.5
    y = (rng.random(n_rows) < 1 / (1 + np.exp(-logit))).astype(np.int8)
    return EncodedDataset(
        X=X, y=y, P=np.ones((n_rows, 1), dtype=np.int8), w=rng.uniform(0.5, 2.0, n_rows),
        feature_names=[f"f{j}" for j in range(n_features)], row_ids=np.arange(n_rows),
        group_missing_mask=np.zeros((n_rows, 1), dtype=bool), group_names=["g"],
    )


def kernel_set(name):
    if name == "numpy":
        mod = _kernels_numpy
    else:
        from fairreadmit.learners import _kernels_numba as mod
    return types.SimpleNamespace(**{k: getattr(mod, k) for k in KERNEL_NAMES})


def bench(name, data, hyper, repeats):
    gbm._kernels = kernel_set(name)
    if name == "numba":
        # compile outside the timed region
        gbm.train_gbm(data.subset(np.arange(200)), GbmHyper(n_trees=1, max_depth=hyper.max_depth))
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        model = gbm.train_gbm(data, hyper)
        t1 = time.perf_counter()
        model.decision_function(data.X)
        t2 = time.perf_counter()
        times.append((t1 - t0, t2 - t1))
    fit, pred = np.min(np.array(times), axis=0)
    digest = hashlib.sha256(model_to_json(model).encode()).hexdigest()[:16]
    return fit, pred, digest


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--features", type=int, default=400)
    ap.add_argument("--density", type=float, default=0.02)
    ap.add_argument("--trees", type=int, default=10)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    data = make_problem(args.rows, args.features, args.density, args.seed)
    hyper = GbmHyper(n_trees=args.trees, max_depth=args.depth)
    log.info("rows=%d features=%d nnz=%d trees=%d depth=%d",
             args.rows, args.features, data.X.nnz, args.trees, args.depth)
    results = {}
    for name in ("numba", "numpy"):
        try:
            results[name] = bench(name, data, hyper, args.repeats)
        except ImportError:
            log.info("%s kernels unavailable, skipped", name)
            continue
        fit, pred, digest = results[name]
        log.info("%-6s fit %8.3fs  predict %8.3fs  model %s", name, fit, pred, digest)
    if len(results) == 2:
        same = results["numba"][2] == results["numpy"][2]
        log.info("speedup fit x%.1f, predict x%.1f; identical models: %s",
                 results["numpy"][0] / results["numba"][0], results["numpy"][1] / results["numba"][1], same)
        return 0 if same else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
