import csv
import os
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from fairreadmit.dataset import EncodedDataset, GroupSpec

UCI_CANDIDATES = [
    os.environ.get("FAIRREADMIT_UCI_CSV", ""),
    str(Path(__file__).resolve().parents[1] / "data" / "diabetic_data.csv"),
]


def uci_path():
    for p in UCI_CANDIDATES:
        if p and os.path.isfile(p):
            return p
    return None


def gender_spec(favorable_label=0):
    return GroupSpec("gender", "gender", {"in": ["Male"]}, {"in": ["Female"]}, favorable_label)


def make_dataset(X, y, group=None, w=None, mask=None, name="gender"):
    if not sp.issparse(X):
        X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    group = np.ones(n, dtype=np.int8) if group is None else np.asarray(group)
    mask = np.zeros(n, dtype=bool) if mask is None else np.asarray(mask)
    return EncodedDataset(
        X=X,
        y=np.asarray(y),
        P=group.reshape(-1, 1),
        w=np.ones(n) if w is None else np.asarray(w, dtype=np.float64),
        feature_names=[f"f{j}" for j in range(X.shape[1])],
        row_ids=np.arange(n),
        group_missing_mask=mask.reshape(-1, 1),
        group_names=[name],
    )


# T10: privileged 4 favorable + 2 unfavorable, unprivileged 1 favorable + 3 unfavorable.
# Favorable label is 0 (not readmitted within 30 days).
T10_GROUP = np.array([1, 1, 1, 1, 1, 1, 0, 0, 0, 0], dtype=np.int8)
T10_Y = np.array([0, 0, 0, 0, 1, 1, 0, 1, 1, 1], dtype=np.int8)


@pytest.fixture
def t10():
    X = np.arange(10, dtype=float).reshape(-1, 1)
    return make_dataset(X, T10_Y, T10_GROUP)


def write_t10_csv(path, copies=1):
    """T10 as a CSV: gender and readmitted columns plus one numeric feature."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["encounter_id", "gender", "num_lab_procedures", "readmitted"])
        eid = 1
        for c in range(copies):
            for g, y in zip(T10_GROUP, T10_Y):
                label = "<30" if y == 1 else ("NO" if eid % 2 else ">30")
                wr.writerow([eid, "Male" if g == 1 else "Female", (eid * 7) % 23 + c, label])
                eid += 1
    return path


def t10_config_dict(data_path, **overrides):
    cfg = {
        "data_path": str(data_path),
        "id_columns": ["encounter_id"],
        "numeric_columns": ["num_lab_procedures"],
        "group_specs": [gender_spec(0).to_dict()],
        "mitigation_spec": "gender",
        "learners": {
            "XGBoost": {"kind": "gbm", "n_trees": 5, "max_depth": 2, "learning_rate": 0.1,
                        "l2_leaf_penalty": 1.0, "min_child_weight": 0.0},
        },
    }
    cfg.update(overrides)
    return cfg


# brute-force counting oracle --------------------------------------------------

def counting_oracle(y, y_hat, group, fav):
    """Direct counting with exact rationals, independent of the vectorised code."""
    rows = list(zip(y, y_hat, group))

    def rate(pred, cond):
        sel = [r for r in rows if cond(r)]
        if not sel:
            return None
        return Fraction(sum(1 for r in sel if pred(r)), len(sel))

    out = {}
    f_p = rate(lambda r: r[1] == fav, lambda r: r[2] == 1)
    f_u = rate(lambda r: r[1] == fav, lambda r: r[2] == 0)
    out["di"] = None if f_p in (None, 0) or f_u is None else f_u / f_p
    tpr = {g: rate(lambda r: r[1] == fav, lambda r, g=g: r[2] == g and r[0] == fav) for g in (0, 1)}
    fpr = {g: rate(lambda r: r[1] == fav, lambda r, g=g: r[2] == g and r[0] != fav) for g in (0, 1)}
    out["eq_opp"] = None if None in tpr.values() else tpr[0] - tpr[1]
    out["avg_odd"] = (
        None if None in tpr.values() or None in fpr.values()
        else Fraction(1, 2) * ((fpr[0] - fpr[1]) + (tpr[0] - tpr[1]))
    )
    t_all = rate(lambda r: r[1] == 1, lambda r: r[0] == 1)
    n_all = rate(lambda r: r[1] == 0, lambda r: r[0] == 0)
    out["bacc"] = None if t_all is None or n_all is None else Fraction(1, 2) * (t_all + n_all)
    return out


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_RESULTS = []


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
