import numpy as np
import scipy.sparse as sp


class LearnerError(ValueError):
    pass


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return -np.logaddexp(0.0, -z)


def check_training_set(X, y, w):
    n = X.shape[0]
    if n == 0:
        raise LearnerError("empty training set")
    if len(y) != n or len(w) != n:
        raise LearnerError("X, y and w disagree on the number of rows")
    pos = float(np.sum(w[y == 1]))
    neg = float(np.sum(w[y == 0]))
    if pos <= 0 or neg <= 0:
        raise LearnerError("training set must contain both classes")
    data = X.data if sp.issparse(X) else np.asarray(X)
    if not np.all(np.isfinite(data)):
        raise LearnerError("non-finite feature value in training matrix")


def classify(scores, threshold=0.5):
    """1 where ``score >= threshold`` (boundary inclusive), else 0."""
    return (np.asarray(scores) >= threshold).astype(np.int8)
