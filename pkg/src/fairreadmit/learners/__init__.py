"""Weight-aware binary classifiers: logistic regression and boosted trees."""
import json

from ._common import LearnerError, classify, sigmoid
from .gbm import GbmHyper, GbmModel, Tree, train_gbm
from .logistic import LinearModel, LogisticHyper, logistic_loss_and_grad, train_logistic

MODEL_FORMAT_VERSION = 1


def predict_scores(model, X):
    """Probability of the positive class (label 1) for every row of X."""
    return sigmoid(model.decision_function(X))


def model_to_json(model) -> str:
    doc = {"format_version": MODEL_FORMAT_VERSION, **model.to_dict()}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def model_from_json(text):
    doc = json.loads(text)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise LearnerError(f"unsupported model format version {doc.get('format_version')!r}")
    kind = doc.get("kind")
    if kind == "gbm":
        return GbmModel.from_dict(doc)
    if kind == "linear":
        return LinearModel.from_dict(doc)
    raise LearnerError(f"unknown model kind {kind!r}")


__all__ = [
    "GbmHyper", "GbmModel", "LearnerError", "LinearModel", "LogisticHyper", "Tree",
    "classify", "logistic_loss_and_grad", "model_from_json", "model_to_json",
    "predict_scores", "train_gbm", "train_logistic",
]
