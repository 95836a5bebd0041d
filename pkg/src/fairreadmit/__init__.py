"""Fairness-auditing pipeline for hospital readmission classifiers."""
from .dataset import EncodedDataset, GroupSpec, RecordTable, default_group_specs
from .fairness import FairnessReport, audit, disparate_impact, di_score
from .reweigh import ReweighingWeights, apply_weights, compute_weights

__version__ = "0.1.0"
