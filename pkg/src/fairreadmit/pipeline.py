"""End-to-end flow: ingest, audit, mitigate, split, train, evaluate, re-audit, report."""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from . import dataset, fairness, posthoc, reweigh
from .dataset import DEFAULT_ID_COLUMNS, DEFAULT_LABEL_COLUMN, DEFAULT_NUMERIC_COLUMNS, GroupSpec
from .learners import (
    GbmHyper,
    LogisticHyper,
    classify,
    predict_scores,
    train_gbm,
    train_logistic,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# RF and GBM are stand-ins built from the boosted-tree learner (no bagging):
# RF uses fewer, deeper trees; GBM is plain Newton boosting without a leaf penalty.
DEFAULT_LEARNERS = {
    "LG": {"kind": "logistic", "l2": 1e-4, "learning_rate": 0.1, "max_iters": 500, "tol": 1e-6},
    "RF": {
        "kind": "gbm",
        "n_trees": 30,
        "max_depth": 6,
        "learning_rate": 0.1,
        "l2_leaf_penalty": 1.0,
        "min_child_weight": 5.0,
    },
    "GBM": {
        "kind": "gbm",
        "n_trees": 100,
        "max_depth": 3,
        "learning_rate": 0.1,
        "l2_leaf_penalty": 0.0,
        "min_child_weight": 1.0,
    },
    "XGBoost": {
        "kind": "gbm",
        "n_trees": 100,
        "max_depth": 3,
        "learning_rate": 0.1,
        "l2_leaf_penalty": 1.0,
        "min_child_weight": 1.0,
    },
}


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    """A stage failed; ``report`` holds everything computed before the failure."""

    def __init__(self, stage, message, report=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message
        self.report = report


def _default_specs():
    return [s.to_dict() for s in dataset.default_group_specs(favorable_label=1)]


@dataclass
class PipelineConfig:
    """All run settings; loaded from a JSON document whose keys are these field names."""

    data_path: str | None = None
    id_columns: list = field(default_factory=lambda: list(DEFAULT_ID_COLUMNS))
    label_column: str = DEFAULT_LABEL_COLUMN
    numeric_columns: list = field(default_factory=lambda: list(DEFAULT_NUMERIC_COLUMNS))
    group_specs: list = field(default_factory=_default_specs)
    mitigation_spec: str = "age"
    audit_threshold: float = 0.8
    test_fraction: float = 0.3
    seed: int = 42
    exclude_protected_features: bool = False
    cohort_filter_column: str = "discharge_disposition_id"
    cohort_filter_exclude: list = field(default_factory=list)
    learners: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_LEARNERS)))
    primary_learner: str = "XGBoost"
    decision_threshold: object = "prior"
    posthoc_enabled: bool = False
    posthoc_cost_kind: str = "gfnr"
    max_reprocess: int = 0
    report_path: str | None = None

    def __post_init__(self):
        self.validate()

    def specs(self):
        return [GroupSpec.from_dict(d) if isinstance(d, dict) else d for d in self.group_specs]

    def spec(self, name):
        for s in self.specs():
            if s.name == name:
                return s
        raise ConfigError(f"no group spec named {name!r}")

    def validate(self):
        try:
            specs = self.specs()
        except (dataset.DatasetError, TypeError) as exc:
            raise ConfigError(f"invalid group spec: {exc}") from None
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ConfigError("group spec names must be unique")
        if self.mitigation_spec not in names:
            raise ConfigError(f"mitigation_spec {self.mitigation_spec!r} is not one of {names}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must be strictly between 0 and 1")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if self.audit_threshold < 0 or self.audit_threshold > 1:
            raise ConfigError("audit_threshold must be in [0, 1]")
        if not self.learners:
            raise ConfigError("at least one learner is required")
        for name, spec in self.learners.items():
            _learner_hyper(name, spec)
        if self.primary_learner not in self.learners:
            raise ConfigError(f"primary_learner {self.primary_learner!r} is not a configured learner")
        if not (self.decision_threshold == "prior" or isinstance(self.decision_threshold, (int, float))):
            raise ConfigError("decision_threshold must be 'prior' or a number in [0, 1]")
        if isinstance(self.decision_threshold, (int, float)) and not 0 <= self.decision_threshold <= 1:
            raise ConfigError("decision_threshold must be in [0, 1]")
        if self.posthoc_cost_kind not in posthoc.COST_KINDS:
            raise ConfigError(f"posthoc_cost_kind must be one of {posthoc.COST_KINDS}")
        if self.max_reprocess < 0:
            raise ConfigError("max_reprocess must be non-negative")

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["group_specs"] = [s.to_dict() for s in self.specs()]
        return json.loads(json.dumps(out))

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return PipelineConfig.from_dict(doc)


def _learner_hyper(name, spec):
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "gbm":
            return kind, GbmHyper(**spec)
        if kind == "logistic":
            return kind, LogisticHyper(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"learner {name!r}: {exc}") from None
    raise ConfigError(f"learner {name!r}: kind must be 'gbm' or 'logistic', got {kind!r}")


def _train(kind, hyper, data):
    return train_gbm(data, hyper) if kind == "gbm" else train_logistic(data, hyper)


class _Stage:
    def __init__(self, report):
        self.report = report
        self.name = None

    def __call__(self, name):
        self.name = name
        logger.info("stage: %s", name)
        return self

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None or isinstance(exc, PipelineError):
            return False
        self.report["error"] = {"stage": self.name, "type": exc_type.__name__, "message": str(exc)}
        self.report["decision_log"].append(f"error in stage {self.name}: {exc}")
        raise PipelineError(self.name, str(exc), self.report) from exc


def _new_report(config):
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "decision_log": [],
        "evaluation_split": "test",
        "error": None,
    }


def load_table(config, stage):
    with stage("load"):
        if not config.data_path:
            raise FileNotFoundError("no data_path configured")
        table = dataset.load_csv(config.data_path)
    with stage("clean"):
        if config.cohort_filter_exclude:
            before = table.n_rows
            table = dataset.filter_rows(table, config.cohort_filter_column, config.cohort_filter_exclude)
            stage.report["decision_log"].append(
                f"cohort filter on {config.cohort_filter_column}: dropped {before - table.n_rows} rows"
            )
    return table


def _audit_line(spec, rep):
    return (
        f"dataset audit [{spec.name}] favorable_label={spec.favorable_label}: DI={rep.di:.6f} "
        f"di_score={rep.di_score:.6f} -> {'biased' if rep.biased else 'not biased'}"
    )


def audit_dataset(config: PipelineConfig) -> dict:
    """Label-level audit of every group spec; no training."""
    report = _new_report(config)
    stage = _Stage(report)
    table = load_table(config, stage)
    with stage("audit"):
        y = dataset.derive_label(table, config.label_column)
        report["dataset_audit"] = {}
        for spec in config.specs():
            group, mask = dataset.binarize_protected(table, spec)
            rep = fairness.audit(y, group, mask, spec, config.audit_threshold)
            report["dataset_audit"][spec.name] = rep.to_dict()
            report["decision_log"].append(_audit_line(spec, rep))
    return report


def _threshold(config, train_data):
    if config.decision_threshold == "prior":
        return float(np.average(train_data.y, weights=train_data.w))
    return float(config.decision_threshold)


def _evaluate_all(config, y, y_hat, test):
    out = {}
    for spec in config.specs():
        group, mask = test.group(spec.name)
        out[spec.name] = fairness.evaluate(y, y_hat, group, mask, spec, config.audit_threshold).to_dict()
    return out


def run(config: PipelineConfig, force_mitigation=False) -> dict:
    """Execute the full flow and return the report as a JSON-ready dict.

    Raises :class:`PipelineError` (carrying the partial report) on failure.
    """
    report = _new_report(config)
    stage = _Stage(report)
    log = report["decision_log"]
    table = load_table(config, stage)
    mit = config.spec(config.mitigation_spec)

    with stage("encode"):
        enc_cfg = dataset.EncodeConfig(
            id_columns=tuple(config.id_columns),
            label_column=config.label_column,
            numeric_columns=tuple(config.numeric_columns),
            group_specs=tuple(config.specs()),
            exclude_protected=config.exclude_protected_features,
        )
        data = dataset.encode_features(table, enc_cfg)
        del table
        log.append(
            "preprocessing: numeric '?' -> column median, nominal '?' -> explicit missing category; "
            f"protected attributes {'excluded from' if config.exclude_protected_features else 'included in'} "
            f"features; cohort filter {'on' if config.cohort_filter_exclude else 'off'}; "
            f"{data.n_rows} rows x {data.n_features} features"
        )

    with stage("audit"):
        report["dataset_audit"] = {}
        for spec in config.specs():
            group, mask = data.group(spec.name)
            rep = fairness.audit(data.y, group, mask, spec, config.audit_threshold)
            report["dataset_audit"][spec.name] = rep.to_dict()
            log.append(_audit_line(spec, rep))
        mitigate = report["dataset_audit"][mit.name]["biased"]

    with stage("split"):
        train, test = dataset.split(data, config.test_fraction, config.seed)
        log.append(
            f"split: stratified on y, test_fraction={config.test_fraction}, seed={config.seed}; "
            "reweighing weights from the training split, metrics on the test split"
        )
        report["dataset"] = {
            "n_rows": data.n_rows,
            "n_features": data.n_features,
            "n_train": train.n_rows,
            "n_test": test.n_rows,
            "positive_rate": float(data.y.mean()),
        }
        del data

    attempt = 0
    while True:
        forced = force_mitigation and not mitigate
        _mitigate_train_evaluate(config, report, train, test, mit, mitigate or force_mitigation, forced)
        verdict = report["final_verdict"]
        if verdict == "deploy" or attempt >= config.max_reprocess:
            break
        if report["mitigation"]["applied"]:
            log.append("reprocess requested but reweighing is already applied; stopping")
            break
        attempt += 1
        force_mitigation = True
        log.append(f"reprocess attempt {attempt}: forcing reweighing on {mit.name}")

    log.append(f"final verdict: {report['final_verdict']}")
    return report


def _mitigate_train_evaluate(config, report, train, test, mit, apply_rw, forced):
    stage = _Stage(report)
    log = report["decision_log"]
    with stage("mitigate"):
        if apply_rw:
            rw = reweigh.compute_weights(train, mit)
            train_t = reweigh.apply_weights(train, rw, mit)
            group, mask = train_t.group(mit.name)
            weighted_di = fairness.disparate_impact(train_t.y, group, mask, mit.favorable_label, train_t.w)
            reason = "forced by reprocess" if forced else "biased"
            log.append(f"dataset audit [{mit.name}]: {reason} -> reweighing applied on training split")
            report["mitigation"] = {
                "applied": True,
                "spec": mit.name,
                "reweighing_cells": rw.to_dict(),
                "train_weighted_di": weighted_di,
            }
        else:
            train_t = train
            log.append(f"dataset audit [{mit.name}]: not biased -> standard preprocessing, unit weights")
            report["mitigation"] = {"applied": False, "spec": mit.name, "reweighing_cells": None,
                                    "train_weighted_di": None}

    report["learners"] = {}
    scores = {}
    for name in _learner_order(config.learners):
        kind, hyper = _learner_hyper(name, config.learners[name])
        with stage("train"):
            model_o = _train(kind, hyper, train)
            model_t = _train(kind, hyper, train_t) if apply_rw else model_o
            log.append(f"trained {name} ({kind}) on original and {'reweighed' if apply_rw else 'unit'} weights")
        with stage("evaluate"):
            thr_o = _threshold(config, train)
            thr_t = _threshold(config, train_t)
            s_o = predict_scores(model_o, test.X)
            s_t = predict_scores(model_t, test.X)
            report["learners"][name] = {
                "kind": kind,
                "decision_threshold": {"original": thr_o, "transformed": thr_t},
                "original": _evaluate_all(config, test.y, classify(s_o, thr_o), test),
                "transformed": _evaluate_all(config, test.y, classify(s_t, thr_t), test),
            }
            scores[name] = (model_o, s_o, thr_o)

    report["posthoc"] = None
    if config.posthoc_enabled:
        with stage("posthoc"):
            model_o, s_o, thr_o = scores[config.primary_learner]
            group_tr, mask_tr = train.group(mit.name)
            s_train = predict_scores(model_o, train.X)
            mixer = posthoc.fit_mixer(s_train, train.y, group_tr, mask_tr, config.posthoc_cost_kind)
            group_te, mask_te = test.group(mit.name)
            mixed = posthoc.apply_mixer(mixer, s_o, group_te, mask_te, seed=config.seed)
            y_hat = classify(mixed, thr_o)
            report["posthoc"] = {
                "learner": config.primary_learner,
                "mixer": mixer.to_dict(),
                "result": fairness.evaluate(
                    test.y, y_hat, group_te, mask_te, mit, config.audit_threshold
                ).to_dict(),
            }
            log.append(
                f"posthoc {config.posthoc_cost_kind} mixing on {mixer.target_group} group, "
                f"p={mixer.mix_probability:.6f}{' (clamped)' if mixer.clamped else ''}"
            )

    with stage("reaudit"):
        reaudit = report["learners"][config.primary_learner]["transformed"][mit.name]
        report["reaudit"] = {"learner": config.primary_learner, "spec": mit.name, **reaudit}
        verdict = "reprocess" if reaudit["biased"] else "deploy"
        log.append(
            f"test re-audit [{mit.name}] {config.primary_learner} transformed: DI={reaudit['di']:.6f} -> "
            f"{'biased' if reaudit['biased'] else 'not biased'}"
        )
        report["final_verdict"] = verdict


# --- rendering -------------------------------------------------------------

METRIC_KEYS = frozenset({
    "di", "di_score", "avg_odd", "eq_opp", "balanced_acc", "favorable_rate_priv",
    "favorable_rate_unpriv", "train_weighted_di", "weights", "cell_counts", "group_totals",
    "label_totals", "total", "mix_probability", "base_rate", "fitted_costs", "positive_rate",
    "original", "transformed",
})


def _fmt_float(x, fixed):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if fixed:
        return f"{x:.6f}"
    return json.dumps(x)


def canonical_json(obj, fixed=False, indent=0) -> str:
    """Sorted keys, two-space indent; floats under metric keys printed with 6 decimals."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj):
            v = canonical_json(obj[k], fixed or k in METRIC_KEYS, indent + 1)
            items.append(f"{pad}{json.dumps(str(k))}: {v}")
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + canonical_json(v, fixed, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj), fixed)
    return json.dumps(obj)


_ROWS = (("acc", "balanced_acc"), ("DI", "di_score"), ("avg_odd", "avg_odd"), ("eq_opp", "eq_opp"))


def _cell(v):
    if v is None:
        return "-"
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return f"{v:.6f}"


_TABLE_ORDER = ("LG", "RF", "GBM", "XGBoost")


def _learner_order(names):
    known = [n for n in _TABLE_ORDER if n in names]
    return known + sorted(n for n in names if n not in _TABLE_ORDER)


def table_text(report) -> str:
    """Fixed-width before/after table, one block per learner, for the mitigation attribute."""
    mit = report["config"]["mitigation_spec"]
    lines = [f"{'':<10}{'Original':>14}{'Transformed':>14}"]
    for name in _learner_order(report.get("learners", {})):
        res = report["learners"][name]
        lines.append(f"{name:<10}")
        for label, key in _ROWS:
            o = res["original"][mit][key]
            t = res["transformed"][mit][key]
            lines.append(f"{label:<10}{_cell(o):>14}{_cell(t):>14}")
    return "\n".join(lines) + "\n"


def comparison_csv(report) -> str:
    mit = report["config"]["mitigation_spec"]
    primary = report["config"]["primary_learner"]
    res = report["learners"][primary]
    rows = [
        ("RW", res["transformed"][mit]),
        ("CEOD", report["posthoc"]["result"]),
        ("none", res["original"][mit]),
    ]
    out = ["method,balanced_accuracy,di_score"]
    out += [f"{m},{_cell(r['balanced_acc'])},{_cell(r['di_score'])}" for m, r in rows]
    return "\n".join(out) + "\n"


def render_report(report, path) -> list:
    """Write report.json, table.txt and (with posthoc results) comparison.csv under ``path``."""
    os.makedirs(path, exist_ok=True)
    written = []
    target = os.path.join(path, "report.json")
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(report) + "\n")
    written.append(target)
    if report.get("error") is None and report.get("learners"):
        target = os.path.join(path, "table.txt")
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(table_text(report))
        written.append(target)
        if report.get("posthoc"):
            target = os.path.join(path, "comparison.csv")
            with open(target, "w", encoding="utf-8") as fh:
                fh.write(comparison_csv(report))
            written.append(target)
    return written
