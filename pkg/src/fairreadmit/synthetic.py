"""Synthetic files with the Diabetes 130-US column layout.

Used for tests, benchmarks and demos when the real UCI file is not at hand.
The label depends on prior inpatient visits, medication count and age band, so
younger patients are readmitted less often and the age audit is biased.
"""
import csv

import numpy as np

COLUMNS = [
    "encounter_id", "patient_nbr", "race", "gender", "age", "weight", "admission_type_id",
    "discharge_disposition_id", "admission_source_id", "time_in_hospital", "payer_code",
    "medical_specialty", "num_lab_procedures", "num_procedures", "num_medications",
    "number_outpatient", "number_emergency", "number_inpatient", "diag_1", "diag_2", "diag_3",
    "number_diagnoses", "max_glu_serum", "A1Cresult", "metformin", "repaglinide", "nateglinide",
    "chlorpropamide", "glimepiride", "acetohexamide", "glipizide", "glyburide", "tolbutamide",
    "pioglitazone", "rosiglitazone", "acarbose", "miglitol", "troglitazone", "tolazamide",
    "examide", "citoglipton", "insulin", "glyburide-metformin", "glipizide-metformin",
    "glimepiride-pioglitazone", "metformin-rosiglitazone", "metformin-pioglitazone", "change",
    "diabetesMed", "readmitted",
]

_DRUGS = COLUMNS[24:47]
_AGES = [f"[{10 * i}-{10 * i + 10})" for i in range(10)]
_AGE_P = np.array([0.02, 0.05, 0.016, 0.037, 0.095, 0.17, 0.221, 0.256, 0.169, 0.027])


def _pick(rng, values, p, n):
    p = np.asarray(p, dtype=float)
    return np.asarray(values, dtype=object)[rng.choice(len(values), size=n, p=p / p.sum())]


def generate_rows(n, seed=0, n_diag_codes=300):
    rng = np.random.default_rng(seed)
    age_idx = rng.choice(10, size=n, p=_AGE_P / _AGE_P.sum())
    inpatient = rng.poisson(0.6, n)
    meds = rng.poisson(16, n)
    time_in = rng.integers(1, 15, n)
    logit = -2.6 + 0.45 * inpatient + 0.03 * (meds - 16) + 0.04 * (time_in - 4)
    logit += np.where(age_idx < 2, -1.2, 0.0) + rng.normal(0, 0.3, n)
    p = 1 / (1 + np.exp(-logit))
    u = rng.random(n)
    readmitted = np.where(u < p, "<30", np.where(u < p + 0.35, ">30", "NO"))
    diag_codes = [str(250 + i) if i % 7 else f"V{i % 90:02d}" for i in range(n_diag_codes)]
    diag_p = 1.0 / np.arange(1, n_diag_codes + 1)
    cols = {
        "encounter_id": np.arange(1, n + 1) * 7 + 1000,
        "patient_nbr": rng.integers(100000, 999999, n),
        "race": _pick(rng, ["Caucasian", "AfricanAmerican", "Hispanic", "Asian", "Other", "?"],
                      [75, 19, 2, 0.6, 1.5, 2.2], n),
        "gender": _pick(rng, ["Female", "Male", "Unknown/Invalid"], [53.8, 46.2, 0.003], n),
        "age": np.asarray(_AGES, dtype=object)[age_idx],
        "weight": _pick(rng, ["?", "[50-75)", "[75-100)", "[100-125)"], [96.9, 1, 1.3, 0.8], n),
        "admission_type_id": rng.integers(1, 9, n),
        "discharge_disposition_id": _pick(rng, list(range(1, 30)), np.r_[60, np.ones(28)], n),
        "admission_source_id": _pick(rng, [1, 2, 4, 6, 7, 17], [29, 1, 3, 2, 56, 7], n),
        "time_in_hospital": time_in,
        "payer_code": _pick(rng, ["?", "MC", "HM", "SP", "BC", "MD"], [40, 32, 6, 5, 5, 4], n),
        "medical_specialty": _pick(rng, ["?", "InternalMedicine", "Emergency/Trauma", "Cardiology",
                                         "Family/GeneralPractice", "Surgery-General"],
                                   [49, 14, 7, 5, 7, 3], n),
        "num_lab_procedures": np.clip(rng.normal(43, 19, n).round(), 1, 132).astype(int),
        "num_procedures": rng.integers(0, 7, n),
        "num_medications": np.maximum(meds, 1),
        "number_outpatient": rng.poisson(0.37, n),
        "number_emergency": rng.poisson(0.2, n),
        "number_inpatient": inpatient,
        "diag_1": _pick(rng, diag_codes, diag_p, n),
        "diag_2": _pick(rng, diag_codes + ["?"], np.r_[diag_p, 0.01], n),
        "diag_3": _pick(rng, diag_codes + ["?"], np.r_[diag_p, 0.02], n),
        "number_diagnoses": rng.integers(1, 17, n),
        "max_glu_serum": _pick(rng, ["None", "Norm", ">200", ">300"], [94.7, 2.6, 1.5, 1.2], n),
        "A1Cresult": _pick(rng, ["None", ">8", "Norm", ">7"], [83.3, 8.1, 4.9, 3.7], n),
        "change": _pick(rng, ["No", "Ch"], [54, 46], n),
        "diabetesMed": _pick(rng, ["Yes", "No"], [77, 23], n),
        "readmitted": readmitted,
    }
    for drug in _DRUGS:
        common = drug in ("metformin", "insulin", "glipizide", "glyburide")
        probs = [80, 18, 1, 1] if common else [99.5, 0.5, 0, 0]
        cols[drug] = _pick(rng, ["No", "Steady", "Up", "Down"], probs, n)
    return [[str(cols[c][i]) for c in COLUMNS] for i in range(n)]


def write_csv(path, n, seed=0, **kwargs):
    rows = generate_rows(n, seed, **kwargs)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    return path
