"""Multiclass evaluation metrics and the cross-validation harness.

The report carries macro one-vs-rest AUC, accuracy, macro precision/recall/F1,
the generalized Matthews correlation coefficient, Cohen's kappa, and squared/
absolute error over integer class codes, plus per-class TP/FN accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CWE_LABELS, Corpus, kfold_partition
from .errors import FoldError, ShapeError, ValidationError

METRIC_NAMES = (
    "auc_macro_ovr",
    "accuracy",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "mcc",
    "kappa",
    "mse",
    "mae",
)


@dataclass
class PerClassStats:
    accuracy: float
    tp: int
    fn: int


@dataclass
class EvalReport:
    auc_macro_ovr: float
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    mcc: float
    kappa: float
    mse: float
    mae: float
    confusion: np.ndarray
    per_class: dict[int, PerClassStats]
    undefined_metric_warnings: int = 0

    def metric_values(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in METRIC_NAMES}

    def to_dict(self) -> dict:
        return {
            **self.metric_values(),
            "confusion": self.confusion.tolist(),
            "per_class": {
                _class_name(code): {"accuracy": s.accuracy, "tp": s.tp, "fn": s.fn}
                for code, s in sorted(self.per_class.items())
            },
            "undefined_metric_warnings": self.undefined_metric_warnings,
        }


@dataclass
class CrossValidationResult:
    fold_reports: list[EvalReport]
    mean: dict[str, float]
    std: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "folds": [r.to_dict() for r in self.fold_reports],
            "mean": self.mean,
            "std": self.std,
        }


def confusion(y_true, y_pred, n_classes: int = 5) -> np.ndarray:
    """Count matrix: entry [i][j] is how often true class i was predicted as j."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ShapeError(f"label vectors differ: {y_true.shape} vs {y_pred.shape}")
    if len(y_true) < 1:
        raise ShapeError("need at least one sample")
    if y_true.min() < 0 or y_true.max() >= n_classes or y_pred.min() < 0 or y_pred.max() >= n_classes:
        raise ValidationError(f"labels must lie in 0..{n_classes - 1}")
    matrix = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(y_true, y_pred):
        matrix[t, p] += 1
    return matrix


def compute_metrics(y_true, y_pred, y_proba, n_classes: int = 5) -> EvalReport:
    """Full evaluation report over predicted labels and class probabilities.

    Precision/recall/F1 and AUC are macro-averaged one-vs-rest; a class whose
    denominator is undefined contributes zero and bumps the warning counter.
    MSE and MAE are taken over integer class codes.
    """
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    y_proba = np.asarray(y_proba, dtype=float)
    if y_proba.shape != (len(y_true), n_classes):
        raise ShapeError(f"y_proba has shape {y_proba.shape}, expected ({len(y_true)}, {n_classes})")
    row_sums = y_proba.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-6):
        worst = int(np.argmax(np.abs(row_sums - 1.0)))
        raise ValidationError(f"probability row {worst} sums to {row_sums[worst]!r}, expected 1")

    cm = confusion(y_true, y_pred, n_classes)
    total = int(cm.sum())
    warnings = 0

    accuracy = float(np.trace(cm)) / total

    precisions = []
    recalls = []
    f1s = []
    for c in range(n_classes):
        tp = float(cm[c, c])
        pred_c = float(cm[:, c].sum())
        true_c = float(cm[c, :].sum())
        if pred_c == 0.0:
            precision = 0.0
            warnings += 1
        else:
            precision = tp / pred_c
        if true_c == 0.0:
            recall = 0.0
            warnings += 1
        else:
            recall = tp / true_c
        f1 = 0.0 if precision + recall == 0.0 else 2.0 * precision * recall / (precision + recall)
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)

    aucs = []
    for c in range(n_classes):
        auc = binary_auc(y_true == c, y_proba[:, c])
        if auc is None:
            aucs.append(0.0)
            warnings += 1
        else:
            aucs.append(auc)

    report = EvalReport(
        auc_macro_ovr=float(np.mean(aucs)),
        accuracy=accuracy,
        precision_macro=float(np.mean(precisions)),
        recall_macro=float(np.mean(recalls)),
        f1_macro=float(np.mean(f1s)),
        mcc=matthews_corrcoef(cm),
        kappa=cohen_kappa(cm),
        mse=float(np.mean((y_true - y_pred) ** 2)),
        mae=float(np.mean(np.abs(y_true - y_pred))),
        confusion=cm,
        per_class=_per_class_stats(cm),
        undefined_metric_warnings=warnings,
    )
    return report


def matthews_corrcoef(cm: np.ndarray) -> float:
    """Generalized multiclass MCC from the confusion matrix (0 when undefined)."""
    cm = np.asarray(cm, dtype=float)
    s = cm.sum()
    c = np.trace(cm)
    t = cm.sum(axis=1)  # true counts
    p = cm.sum(axis=0)  # predicted counts
    numerator = c * s - float(t @ p)
    denominator = np.sqrt((s**2 - float(p @ p)) * (s**2 - float(t @ t)))
    if denominator == 0.0:
        return 0.0
    return float(numerator / denominator)


def cohen_kappa(cm: np.ndarray) -> float:
    """Chance-corrected agreement from the confusion matrix (0 when chance is 1)."""
    cm = np.asarray(cm, dtype=float)
    s = cm.sum()
    po = np.trace(cm) / s
    pe = float(cm.sum(axis=1) @ cm.sum(axis=0)) / (s * s)
    if pe == 1.0:
        return 0.0
    return float((po - pe) / (1.0 - pe))


def binary_auc(labels, scores) -> float | None:
    """Area under the ROC curve by trapezoidal integration over score thresholds.

    Tied scores are grouped, which makes the result equal to the pairwise
    ranking statistic. Returns None when either class is absent.
    """
    labels = np.asarray(labels, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    pos = float(labels.sum())
    neg = float(len(labels) - pos)
    if pos == 0.0 or neg == 0.0:
        return None
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    area = 0.0
    tp = fp = 0.0
    prev_tpr = prev_fpr = 0.0
    i = 0
    n = len(labels)
    while i < n:
        j = i
        while j < n and sorted_scores[j] == sorted_scores[i]:
            j += 1
        tp += float(sorted_labels[i:j].sum())
        fp += float(j - i) - float(sorted_labels[i:j].sum())
        tpr = tp / pos
        fpr = fp / neg
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        prev_tpr, prev_fpr = tpr, fpr
        i = j
    return area


def cross_validate(pipeline_factory, corpus: Corpus, k: int = 10, seed: int = 0) -> CrossValidationResult:
    """Stratified k-fold cross-validation of a trainable pipeline.

    ``pipeline_factory(fold_seed)`` must return a fresh object exposing
    ``fit(corpus)`` and ``predict_proba(sample)``. Fold i trains on the other
    k-1 folds with seed ``seed + i``, so results are independent of any
    evaluation order. Training failures are re-raised with the fold attached.
    """
    folds = kfold_partition(corpus, k, seed)
    reports: list[EvalReport] = []
    for fold_index, held_out in enumerate(folds):
        try:
            train_idx = [i for i in range(len(corpus)) if i not in held_out]
            pipeline = pipeline_factory(seed + fold_index)
            pipeline.fit(corpus.subset(train_idx))
            test_samples = [corpus.samples[i] for i in sorted(held_out)]
            y_true = np.array([int(s.label) for s in test_samples])
            y_proba = np.array([pipeline.predict_proba(s) for s in test_samples])
            y_pred = np.argmax(y_proba, axis=1)
            reports.append(compute_metrics(y_true, y_pred, y_proba))
        except Exception as exc:
            raise FoldError(fold_index, str(exc)) from exc

    mean = {}
    std = {}
    for name in METRIC_NAMES:
        values = np.array([r.metric_values()[name] for r in reports])
        mean[name] = float(values.mean())
        std[name] = float(values.std(ddof=1))
    return CrossValidationResult(fold_reports=reports, mean=mean, std=std)


def render_metrics_table(report_dicts: dict[str, dict]) -> str:
    """An aligned text table of metric rows, one line per named report."""
    headers = ["model", "AUC", "Acc.", "Pre.", "Rec.", "F1", "MCC", "Kappa", "MSE", "MAE"]
    rows = []
    for name, report in report_dicts.items():
        rows.append(
            [name] + [f"{report[key]:.4f}" for key in METRIC_NAMES]
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def _class_name(code: int) -> str:
    return CWE_LABELS[code] if 0 <= code < len(CWE_LABELS) else f"class-{code}"


def _per_class_stats(cm: np.ndarray) -> dict[int, PerClassStats]:
    stats = {}
    for c in range(cm.shape[0]):
        tp = int(cm[c, c])
        fn = int(cm[c, :].sum()) - tp
        support = tp + fn
        stats[c] = PerClassStats(accuracy=tp / support if support else 0.0, tp=tp, fn=fn)
    return stats
