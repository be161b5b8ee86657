"""Perturbation-based local surrogate over code lines.

Lines are masked out at random, the classifier is re-run on every masked
variant, and a weighted ridge regression of the predicted-class probability
on the mask bits yields one weight per line. Normalized absolute weights are
bucketed into four severity levels for highlighting.
"""

from __future__ import annotations

import html as html_mod
import json
from dataclasses import dataclass

import numpy as np

from .corpus import CweClass, Sample
from .errors import ShapeError, ValidationError
from .linegraph import split_lines
from .util import rng

SEVERITIES = ("low", "moderate", "high", "critical")

_ANSI_COLORS = {"moderate": "\x1b[33m", "high": "\x1b[31m", "critical": "\x1b[1;31m"}
_ANSI_RESET = "\x1b[0m"


@dataclass
class ExplainConfig:
    n_perturbations: int = 200
    keep_probability: float = 0.5
    kernel_width: float | None = None   # None: 0.25 * sqrt(n) at explain time
    ridge_lambda: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.n_perturbations < 10:
            raise ValidationError(f"need at least 10 perturbations, got {self.n_perturbations}")
        if not 0.0 < self.keep_probability < 1.0:
            raise ValidationError(f"keep_probability must be in (0, 1), got {self.keep_probability}")
        if self.ridge_lambda < 0.0:
            raise ValidationError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")


@dataclass
class Explanation:
    sample_id: str
    predicted_class: int
    line_weights: np.ndarray
    severities: list[str]
    surrogate_r2: float


def perturb_masks(n: int, cfg: ExplainConfig) -> np.ndarray:
    """K line-keep masks: the first is all-ones, the rest Bernoulli(p) bits.

    All-zero draws are rejected and re-sampled so every mask keeps at least
    one line.
    """
    if n < 1:
        raise ValidationError(f"need at least one line, got n={n}")
    generator = rng(cfg.seed)
    masks = np.ones((cfg.n_perturbations, n), dtype=int)
    for k in range(1, cfg.n_perturbations):
        while True:
            bits = (generator.random(n) < cfg.keep_probability).astype(int)
            if bits.any():
                masks[k] = bits
                break
    return masks


def apply_mask(sample: Sample, mask) -> Sample:
    """Blank out the masked lines of a sample, preserving the line count."""
    mask = np.asarray(mask, dtype=int)
    lines = split_lines(sample.code)
    if mask.shape != (len(lines),):
        raise ShapeError(f"mask has shape {mask.shape}, expected ({len(lines)},)")
    kept = [line if bit else "" for line, bit in zip(lines, mask)]
    return Sample(id=sample.id + "#pert", code="\n".join(kept), label=sample.label)


def explain_lines(pipeline, sample: Sample, cfg: ExplainConfig | None = None) -> Explanation:
    """Attribute a pipeline's prediction for ``sample`` to its code lines.

    ``pipeline`` is anything exposing ``predict_proba(sample) -> probabilities``.
    Pipelines may additionally expose ``predict_proba_masked(sample, mask)``
    to evaluate masked variants with a stable graph shape (the bundled
    pipeline does; it is required for the file embedder, whose records are
    keyed by original sample ids). Probabilities of the originally predicted
    class on masked variants are regressed on the mask bits (ridge with
    unpenalized intercept, samples kernel-weighted by their distance from the
    unmasked original).
    """
    cfg = cfg or ExplainConfig()
    lines = split_lines(sample.code)
    n = len(lines)
    base_probs = np.asarray(pipeline.predict_proba(sample), dtype=float)
    predicted = int(np.argmax(base_probs))

    masked_proba = getattr(pipeline, "predict_proba_masked", None)
    masks = perturb_masks(n, cfg)
    targets = np.empty(len(masks))
    for k, mask in enumerate(masks):
        if masked_proba is not None:
            probs = np.asarray(masked_proba(sample, mask), dtype=float)
        else:
            probs = np.asarray(pipeline.predict_proba(apply_mask(sample, mask)), dtype=float)
        targets[k] = probs[predicted]

    sigma = cfg.kernel_width if cfg.kernel_width is not None else 0.25 * np.sqrt(n)
    distances = (n - masks.sum(axis=1)) / n      # normalized Hamming distance from all-ones
    kernel_weights = np.exp(-(distances**2) / sigma**2)

    coefs, r2 = solve_weighted_ridge(masks.astype(float), targets, kernel_weights, cfg.ridge_lambda)
    return Explanation(
        sample_id=sample.id,
        predicted_class=predicted,
        line_weights=coefs,
        severities=bucket_severities(coefs),
        surrogate_r2=r2,
    )


def solve_weighted_ridge(
    Z: np.ndarray, targets: np.ndarray, weights: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Weighted ridge with an unpenalized intercept.

    Solves the normal equations of ``sum_k w_k (y_k - b0 - z_k . beta)^2 +
    lam * |beta|^2`` directly; returns the coefficients and the weighted R^2.
    """
    k, n = Z.shape
    design = np.hstack([np.ones((k, 1)), Z])
    penalty = lam * np.eye(n + 1)
    penalty[0, 0] = 0.0
    wd = design * weights[:, None]
    lhs = design.T @ wd + penalty
    rhs = design.T @ (weights * targets)
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(lhs, rhs, rcond=None)[0]

    fitted = design @ beta
    residual = targets - fitted
    ss_res = float(weights @ residual**2)
    weighted_mean = float(weights @ targets) / float(weights.sum())
    ss_tot = float(weights @ (targets - weighted_mean) ** 2)
    if ss_tot < 1e-30:
        r2 = 1.0 if ss_res < 1e-30 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return beta[1:], r2


def bucket_severities(weights: np.ndarray) -> list[str]:
    """Four equal-width buckets over |weight| / max |weight| (all-zero: all low).

    Weights whose largest magnitude sits at solver-noise level (<= 1e-12)
    count as all-zero, so a constant pipeline never produces highlights.
    """
    magnitudes = np.abs(np.asarray(weights, dtype=float))
    top = magnitudes.max() if len(magnitudes) else 0.0
    if top <= 1e-12:
        return ["low"] * len(magnitudes)
    severities = []
    for w in magnitudes / top:
        if w < 0.25:
            severities.append("low")
        elif w < 0.5:
            severities.append("moderate")
        elif w < 0.75:
            severities.append("high")
        else:
            severities.append("critical")
    return severities


def render_report(sample: Sample, expl: Explanation, format: str = "ansi") -> str:
    """Render an explanation as colored terminal text, standalone HTML, or JSON."""
    lines = split_lines(sample.code)
    if len(lines) != len(expl.line_weights):
        raise ShapeError(
            f"explanation covers {len(expl.line_weights)} lines but sample has {len(lines)}"
        )
    if format == "json":
        return _render_json(sample, expl, lines)
    if format == "ansi":
        return _render_ansi(sample, expl, lines)
    if format == "html":
        return _render_html(sample, expl, lines)
    raise ValidationError(f"unknown report format {format!r}")


def _class_label(code: int) -> str:
    try:
        return CweClass(code).label
    except ValueError:
        return f"class-{code}"


def _render_json(sample: Sample, expl: Explanation, lines: list[str]) -> str:
    payload = {
        "id": expl.sample_id,
        "predicted_class": _class_label(expl.predicted_class),
        "surrogate_r2": expl.surrogate_r2,
        "lines": [
            {
                "line": i + 1,
                "text": line,
                "weight": float(expl.line_weights[i]),
                "severity": expl.severities[i],
            }
            for i, line in enumerate(lines)
        ],
    }
    return json.dumps(payload, indent=2)


def _render_ansi(sample: Sample, expl: Explanation, lines: list[str]) -> str:
    out = [f"{expl.sample_id}: predicted {_class_label(expl.predicted_class)} "
           f"(surrogate r2 {expl.surrogate_r2:.3f})"]
    for i, line in enumerate(lines):
        severity = expl.severities[i]
        prefix = f"{i + 1:>4} | "
        if severity == "low":
            out.append(prefix + line)
        else:
            out.append(f"{prefix}{_ANSI_COLORS[severity]}{line}{_ANSI_RESET}")
    return "\n".join(out)


def _render_html(sample: Sample, expl: Explanation, lines: list[str]) -> str:
    top = float(np.abs(expl.line_weights).max()) if len(lines) else 0.0
    rows = []
    for i, line in enumerate(lines):
        weight = float(expl.line_weights[i])
        intensity = abs(weight) / top if top > 0.0 else 0.0
        rows.append(
            f'<div class="line" data-severity="{expl.severities[i]}" '
            f'style="background: rgba(220, 50, 47, {intensity:.3f})">'
            f'<span class="no">{i + 1}</span>'
            f"<code>{html_mod.escape(line) or '&nbsp;'}</code></div>"
        )
    body = "\n".join(rows)
    return f"""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Line report for {html_mod.escape(expl.sample_id)}</title>
<style>
body {{ font-family: monospace; background: #fdf6e3; color: #073642; }}
.line {{ white-space: pre; padding: 1px 4px; }}
.line .no {{ display: inline-block; width: 3em; color: #93a1a1; }}
</style>
</head>
<body>
<h3>{html_mod.escape(expl.sample_id)} &mdash; predicted {_class_label(expl.predicted_class)}
(surrogate r&sup2; {expl.surrogate_r2:.3f})</h3>
{body}
</body>
</html>
"""
