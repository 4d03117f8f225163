"""Report assembly: cumulative curves, AUC, Multi-Match tables, correlation.

Writes delimited data (curves.csv, whmm.csv, mm_scatter.csv, report.json)
plus rendered figures for the curves and the whMM/hmMM scatter per model.
The human baseline always comes from the dataset's own scanpaths.
"""
from __future__ import annotations

import csv
import json
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import DatasetSpec, Scanpath, Trial
from .metrics import (
    MultiMatchScore,
    auc,
    cumulative_curve,
    human_model_mm,
    mean_multimatch,
    mm_correlation,
    within_human_mm,
)


def _curve_or_none(scanpaths, n_max):
    if not scanpaths:
        return None
    return cumulative_curve(scanpaths, n_max)


def human_baseline(spec: DatasetSpec, trials: list[Trial]) -> dict:
    """Per-subject cumulative curves and AUCs; the aggregate human AUC is the
    mean of per-subject AUCs (subjects ran under their own saccade limits)."""
    by_subject: dict[str, list[Scanpath]] = defaultdict(list)
    for t in trials:
        for s in t.human_scanpaths:
            by_subject[s.source_id].append(s)
    subjects = sorted(by_subject)
    per_subject = {}
    curves = []
    for subject in subjects:
        curve = cumulative_curve(by_subject[subject], spec.max_fixations)
        per_subject[subject] = auc(curve)
        curves.append(curve.values)
    mean_curve = None
    if curves:
        mean_curve = [
            sum(c[k] for c in curves) / len(curves) for k in range(spec.max_fixations)
        ]
    return {
        "n_subjects": len(subjects),
        "per_subject_auc": per_subject,
        "auc": (sum(per_subject.values()) / len(per_subject)) if per_subject else None,
        "mean_curve": mean_curve,
    }


def build_report(
    spec: DatasetSpec,
    trials: list[Trial],
    model_scanpaths: dict[str, list[tuple[str, Scanpath]]],
    out_dir: str,
    figures: bool = True,
    min_fixations: int = 3,
    corr_method: str = "pearson",
) -> dict:
    """Score every scanpath source against the dataset and write the report.

    Only found scanpaths with enough fixations enter the Multi-Match
    statistics; cumulative curves count every scanpath. Model entries that
    reference unknown trials produce warnings, not failures.
    """
    os.makedirs(out_dir, exist_ok=True)
    trials = sorted(trials, key=lambda t: t.trial_id)
    trial_by_id = {t.trial_id: t for t in trials}
    n_max = spec.max_fixations
    screen = spec.screen
    warnings: list[str] = []

    human = human_baseline(spec, trials)

    # Within-human similarity is a property of the trial alone.
    whmm_by_trial: dict[str, MultiMatchScore] = {}
    for t in trials:
        wh = within_human_mm(t, screen, min_fixations=min_fixations)
        if wh is not None:
            whmm_by_trial[t.trial_id] = wh

    models_summary = {}
    scatter_rows = []
    model_curves = {}
    for model in sorted(model_scanpaths):
        entries = model_scanpaths[model]
        paths = []
        per_trial_hm: dict[str, MultiMatchScore] = {}
        for trial_id, s in entries:
            trial = trial_by_id.get(trial_id)
            if trial is None:
                warnings.append(f"{model}: unknown trial_id {trial_id!r}")
                continue
            paths.append(s)
            hm = human_model_mm(trial, s, screen, min_fixations=min_fixations)
            if hm is not None:
                per_trial_hm[trial_id] = hm
            scatter_rows.append(
                {
                    "trial_id": trial_id,
                    "model": model,
                    "hmMM": hm,
                    "whMM": whmm_by_trial.get(trial_id),
                    "found": s.target_found,
                    "n_saccades": s.n_saccades,
                }
            )
        curve = _curve_or_none(paths, n_max)
        model_curves[model] = curve
        points = [
            (per_trial_hm[tid].avg, whmm_by_trial[tid].avg)
            for tid in sorted(per_trial_hm)
            if tid in whmm_by_trial
        ]
        corr = mm_correlation(points, method=corr_method) if len(points) >= 3 else None
        hm_values = [per_trial_hm[tid] for tid in sorted(per_trial_hm)]
        models_summary[model] = {
            "n_scanpaths": len(paths),
            "n_found": sum(1 for s in paths if s.target_found),
            "auc": auc(curve) if curve is not None else None,
            "curve": list(curve.values) if curve is not None else None,
            "mm": (
                _score_dict(mean_multimatch(hm_values)) if hm_values else None
            ),
            "n_mm_trials": len(hm_values),
            "correlation": corr,
        }

    per_trial = {}
    for t in trials:
        wh = whmm_by_trial.get(t.trial_id)
        per_trial[t.trial_id] = {
            "whMM": _score_dict(wh) if wh is not None else None,
            "models": {},
        }
    for r in scatter_rows:
        record = per_trial.get(r["trial_id"])
        if record is None:
            continue
        record["models"][r["model"]] = {
            "hmMM": _score_dict(r["hmMM"]) if r["hmMM"] is not None else None,
            "found": r["found"],
            "n_saccades": r["n_saccades"],
        }

    whmm_values = [whmm_by_trial[tid] for tid in sorted(whmm_by_trial)]
    report = {
        "dataset": spec.name,
        "n_trials": len(trials),
        "max_fixations": n_max,
        "human": {
            "n_subjects": human["n_subjects"],
            "auc": human["auc"],
            "per_subject_auc": human["per_subject_auc"],
            "whmm": _score_dict(mean_multimatch(whmm_values)) if whmm_values else None,
            "n_whmm_trials": len(whmm_values),
        },
        "models": models_summary,
        "trials": per_trial,
        "warnings": warnings,
    }

    _write_curves_csv(os.path.join(out_dir, "curves.csv"), n_max, human, model_curves)
    _write_whmm_csv(os.path.join(out_dir, "whmm.csv"), trials, whmm_by_trial)
    _write_scatter_csv(os.path.join(out_dir, "mm_scatter.csv"), scatter_rows)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if figures:
        _render_figures(out_dir, spec, n_max, human, model_curves, scatter_rows)
    return report


def _score_dict(score: MultiMatchScore) -> dict:
    return {
        "shape": score.shape,
        "direction": score.direction,
        "length": score.length,
        "position": score.position,
        "avg": score.avg,
    }


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _write_curves_csv(path, n_max, human, model_curves):
    models = sorted(model_curves)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "human"] + models)
        for k in range(n_max):
            row = [str(k + 1)]
            row.append(_fmt(human["mean_curve"][k]) if human["mean_curve"] else "n/a")
            for m in models:
                curve = model_curves[m]
                row.append(_fmt(curve.values[k]) if curve is not None else "n/a")
            writer.writerow(row)


def _write_whmm_csv(path, trials, whmm_by_trial):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial_id", "whMM_shape", "whMM_direction", "whMM_length", "whMM_position", "whMM_avg"])
        for t in trials:
            wh = whmm_by_trial.get(t.trial_id)
            if wh is None:
                writer.writerow([t.trial_id, "n/a", "n/a", "n/a", "n/a", "n/a"])
            else:
                writer.writerow(
                    [t.trial_id] + [_fmt(v) for v in (wh.shape, wh.direction, wh.length, wh.position, wh.avg)]
                )


def _write_scatter_csv(path, rows):
    header = [
        "trial_id", "model",
        "hmMM_shape", "hmMM_direction", "hmMM_length", "hmMM_position", "hmMM_avg",
        "whMM_shape", "whMM_direction", "whMM_length", "whMM_position", "whMM_avg",
        "found", "n_saccades",
    ]
    rows = sorted(rows, key=lambda r: (r["model"], r["trial_id"]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            hm, wh = r["hmMM"], r["whMM"]
            hm_cols = (
                [_fmt(v) for v in (hm.shape, hm.direction, hm.length, hm.position, hm.avg)]
                if hm is not None
                else ["n/a"] * 5
            )
            wh_cols = (
                [_fmt(v) for v in (wh.shape, wh.direction, wh.length, wh.position, wh.avg)]
                if wh is not None
                else ["n/a"] * 5
            )
            writer.writerow(
                [r["trial_id"], r["model"]] + hm_cols + wh_cols + [_fmt(r["found"]), str(r["n_saccades"])]
            )


def _render_figures(out_dir, spec, n_max, human, model_curves, scatter_rows):
    budgets = list(range(1, n_max + 1))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if human["mean_curve"]:
        ax.plot(budgets, human["mean_curve"], marker="o", color="black", label="humans")
    for model in sorted(model_curves):
        curve = model_curves[model]
        if curve is not None:
            ax.plot(budgets, list(curve.values), marker="s", label=model)
    ax.set_xlabel("number of fixations")
    ax.set_ylabel("fraction of targets found")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"{spec.name}: cumulative performance")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "curves.png"), dpi=120)
    plt.close(fig)

    by_model = defaultdict(list)
    for r in scatter_rows:
        if r["hmMM"] is not None and r["whMM"] is not None:
            by_model[r["model"]].append((r["hmMM"].avg, r["whMM"].avg))
    for model in sorted(by_model):
        pts = by_model[model]
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=1)
        ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=18, alpha=0.8)
        ax.set_xlabel("hmMM (model vs humans)")
        ax.set_ylabel("whMM (within humans)")
        lo = max(0.0, min(min(p[0] for p in pts), min(p[1] for p in pts)) - 0.05)
        ax.set_xlim(lo, 1.0)
        ax.set_ylim(lo, 1.0)
        ax.set_title(f"{spec.name}: {model}")
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"mm_scatter_{model}.png"), dpi=120)
        plt.close(fig)
