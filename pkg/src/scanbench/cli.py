"""Batch orchestration: preprocess datasets, run searchers, score scanpaths.

Subcommands: preprocess, run, report, validate. Exit codes: 0 success,
1 fatal, 2 partial (some trials were skipped).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import scipy

from . import __version__
from .core import Scanpath, Trial
from .dataset_io import (
    load_dataset,
    load_dataset_spec,
    load_map,
    load_scanpaths,
    save_dataset,
    save_scanpaths,
)
from .errors import ScanbenchError
from .greedy import GreedyConfig, mean_target_size, run_greedy
from .ibs import IbsConfig, PriorSpec, run_search
from .preprocess import FoundPredicate, equalize, truncate_at_target
from .report import build_report
from .similarity import SimilaritySource

MODEL_NAMES = ("cibs", "sibs", "nnibs", "greedy", "external")
_MODEL_SIMILARITY = {"cibs": "cross_correlation", "sibs": "ssim", "nnibs": "external_map"}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scanbench",
        description="Visual-search scanpath simulation and benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_pre = sub.add_parser("preprocess", help="equalize a dataset and write the reject log")
    p_pre.add_argument("root", help="dataset directory (dataset.json + trials.json)")
    p_pre.add_argument("--out", required=True, help="output directory")

    p_run = sub.add_parser("run", help="run a searcher over a preprocessed dataset")
    p_run.add_argument("--config", required=True, help="run config JSON file")
    p_run.add_argument("--jobs", type=int, default=1, help="trial-level workers")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--subset", type=int, default=None, help="random trial subsample size")

    p_rep = sub.add_parser("report", help="score scanpath files against a dataset")
    p_rep.add_argument("--dataset", required=True, help="preprocessed dataset directory")
    p_rep.add_argument("--out", required=True, help="report output directory")
    p_rep.add_argument("files", nargs="*", help="scanpath JSON files (one per model)")
    p_rep.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_rep.add_argument("--min-fixations", type=int, default=3)
    p_rep.add_argument("--corr", choices=("pearson", "spearman"), default="pearson")

    p_val = sub.add_parser("validate", help="lint dataset directories and FGRID/scanpath files")
    p_val.add_argument("paths", nargs="+")

    args = parser.parse_args(argv)
    try:
        if args.command == "preprocess":
            return cmd_preprocess(args.root, args.out)
        if args.command == "run":
            return cmd_run(args.config, jobs=args.jobs, seed=args.seed, subset=args.subset)
        if args.command == "report":
            return cmd_report(
                args.dataset,
                args.files,
                args.out,
                figures=not args.no_figures,
                min_fixations=args.min_fixations,
                corr_method=args.corr,
            )
        if args.command == "validate":
            return cmd_validate(args.paths)
    except ScanbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


# ---------------------------------------------------------------------------


def cmd_preprocess(root: str, out: str) -> int:
    spec, trials, log = load_dataset(root)
    n_trials_in = len(trials) + len(log.trial_entries)
    n_scanpaths_in = sum(len(t.human_scanpaths) for t in trials) + len(log.scanpath_entries)

    kept, eq_log = equalize(trials, spec)
    log.extend(eq_log)
    kept = sorted(kept, key=lambda t: t.trial_id)

    os.makedirs(out, exist_ok=True)
    # Keep image references resolvable from the new root.
    rebased = [
        replace(
            t,
            image_ref=os.path.relpath(os.path.abspath(t.image_ref), os.path.abspath(out)),
            target_template_ref=(
                os.path.relpath(os.path.abspath(t.target_template_ref), os.path.abspath(out))
                if t.target_template_ref
                else None
            ),
        )
        for t in kept
    ]
    save_dataset(out, spec, rebased)
    with open(os.path.join(out, "rejects.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(log.to_jsonl())

    n_kept_scanpaths = sum(len(t.human_scanpaths) for t in kept)
    print(f"trials kept: {len(kept)}  dropped: {n_trials_in - len(kept)}")
    print(
        f"scanpaths kept: {n_kept_scanpaths}  dropped: {n_scanpaths_in - n_kept_scanpaths}"
    )
    return 0


# ---------------------------------------------------------------------------


def _parse_similarity(raw: dict | None, default_kind: str | None) -> SimilaritySource:
    raw = raw or {}
    kind = raw.get("kind", default_kind)
    if kind is None:
        raise ScanbenchError("similarity kind missing")
    if default_kind and kind != default_kind:
        raise ScanbenchError(
            f"similarity kind {kind!r} conflicts with the selected model ({default_kind})"
        )
    return SimilaritySource(kind=kind, map_path=raw.get("map_path"))


def _parse_ibs(raw: dict, model: str, seed: int) -> IbsConfig:
    prior_raw = raw.get("prior", {})
    prior = PriorSpec(
        kind=prior_raw.get("kind", "uniform"),
        sigma_frac=float(prior_raw.get("sigma_frac", 0.25)),
        path=prior_raw.get("path"),
    )
    model_size = raw.get("model_size", [768, 1024])
    return IbsConfig(
        similarity=_parse_similarity(raw.get("similarity"), _MODEL_SIMILARITY[model]),
        prior=prior,
        visibility_sigma=float(raw.get("visibility_sigma", 3.0)),
        visibility_peak=float(raw.get("visibility_peak", 3.0)),
        selection_rule=raw.get("selection_rule", "ideal"),
        response_noise=float(raw.get("response_noise", 0.0)),
        seed=seed,
        model_size=tuple(model_size) if model_size else None,
    )


def _select_subset(trials: list[Trial], n: int, seed: int) -> list[Trial]:
    if n >= len(trials):
        return trials
    ordered = sorted(trials, key=lambda t: t.trial_id)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(ordered), size=n, replace=False)
    return [ordered[i] for i in sorted(idx)]


def cmd_run(config_path: str, jobs: int = 1, seed: int | None = None, subset: int | None = None) -> int:
    with open(config_path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    model = cfg.get("model")
    if model not in MODEL_NAMES:
        raise ScanbenchError(f"model must be one of {MODEL_NAMES}, got {model!r}")
    for name, key in (("cibs", "ibs"), ("sibs", "ibs"), ("nnibs", "ibs"),
                      ("greedy", "greedy"), ("external", "external_scanpaths")):
        if model == name and key not in cfg:
            raise ScanbenchError(f"model {model!r} requires the {key!r} config block")
    dataset_root = cfg.get("dataset_root")
    output_dir = cfg.get("output_dir")
    if not dataset_root or not output_dir:
        raise ScanbenchError("config needs dataset_root and output_dir")

    effective_seed = seed if seed is not None else int(cfg.get("seed", cfg.get("ibs", {}).get("seed", 0)))
    cache_dir = cfg.get("cache_dir")

    spec, all_trials, _ = load_dataset(dataset_root)
    all_trials = sorted(all_trials, key=lambda t: t.trial_id)
    trials = all_trials
    subset_cfg = cfg.get("subset")
    if subset is not None:
        trials = _select_subset(trials, subset, effective_seed)
    elif subset_cfg:
        trials = _select_subset(trials, int(subset_cfg["n"]), int(subset_cfg.get("seed", effective_seed)))
    if not trials:
        raise ScanbenchError("no trials to run")

    if model in ("cibs", "sibs", "nnibs"):
        ibs_cfg = _parse_ibs(cfg.get("ibs", {}), model, effective_seed)

        def worker(trial: Trial) -> Scanpath:
            return run_search(trial, ibs_cfg, spec, source_id=model, cache_dir=cache_dir)

    elif model == "greedy":
        g_raw = cfg.get("greedy", {})
        greedy_cfg = GreedyConfig(
            attention=_parse_similarity(g_raw.get("attention"), None),
            patch_mode=g_raw.get("patch_mode", "double_target_size"),
            max_fixations=g_raw.get("max_fixations"),
        )
        # Patch geometry is a dataset-level constant: use every trial's bbox,
        # not just the evaluated subset.
        mean_target = mean_target_size(all_trials)

        def worker(trial: Trial) -> Scanpath:
            return run_greedy(
                trial, greedy_cfg, spec, mean_target, source_id=model, cache_dir=cache_dir
            )

    else:  # external
        external = load_scanpaths(cfg["external_scanpaths"])
        by_trial: dict[str, Scanpath] = {}
        for trial_id, s in external:
            by_trial.setdefault(trial_id, s)
        predicate = FoundPredicate.grid(spec)

        def worker(trial: Trial) -> Scanpath:
            s = by_trial.get(trial.trial_id)
            if s is None:
                raise ScanbenchError(f"no external scanpath for trial {trial.trial_id}")
            return truncate_at_target(s, trial.target_bbox, predicate)

    results: dict[str, Scanpath] = {}
    failures: dict[str, str] = {}

    def run_one(trial: Trial):
        try:
            return trial.trial_id, worker(trial), None
        except Exception as exc:  # noqa: BLE001 - per-trial isolation
            return trial.trial_id, None, str(exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, trials))
    else:
        outcomes = [run_one(t) for t in trials]
    for trial_id, scanpath, error in outcomes:
        if error is None:
            results[trial_id] = scanpath
        else:
            failures[trial_id] = error
            print(f"trial {trial_id} skipped: {error}", file=sys.stderr)

    if not results:
        print("error: all trials failed", file=sys.stderr)
        return 1

    os.makedirs(output_dir, exist_ok=True)
    out_file = os.path.join(output_dir, f"scanpaths_{model}.json")
    save_scanpaths([(tid, results[tid]) for tid in sorted(results)], out_file)

    manifest_cfg = dict(cfg)
    manifest_cfg["seed"] = effective_seed
    config_hash = hashlib.sha256(
        json.dumps(manifest_cfg, sort_keys=True).encode("utf-8")
    ).hexdigest()
    manifest = {
        "model": model,
        "config_hash": config_hash,
        "seed": effective_seed,
        "versions": {
            "scanbench": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "n_trials": len(trials),
        "n_failed": len(failures),
        "output": os.path.basename(out_file),
    }
    with open(os.path.join(output_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"wrote {out_file} ({len(results)} scanpaths, {len(failures)} failures)")
    return 2 if failures else 0


# ---------------------------------------------------------------------------


def _model_name_from_file(path: str) -> str:
    stem = os.path.splitext(os.path.basename(path))[0]
    if stem.startswith("scanpaths_"):
        return stem[len("scanpaths_"):]
    return stem


def cmd_report(
    dataset_root: str,
    files: list[str],
    out: str,
    figures: bool = True,
    min_fixations: int = 3,
    corr_method: str = "pearson",
) -> int:
    spec, trials, _ = load_dataset(dataset_root)
    model_scanpaths = {}
    for path in files:
        name = _model_name_from_file(path)
        if name in model_scanpaths:
            raise ScanbenchError(f"duplicate model name {name!r} from {path}")
        model_scanpaths[name] = load_scanpaths(path)
    report = build_report(
        spec,
        trials,
        model_scanpaths,
        out,
        figures=figures,
        min_fixations=min_fixations,
        corr_method=corr_method,
    )
    for warning in report["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    def fmt(v, spec=".4f"):
        return format(v, spec) if v is not None else "n/a"

    human_auc = report["human"]["auc"]
    print(f"human AUC: {fmt(human_auc)}")
    for model, summary in sorted(report["models"].items()):
        avg_mm = summary["mm"]["avg"] if summary["mm"] else None
        print(
            f"{model}: AUC {fmt(summary['auc'])}  avgMM {fmt(avg_mm)}  "
            f"corr {fmt(summary['correlation'])}"
        )
    return 0


# ---------------------------------------------------------------------------


def cmd_validate(paths: list[str]) -> int:
    failed = False
    for path in paths:
        try:
            if os.path.isdir(path):
                spec, trials, log = load_dataset(path)
                print(
                    f"{path}: OK dataset {spec.name!r}, {len(trials)} trials, "
                    f"{len(log.entries)} rejects"
                )
                for entry in log.entries:
                    source = f" [{entry.source_id}]" if entry.source_id else ""
                    print(f"  reject {entry.trial_id}{source}: {entry.reason}")
            elif path.endswith(".fgrid"):
                grid = load_map(path)
                print(f"{path}: OK FGRID {grid.rows}x{grid.cols}")
            elif os.path.basename(path) == "dataset.json":
                spec = load_dataset_spec(os.path.dirname(path) or ".")
                print(f"{path}: OK dataset spec {spec.name!r}")
            elif path.endswith(".json"):
                paths_loaded = load_scanpaths(path)
                print(f"{path}: OK {len(paths_loaded)} scanpaths")
            else:
                raise ScanbenchError("unrecognized file type")
        except Exception as exc:  # noqa: BLE001 - lint every input
            print(f"{path}: FAIL {exc}")
            failed = True
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
