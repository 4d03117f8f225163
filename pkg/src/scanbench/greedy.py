"""Greedy attention-map searcher with forced inhibition of return.

Runs at full image resolution: each step jumps straight to the global
attention maximum, regardless of distance, and the patch around a visited
location is zeroed so it cannot be selected again. No information
accumulates across saccades.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DatasetSpec, Fixation, Scanpath, Trial
from .preprocess import FoundPredicate, is_found
from .similarity import SimilaritySource, build_similarity

PATCH_MODES = ("fovea", "target_size", "double_target_size")


@dataclass(frozen=True)
class GreedyConfig:
    attention: SimilaritySource
    patch_mode: str = "double_target_size"
    max_fixations: int | None = None

    def __post_init__(self):
        if self.patch_mode not in PATCH_MODES:
            raise ValueError(f"unknown patch mode: {self.patch_mode}")
        if self.max_fixations is not None and self.max_fixations < 1:
            raise ValueError("max_fixations must be positive")


def mean_target_size(trials: list[Trial]) -> tuple[float, float]:
    """Mean (width, height) of the target bounding boxes across the dataset."""
    if not trials:
        raise ValueError("mean_target_size needs at least one trial")
    w = float(np.mean([t.target_bbox.w for t in trials]))
    h = float(np.mean([t.target_bbox.h for t in trials]))
    return (w, h)


def resolve_patch(
    spec: DatasetSpec, mean_target: tuple[float, float], cfg: GreedyConfig
) -> tuple[int, int]:
    """(width, height) in pixels of the inhibition/identification patch."""
    if cfg.patch_mode == "fovea":
        return (spec.fovea_size, spec.fovea_size)
    if cfg.patch_mode == "target_size":
        return (max(1, round(mean_target[0])), max(1, round(mean_target[1])))
    return (max(1, round(2.0 * mean_target[0])), max(1, round(2.0 * mean_target[1])))


def _zero_patch(att: np.ndarray, f: Fixation, patch: tuple[int, int]) -> None:
    """Zero the patch centered on the fixation, half-open bounds clipped to
    the image so the inhibition footprint is bit-exactly reproducible."""
    pw, ph = patch
    cx = int(round(f.x))
    cy = int(round(f.y))
    x0 = max(cx - pw // 2, 0)
    y0 = max(cy - ph // 2, 0)
    x1 = min(x0 + pw, att.shape[1])
    y1 = min(y0 + ph, att.shape[0])
    att[y0:y1, x0:x1] = 0.0


def run_greedy(
    trial: Trial,
    cfg: GreedyConfig,
    spec: DatasetSpec,
    mean_target: tuple[float, float],
    attention: np.ndarray | None = None,
    source_id: str = "greedy",
    cache_dir: str | None = None,
) -> Scanpath:
    """Greedy descent of the attention map.

    The found check (pixel window of the dataset's mean target size around
    the bbox) precedes the zeroing, so a fixation that already sees the
    target terminates the search immediately. Stops not-found when the
    saccade budget runs out or the attention map is exhausted (all zero).
    The whole run is a pure function of its inputs.
    """
    if attention is None:
        attention = build_similarity(
            trial, cfg.attention, spec, cache_dir=cache_dir, model_size=None
        ).values
    att = np.array(attention, dtype=np.float64, copy=True)
    if att.shape != (spec.image_height, spec.image_width):
        raise ValueError(
            f"attention map {att.shape} does not match image "
            f"{(spec.image_height, spec.image_width)}"
        )
    patch = resolve_patch(spec, mean_target, cfg)
    predicate = FoundPredicate.window(spec, mean_target[0], mean_target[1])
    max_fix = cfg.max_fixations if cfg.max_fixations is not None else spec.max_fixations

    fixations = [trial.initial_fixation]
    found = False
    while True:
        current = fixations[-1]
        if is_found(current, trial.target_bbox, predicate):
            found = True
            break
        if len(fixations) - 1 >= max_fix:
            break
        _zero_patch(att, current, patch)
        if float(att.max()) <= 0.0:
            # Attention exhausted before the target was seen.
            break
        flat = int(np.argmax(att))
        r, c = divmod(flat, att.shape[1])
        fixations.append(Fixation(x=float(c), y=float(r)))

    return Scanpath(
        source_id=source_id,
        fixations=tuple(fixations),
        target_found=found,
        max_fixations=max_fix,
    )
