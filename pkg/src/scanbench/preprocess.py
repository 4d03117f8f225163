"""Dataset equalization: one target-found criterion for humans and models.

Human scanpaths are cut at the first fixation that lands on the target,
unsuccessful scanpaths and trials are dropped, and every drop is recorded
with a reason code instead of being silently discarded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .core import (
    BoundingBox,
    DatasetSpec,
    Fixation,
    Scanpath,
    Trial,
    bbox_grid_cells,
    grid_cell_of,
)


# Shipped saccade-budget defaults, applied when dataset.json omits
# max_fixations. Operators may override by writing the field explicitly.
DEFAULT_MAX_FIXATIONS = {
    "interiors": 12,
    "unrestricted": 16,
    "mcs": 10,
    "cocosearch18": 10,
}


def saturation_max_fixations(
    scanpaths: list[Scanpath], plateau_frac: float = 0.95, n_cap: int = 64
) -> int:
    """Smallest budget n where the human cumulative curve exceeds
    plateau_frac of its plateau value.

    Used to pick a dataset's saccade budget from its own data when no
    shipped default applies.
    """
    if not scanpaths:
        raise ValueError("need at least one scanpath")
    if not 0 < plateau_frac <= 1:
        raise ValueError("plateau_frac must be in (0, 1]")
    total = len(scanpaths)
    found_at = [s.n_saccades for s in scanpaths if s.target_found]
    if not found_at:
        return 1
    plateau = len(found_at) / total
    for n in range(1, n_cap + 1):
        if sum(1 for k in found_at if k <= n) / total >= plateau_frac * plateau:
            return n
    return n_cap


@dataclass(frozen=True)
class FoundPredicate:
    """Decides whether a fixation counts as having found the target.

    grid_cell mode: the fixation's grid cell is one of the target's projected
    cells. pixel_window mode: the fixation lies inside the bbox expanded by
    half the window on each side (closed interval).
    """

    mode: str
    spec: DatasetSpec
    window_w: float = 0.0
    window_h: float = 0.0

    def __post_init__(self):
        if self.mode not in ("grid_cell", "pixel_window"):
            raise ValueError(f"unknown found-predicate mode: {self.mode}")
        if self.mode == "pixel_window" and (self.window_w <= 0 or self.window_h <= 0):
            raise ValueError("pixel_window dimensions must be positive")

    @classmethod
    def grid(cls, spec: DatasetSpec) -> "FoundPredicate":
        return cls(mode="grid_cell", spec=spec)

    @classmethod
    def window(cls, spec: DatasetSpec, window_w: float, window_h: float) -> "FoundPredicate":
        return cls(mode="pixel_window", spec=spec, window_w=window_w, window_h=window_h)


def is_found(f: Fixation, b: BoundingBox, p: FoundPredicate) -> bool:
    if p.mode == "grid_cell":
        return grid_cell_of(f, p.spec) in bbox_grid_cells(b, p.spec)
    half_w = p.window_w / 2.0
    half_h = p.window_h / 2.0
    return (
        b.x - half_w <= f.x <= b.x + b.w + half_w
        and b.y - half_h <= f.y <= b.y + b.h + half_h
    )


def truncate_at_target(s: Scanpath, b: BoundingBox, p: FoundPredicate) -> Scanpath:
    """Cut the scanpath at the first fixation that finds the target.

    If no fixation finds it, the fixations are returned unchanged with
    target_found forced to False. Idempotent.
    """
    if len(s.fixations) == 0:
        raise ValueError("empty scanpath")
    for i, f in enumerate(s.fixations):
        if is_found(f, b, p):
            return replace(s, fixations=s.fixations[: i + 1], target_found=True)
    return replace(s, target_found=False)


def rescale_scanpath(
    s: Scanpath, from_size: tuple[int, int], to_size: tuple[int, int]
) -> Scanpath:
    """Scale fixations from one image size to another; sizes are (width, height).

    Scaled coordinates are clamped into [0, dim) so downstream grid lookups
    stay in bounds.
    """
    from_w, from_h = from_size
    to_w, to_h = to_size
    if min(from_w, from_h, to_w, to_h) <= 0:
        raise ValueError("image dimensions must be positive")
    sx = to_w / from_w
    sy = to_h / from_h
    eps = 1e-6
    fixations = tuple(
        Fixation(
            x=min(max(f.x * sx, 0.0), to_w - eps),
            y=min(max(f.y * sy, 0.0), to_h - eps),
        )
        for f in s.fixations
    )
    return replace(s, fixations=fixations)


@dataclass(frozen=True)
class RejectEntry:
    trial_id: str
    reason: str
    source_id: str | None = None


@dataclass
class RejectLog:
    """Accumulates trial- and scanpath-level drops with reason codes."""

    entries: list[RejectEntry] = field(default_factory=list)

    def add_trial(self, trial_id: str, reason: str):
        self.entries.append(RejectEntry(trial_id=trial_id, reason=reason))

    def add_scanpath(self, trial_id: str, source_id: str, reason: str):
        self.entries.append(RejectEntry(trial_id=trial_id, reason=reason, source_id=source_id))

    @property
    def trial_entries(self) -> list[RejectEntry]:
        return [e for e in self.entries if e.source_id is None]

    @property
    def scanpath_entries(self) -> list[RejectEntry]:
        return [e for e in self.entries if e.source_id is not None]

    def extend(self, other: "RejectLog"):
        self.entries.extend(other.entries)

    def to_jsonl(self) -> str:
        lines = []
        for e in self.entries:
            record = {"trial_id": e.trial_id, "reason": e.reason}
            if e.source_id is not None:
                record["source_id"] = e.source_id
            lines.append(json.dumps(record, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")


def equalize(
    trials: list[Trial],
    spec: DatasetSpec,
    predicate: FoundPredicate | None = None,
) -> tuple[list[Trial], RejectLog]:
    """Apply the common criterion to every human scanpath of every trial.

    Per trial: drop it if the initial fixation already finds the target
    (trivial), truncate each scanpath at its first target hit, drop scanpaths
    that never find the target, and drop trials left with no scanpaths.
    Every input scanpath ends up either in the output or covered by a log
    entry (its own, or its trial's for trial-level drops).
    """
    predicate = predicate or FoundPredicate.grid(spec)
    kept: list[Trial] = []
    log = RejectLog()
    for trial in trials:
        if is_found(trial.initial_fixation, trial.target_bbox, predicate):
            log.add_trial(trial.trial_id, "trivial")
            continue
        survivors = []
        for s in trial.human_scanpaths:
            cut = truncate_at_target(s, trial.target_bbox, predicate)
            if cut.target_found:
                survivors.append(cut)
            else:
                log.add_scanpath(trial.trial_id, s.source_id, "target not found")
        if not survivors:
            log.add_trial(trial.trial_id, "no successful scanpaths")
            continue
        kept.append(replace(trial, human_scanpaths=tuple(survivors)))
    return kept, log
