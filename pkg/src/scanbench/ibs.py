"""Grid-based Bayesian searcher family.

A posterior over grid cells starts from a prior (saliency or synthetic),
accumulates evidence through a Gaussian visibility map at each fixation, and
the next fixation maximizes the expected detectability of the target under
the current posterior. Swapping the similarity source yields the
correlation-, SSIM- and neural-attention-backed variants.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    DatasetSpec,
    ProbabilityGrid,
    Scanpath,
    Trial,
    bbox_grid_cells,
    cell_center,
    grid_cell_of,
)
from .errors import ScanbenchError, SearchSpaceExhausted
from .gridops import block_mean
from .dataset_io import load_map
from .similarity import SimilaritySource, build_similarity, downsample_to_grid

PRIOR_KINDS = ("uniform", "center_gaussian", "external_map")

# Cells are floored at this value before normalization so the posterior
# starts strictly positive everywhere.
PRIOR_FLOOR = 1e-6

# Posterior probabilities are floored here after each renormalization;
# keeps the distribution strictly positive under extreme evidence.
POSTERIOR_FLOOR = 1e-300

_NOISE_EPS = 1e-6


@dataclass(frozen=True)
class PriorSpec:
    kind: str = "uniform"
    sigma_frac: float = 0.25
    path: str | None = None

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind: {self.kind}")
        if self.kind == "center_gaussian" and self.sigma_frac <= 0:
            raise ValueError("sigma_frac must be positive")
        if self.kind == "external_map" and not self.path:
            raise ValueError("external_map prior requires a path")


@dataclass(frozen=True)
class IbsConfig:
    """Knobs of one searcher run.

    visibility_sigma/visibility_peak parametrize the d' falloff in grid-cell
    units; response_noise = 0 selects the deterministic mode. model_size is
    the working resolution for similarity/prior computation (None keeps the
    native image size).
    """

    similarity: SimilaritySource
    prior: PriorSpec = field(default_factory=PriorSpec)
    visibility_sigma: float = 3.0
    visibility_peak: float = 3.0
    selection_rule: str = "ideal"
    response_noise: float = 0.0
    seed: int = 0
    model_size: tuple[int, int] | None = (768, 1024)

    def __post_init__(self):
        if self.visibility_sigma <= 0:
            raise ValueError("visibility_sigma must be positive")
        if self.visibility_peak <= 0:
            raise ValueError("visibility_peak must be positive")
        if self.response_noise < 0:
            raise ValueError("response_noise must be nonnegative")
        if self.selection_rule not in ("ideal", "map_greedy"):
            raise ValueError(f"unknown selection rule: {self.selection_rule}")


@dataclass(frozen=True)
class SearchState:
    """Posterior plus the fixation history that produced it."""

    posterior: np.ndarray
    fixation_history: tuple[tuple[int, int], ...]
    step: int = 0


def trial_rng_seed(seed: int, trial_id: str) -> int:
    """Stable per-trial seed: config seed xor a hash of the trial id."""
    digest = hashlib.sha256(trial_id.encode("utf-8")).digest()
    return (seed ^ int.from_bytes(digest[:8], "little")) & 0xFFFFFFFFFFFFFFFF


def resolve_prior_path(prior: PriorSpec, trial_id: str) -> str:
    assert prior.path is not None
    if "{trial_id}" in prior.path:
        return prior.path.format(trial_id=trial_id)
    if os.path.isdir(prior.path):
        return os.path.join(prior.path, f"{trial_id}.fgrid")
    return prior.path


def make_prior(trial: Trial, cfg: IbsConfig, spec: DatasetSpec) -> ProbabilityGrid:
    """Grid-resolution prior, floored at PRIOR_FLOOR and normalized to sum 1."""
    rows, cols = spec.grid_rows, spec.grid_cols
    if cfg.prior.kind == "uniform":
        values = np.ones((rows, cols))
    elif cfg.prior.kind == "center_gaussian":
        sr = cfg.prior.sigma_frac * rows
        sc = cfg.prior.sigma_frac * cols
        r = np.arange(rows)[:, None] - (rows - 1) / 2.0
        c = np.arange(cols)[None, :] - (cols - 1) / 2.0
        values = np.exp(-(r * r) / (2.0 * sr * sr) - (c * c) / (2.0 * sc * sc))
    else:
        path = resolve_prior_path(cfg.prior, trial.trial_id)
        if not os.path.isfile(path):
            raise ScanbenchError(f"prior map not found: {path}")
        raw = load_map(path)
        if raw.values.shape == (spec.image_height, spec.image_width):
            values = block_mean(raw.values, spec.cell_size)
        elif raw.values.shape == (rows, cols):
            values = raw.values.copy()
        else:
            values = load_map(path, expected_rows=rows, expected_cols=cols).values
    values = np.maximum(values, PRIOR_FLOOR)
    return ProbabilityGrid(values / values.sum(), normalized=True)


def visibility(
    fix: tuple[int, int], cfg: IbsConfig, grid_dims: tuple[int, int]
) -> np.ndarray:
    """d' at every cell for a fixation: a 2D Gaussian centered on it.

    d'(i) = peak * exp(-dist(i, fix)^2 / (2 sigma^2)), Euclidean distance in
    cell units, so the fixated cell sees the full peak.
    """
    rows, cols = grid_dims
    r = np.arange(rows)[:, None] - fix[0]
    c = np.arange(cols)[None, :] - fix[1]
    dist_sq = r * r + c * c
    return cfg.visibility_peak * np.exp(-dist_sq / (2.0 * cfg.visibility_sigma**2))


def update_posterior(
    state: SearchState,
    fix: tuple[int, int],
    similarity_grid: np.ndarray,
    cfg: IbsConfig,
    rng: np.random.Generator | None = None,
) -> SearchState:
    """Accumulate the evidence gathered at a fixation into the posterior.

    log p_i += d'(i, fix)^2 * (W_i - 0.5) followed by renormalization, where
    W_i is the similarity value s_i (deterministic mode) or s_i plus Gaussian
    response noise with standard deviation response_noise / max(d'_i, eps).
    Neutral similarity 0.5 leaves the posterior untouched; values above 0.5
    are evidence for the target, below against.
    """
    s = np.asarray(similarity_grid, dtype=np.float64)
    if s.shape != state.posterior.shape:
        raise ScanbenchError(
            f"similarity grid {s.shape} does not match posterior {state.posterior.shape}"
        )
    d = visibility(fix, cfg, s.shape)
    if cfg.response_noise > 0:
        if rng is None:
            raise ScanbenchError("stochastic mode needs a seeded generator")
        sigma = cfg.response_noise / np.maximum(d, _NOISE_EPS)
        w = s + rng.normal(0.0, 1.0, size=s.shape) * sigma
    else:
        w = s
    log_p = np.log(state.posterior) + d * d * (w - 0.5)
    log_p -= log_p.max()
    p = np.exp(log_p)
    p /= p.sum()
    p = np.maximum(p, POSTERIOR_FLOOR)
    p /= p.sum()
    return SearchState(
        posterior=p, fixation_history=state.fixation_history, step=state.step + 1
    )


def select_next(
    state: SearchState,
    cfg: IbsConfig,
    similarity_grid: np.ndarray | None = None,
) -> tuple[int, int]:
    """Pick the next fixation cell.

    ideal rule: argmax over candidates k of sum_i p_i * d'(i, k)^2, the
    expected squared detectability of the target from k. map_greedy rule:
    argmax of the posterior itself. Visited cells are excluded (inhibition
    of return); ties break on distance to the current fixation, then
    row-major order.
    """
    rows, cols = state.posterior.shape
    visited = np.zeros((rows, cols), dtype=bool)
    for cell in state.fixation_history:
        visited[cell] = True
    if visited.all():
        raise SearchSpaceExhausted("search space exhausted")

    if cfg.selection_rule == "map_greedy":
        score = state.posterior.copy()
    else:
        r = np.arange(rows)
        c = np.arange(cols)
        # dist_sq[(i), (k)] over flattened cells, exploiting separability.
        dr = r[:, None] - r[None, :]
        dc = c[:, None] - c[None, :]
        # exp(-dist^2 / sigma^2) factorizes into row and column parts.
        inv = 1.0 / (cfg.visibility_sigma**2)
        row_kernel = np.exp(-(dr * dr) * inv)
        col_kernel = np.exp(-(dc * dc) * inv)
        # score[k] = peak^2 * sum_i p_i exp(-(dist i,k)^2 / sigma^2)
        score = cfg.visibility_peak**2 * (row_kernel.T @ state.posterior @ col_kernel)

    score[visited] = -np.inf
    best = float(score.max())
    cand_r, cand_c = np.nonzero(score == best)
    if len(cand_r) == 1:
        return (int(cand_r[0]), int(cand_c[0]))
    cur = state.fixation_history[-1] if state.fixation_history else (0, 0)
    ranked = sorted(
        ((int(r_), int(c_)) for r_, c_ in zip(cand_r, cand_c)),
        key=lambda cell: ((cell[0] - cur[0]) ** 2 + (cell[1] - cur[1]) ** 2, cell),
    )
    return ranked[0]


def run_search(
    trial: Trial,
    cfg: IbsConfig,
    spec: DatasetSpec,
    similarity_grid: np.ndarray | None = None,
    prior: ProbabilityGrid | None = None,
    source_id: str | None = None,
    cache_dir: str | None = None,
) -> Scanpath:
    """Simulate one search; returns the scanpath in pixel coordinates.

    Starts at the trial's initial fixation converted to its grid cell; stops
    as soon as the current cell is one of the target's cells, when the
    saccade budget runs out, or when every cell has been visited. Emitted
    fixations are cell centers. Deterministic mode is a pure function of
    (trial, cfg, spec); stochastic mode is reproducible through the per-trial
    seeded generator.
    """
    if similarity_grid is None:
        full = build_similarity(
            trial, cfg.similarity, spec, cache_dir=cache_dir, model_size=cfg.model_size
        )
        similarity_grid = downsample_to_grid(full.values, spec).values
    if prior is None:
        prior = make_prior(trial, cfg, spec)
    if source_id is None:
        source_id = {
            "cross_correlation": "cibs",
            "ssim": "sibs",
            "external_map": "nnibs",
        }[cfg.similarity.kind]

    rng = np.random.default_rng(trial_rng_seed(cfg.seed, trial.trial_id))
    target_cells = bbox_grid_cells(trial.target_bbox, spec)
    start = grid_cell_of(trial.initial_fixation, spec)
    state = SearchState(posterior=prior.values.copy(), fixation_history=(start,))
    cells = [start]
    found = False
    while True:
        current = cells[-1]
        if current in target_cells:
            found = True
            break
        if len(cells) - 1 >= spec.max_fixations:
            break
        state = update_posterior(state, current, similarity_grid, cfg, rng=rng)
        try:
            nxt = select_next(state, cfg, similarity_grid)
        except SearchSpaceExhausted:
            break
        cells.append(nxt)
        state = replace(state, fixation_history=state.fixation_history + (nxt,))

    fixations = tuple(cell_center(cell, spec) for cell in cells)
    return Scanpath(
        source_id=source_id,
        fixations=fixations,
        target_found=found,
        max_fixations=spec.max_fixations,
    )
