"""Scanpath simulation and benchmarking for visual search in natural scenes.

Bayesian grid searchers and a greedy attention-map searcher run over
equalized datasets; any scanpath source (model or human) is scored with
cumulative-performance AUC and Multi-Match similarity.
"""

__version__ = "0.1.0"

from .core import (
    BoundingBox,
    DatasetSpec,
    Fixation,
    ProbabilityGrid,
    Scanpath,
    Trial,
    bbox_grid_cells,
    cell_center,
    grid_cell_of,
)
from .errors import MapFormatError, ScanbenchError, SearchSpaceExhausted
from .preprocess import (
    FoundPredicate,
    RejectLog,
    equalize,
    is_found,
    rescale_scanpath,
    truncate_at_target,
)
from .dataset_io import (
    load_dataset,
    load_image_gray,
    load_image_rgb,
    load_map,
    load_scanpaths,
    save_dataset,
    save_map,
    save_scanpaths,
)
from .similarity import (
    SimilaritySource,
    build_similarity,
    cross_correlation_color,
    cross_correlation_map,
    downsample_to_grid,
    ssim_map,
)
from .ibs import (
    IbsConfig,
    PriorSpec,
    SearchState,
    make_prior,
    run_search,
    select_next,
    update_posterior,
    visibility,
)
from .greedy import GreedyConfig, mean_target_size, resolve_patch, run_greedy
from .metrics import (
    CumulativeCurve,
    MultiMatchScore,
    SimplifyThresholds,
    auc,
    cumulative_curve,
    human_model_mm,
    mm_correlation,
    multimatch,
    wh_hm_mm,
    within_human_mm,
)
from .report import build_report

__all__ = [
    "__version__",
    "BoundingBox", "DatasetSpec", "Fixation", "ProbabilityGrid", "Scanpath", "Trial",
    "bbox_grid_cells", "cell_center", "grid_cell_of",
    "MapFormatError", "ScanbenchError", "SearchSpaceExhausted",
    "FoundPredicate", "RejectLog", "equalize", "is_found", "rescale_scanpath",
    "truncate_at_target",
    "load_dataset", "load_image_gray", "load_image_rgb", "load_map",
    "load_scanpaths", "save_dataset", "save_map", "save_scanpaths",
    "SimilaritySource", "build_similarity", "cross_correlation_color",
    "cross_correlation_map", "downsample_to_grid", "ssim_map",
    "IbsConfig", "PriorSpec", "SearchState", "make_prior", "run_search",
    "select_next", "update_posterior", "visibility",
    "GreedyConfig", "mean_target_size", "resolve_patch", "run_greedy",
    "CumulativeCurve", "MultiMatchScore", "SimplifyThresholds", "auc",
    "cumulative_curve", "human_model_mm", "mm_correlation", "multimatch",
    "wh_hm_mm", "within_human_mm",
    "build_report",
]
