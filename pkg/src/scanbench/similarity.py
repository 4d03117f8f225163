"""Target-similarity and attention maps that drive both searcher families.

Three sources: normalized cross-correlation (template matching), windowed
SSIM with border trimming, and externally supplied FGRID attention maps.
All maps come out min-max normalized to [0, 1] at full image resolution and
can be reduced to the searcher grid by block means.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .core import DatasetSpec, ProbabilityGrid, Trial
from .dataset_io import RGB_WEIGHTS, load_image_gray, load_image_rgb, load_map, save_map
from .errors import ScanbenchError
from .gridops import bilinear_resize, block_mean, minmax_scale

# Sum-of-squared-deviations below this counts as a zero-variance window
# (no evidence); avoids division blow-ups on blank regions.
ZERO_VARIANCE_TOL = 1e-8

SIMILARITY_KINDS = ("cross_correlation", "ssim", "external_map")


@dataclass(frozen=True)
class SimilaritySource:
    """Selects how the per-trial similarity/attention map is produced.

    external_map resolves map_path per trial: a ``{trial_id}`` placeholder is
    substituted, a directory is searched for ``<trial_id>.fgrid``, and any
    other path is used verbatim.
    """

    kind: str
    map_path: str | None = None

    def __post_init__(self):
        if self.kind not in SIMILARITY_KINDS:
            raise ValueError(f"unknown similarity kind: {self.kind}")
        if self.kind == "external_map" and not self.map_path:
            raise ValueError("external_map requires map_path")

    def resolve_map(self, trial_id: str) -> str:
        assert self.map_path is not None
        if "{trial_id}" in self.map_path:
            return self.map_path.format(trial_id=trial_id)
        if os.path.isdir(self.map_path):
            return os.path.join(self.map_path, f"{trial_id}.fgrid")
        return self.map_path


def _template_center(shape: tuple[int, int]) -> tuple[int, int]:
    return ((shape[0] - 1) // 2, (shape[1] - 1) // 2)


def _correlate_same(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Cross-correlation of image with kernel, output aligned so that entry
    (r, c) covers the kernel centered at (r, c) with zero padding outside."""
    kh, kw = kernel.shape
    cy, cx = _template_center(kernel.shape)
    full = fftconvolve(image, kernel[::-1, ::-1], mode="full")
    r0 = kh - 1 - cy
    c0 = kw - 1 - cx
    return full[r0 : r0 + image.shape[0], c0 : c0 + image.shape[1]]


def _check_dims(image: np.ndarray, template: np.ndarray):
    if template.shape[0] > image.shape[0] or template.shape[1] > image.shape[1]:
        raise ScanbenchError(
            f"template {template.shape} larger than image {image.shape}"
        )


def cross_correlation_map(image: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Normalized cross-correlation of the template at every image position.

    Both the template and each image window are zero-meaned and scaled by
    their standard deviation, so a perfect match scores 1 regardless of local
    brightness or contrast. Windows overflowing the border are zero-padded;
    zero-variance windows (either side) score 0. Output values lie in [-1, 1].
    """
    image = np.asarray(image, dtype=np.float64)
    template = np.asarray(template, dtype=np.float64)
    _check_dims(image, template)
    n = template.size
    t_centered = template - template.mean()
    t_ss = float(np.sum(t_centered * t_centered))
    if t_ss <= ZERO_VARIANCE_TOL:
        return np.zeros_like(image)

    num = _correlate_same(image, t_centered)
    ones = np.ones_like(template)
    win_sum = _correlate_same(image, ones)
    win_sq = _correlate_same(image * image, ones)
    win_ss = win_sq - win_sum * win_sum / n
    np.maximum(win_ss, 0.0, out=win_ss)

    out = np.zeros_like(image)
    valid = win_ss > ZERO_VARIANCE_TOL
    out[valid] = num[valid] / np.sqrt(win_ss[valid] * t_ss)
    np.clip(out, -1.0, 1.0, out=out)
    return out


def cross_correlation_color(image: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Per-channel normalized cross-correlation combined with the luminance weights."""
    image = np.asarray(image, dtype=np.float64)
    template = np.asarray(template, dtype=np.float64)
    if image.ndim != 3 or template.ndim != 3 or image.shape[2] != template.shape[2]:
        raise ScanbenchError(
            f"channel mismatch: image {image.shape} vs template {template.shape}"
        )
    if image.shape[2] != len(RGB_WEIGHTS):
        raise ScanbenchError(f"expected {len(RGB_WEIGHTS)} channels, got {image.shape[2]}")
    out = np.zeros(image.shape[:2], dtype=np.float64)
    for ch, weight in enumerate(RGB_WEIGHTS):
        out += weight * cross_correlation_map(image[..., ch], template[..., ch])
    return out


def ssim_map(image: np.ndarray, template: np.ndarray) -> np.ndarray:
    """SSIM between the template and the template-sized region around each pixel.

    Statistics (means, population variances, covariance) are taken over the
    whole region in one window. At the borders the template pixels that would
    overflow the image are trimmed away and the comparison uses the template
    leftovers against the correspondingly shrunk region, so no black bars
    remain at the edges. Standard constants C1 = (0.01 * 255)^2 and
    C2 = (0.03 * 255)^2.
    """
    image = np.asarray(image, dtype=np.float64)
    template = np.asarray(template, dtype=np.float64)
    _check_dims(image, template)
    H, W = image.shape
    th, tw = template.shape
    cy, cx = _template_center(template.shape)
    C1 = (0.01 * 255.0) ** 2
    C2 = (0.03 * 255.0) ** 2

    # Zero-padded correlations equal sums over the trimmed window, because
    # padded pixels contribute nothing.
    ones = np.ones_like(template)
    win_sum = _correlate_same(image, ones)
    win_sq = _correlate_same(image * image, ones)
    cross = _correlate_same(image, template)

    # Per-position trimmed template sums via summed-area tables; the valid
    # template row range depends only on the output row (and likewise for
    # columns), so the lookups separate into outer products.
    r_idx = np.arange(H)
    c_idx = np.arange(W)
    a0 = np.maximum(0, cy - r_idx)
    a1 = (th - 1) - np.maximum(0, r_idx - cy + th - 1 - (H - 1))
    b0 = np.maximum(0, cx - c_idx)
    b1 = (tw - 1) - np.maximum(0, c_idx - cx + tw - 1 - (W - 1))

    sat = np.zeros((th + 1, tw + 1))
    sat[1:, 1:] = np.cumsum(np.cumsum(template, axis=0), axis=1)
    sat_sq = np.zeros((th + 1, tw + 1))
    sat_sq[1:, 1:] = np.cumsum(np.cumsum(template * template, axis=0), axis=1)

    def rect_sums(table):
        return (
            table[np.ix_(a1 + 1, b1 + 1)]
            - table[np.ix_(a0, b1 + 1)]
            - table[np.ix_(a1 + 1, b0)]
            + table[np.ix_(a0, b0)]
        )

    t_sum = rect_sums(sat)
    t_sq = rect_sums(sat_sq)
    n = np.outer(a1 - a0 + 1, b1 - b0 + 1).astype(np.float64)

    mu_x = win_sum / n
    mu_y = t_sum / n
    var_x = np.maximum(win_sq / n - mu_x * mu_x, 0.0)
    var_y = np.maximum(t_sq / n - mu_y * mu_y, 0.0)
    cov = cross / n - mu_x * mu_y

    return ((2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2)) / (
        (mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2)
    )


def downsample_to_grid(map_values: np.ndarray, spec: DatasetSpec) -> ProbabilityGrid:
    """Reduce a full-resolution map to the searcher grid; each cell is the
    mean of the pixels it covers (partial edge cells average what they have)."""
    arr = np.asarray(map_values, dtype=np.float64)
    if arr.shape != (spec.image_height, spec.image_width):
        raise ScanbenchError(
            f"map shape {arr.shape} does not match image "
            f"{(spec.image_height, spec.image_width)}"
        )
    return ProbabilityGrid(block_mean(arr, spec.cell_size))


def _quantize(arr: np.ndarray) -> np.ndarray:
    # Maps round-trip through float32 FGRID caches; quantizing up front keeps
    # cached and freshly computed runs bit-identical.
    return arr.astype(np.float32).astype(np.float64)


def _cache_key(image_path: str, template_path: str, kind: str, variant: str) -> str:
    h = hashlib.sha256()
    with open(image_path, "rb") as fh:
        h.update(fh.read())
    with open(template_path, "rb") as fh:
        h.update(fh.read())
    h.update(kind.encode("ascii"))
    h.update(variant.encode("ascii"))
    return h.hexdigest()


def build_similarity(
    trial: Trial,
    src: SimilaritySource,
    spec: DatasetSpec,
    cache_dir: str | None = None,
    model_size: tuple[int, int] | None = None,
) -> ProbabilityGrid:
    """Full-resolution similarity map for a trial, min-max normalized to [0, 1].

    For the template-based kinds, model_size=(rows, cols) computes the raw
    map at that working resolution (template scaled by the same factors) and
    resamples the result back to the native image size. Constant raw maps
    normalize to all-0.5. Computed maps are cached as FGRID files keyed by
    the content hash of the inputs when cache_dir is given.
    """
    native = (spec.image_height, spec.image_width)

    if src.kind == "external_map":
        path = src.resolve_map(trial.trial_id)
        if not os.path.isfile(path):
            raise ScanbenchError(f"attention map not found: {path}")
        grid = load_map(path, expected_rows=native[0], expected_cols=native[1])
        return ProbabilityGrid(minmax_scale(grid.values))

    if not trial.target_template_ref:
        raise ScanbenchError(f"trial {trial.trial_id}: template required for {src.kind}")

    cache_path = None
    if cache_dir is not None:
        variant = f"{model_size[0]}x{model_size[1]}" if model_size else "native"
        key = _cache_key(trial.image_ref, trial.target_template_ref, src.kind, variant)
        cache_path = os.path.join(cache_dir, f"{key}.fgrid")
        if os.path.isfile(cache_path):
            return ProbabilityGrid(load_map(cache_path, *native).values)

    if src.kind == "cross_correlation" and spec.color:
        image = load_image_rgb(trial.image_ref)
        template = load_image_rgb(trial.target_template_ref)
    else:
        image = load_image_gray(trial.image_ref)
        template = load_image_gray(trial.target_template_ref)

    if model_size is not None and model_size != image.shape[:2]:
        sy = model_size[0] / image.shape[0]
        sx = model_size[1] / image.shape[1]
        t_rows = max(1, round(template.shape[0] * sy))
        t_cols = max(1, round(template.shape[1] * sx))
        if image.ndim == 3:
            image = np.stack(
                [bilinear_resize(image[..., ch], *model_size) for ch in range(3)], axis=-1
            )
            template = np.stack(
                [bilinear_resize(template[..., ch], t_rows, t_cols) for ch in range(3)], axis=-1
            )
        else:
            image = bilinear_resize(image, *model_size)
            template = bilinear_resize(template, t_rows, t_cols)

    if src.kind == "cross_correlation":
        raw = (
            cross_correlation_color(image, template)
            if image.ndim == 3
            else cross_correlation_map(image, template)
        )
    else:
        raw = ssim_map(image, template)

    if raw.shape != native:
        raw = bilinear_resize(raw, *native)
    normalized = _quantize(minmax_scale(_quantize(raw)))

    if cache_path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        save_map(cache_path, normalized)
    return ProbabilityGrid(normalized)
