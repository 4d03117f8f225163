"""Reading and writing the common dataset format, FGRID map files, and images.

The single place where bytes become domain types. Formats:

- ``dataset.json``: {name, image_height, image_width, fovea_size,
  max_fixations, cell_size, color}.
- ``trials.json``: array of {trial_id, image, target_template (nullable),
  target_bbox: {x, y, w, h}, target_category, initial_fixation: {x, y},
  scanpaths: [{source_id, fixations: [[x, y], ...], target_found,
  max_fixations}]}. Coordinates are (x = column, y = row), y-down.
- FGRID: ASCII header line ``FGRID v1 <rows> <cols>\\n`` followed by
  rows * cols little-endian IEEE-754 binary32 values, row-major, y-down.
- Images: PNG (8-bit gray or RGB) and binary PGM (P5).
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np
from PIL import Image

from .core import BoundingBox, DatasetSpec, Fixation, ProbabilityGrid, Scanpath, Trial
from .errors import MapFormatError, ScanbenchError
from .gridops import bilinear_resize, shift_nonnegative
from .preprocess import FoundPredicate, RejectLog, is_found

# Channel weights of the RGB-to-luminance formula used everywhere a color
# image has to collapse to one plane.
RGB_WEIGHTS = (0.2125, 0.7154, 0.0721)

FGRID_MAGIC = b"FGRID v1 "


# ---------------------------------------------------------------------------
# FGRID float-grid container


def save_map(path: str, values: np.ndarray) -> None:
    """Write a 2D float array as an FGRID file (binary32, row-major)."""
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ScanbenchError("FGRID payload must be 2-dimensional")
    header = f"FGRID v1 {arr.shape[0]} {arr.shape[1]}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype("<f4").tobytes(order="C"))


def load_map(
    path: str,
    expected_rows: int | None = None,
    expected_cols: int | None = None,
) -> ProbabilityGrid:
    """Load an FGRID file; resample to the expected dimensions if they differ.

    Resampling is bilinear; any negative values (possible in raw attention
    maps, and creatable by no interpolation here but kept for safety) are
    shifted up so ordering is preserved.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(FGRID_MAGIC):
        raise MapFormatError(f"{path}: bad magic, expected {FGRID_MAGIC!r}", offset=0)
    newline = data.find(b"\n")
    if newline < 0:
        raise MapFormatError(f"{path}: unterminated header", offset=len(data))
    try:
        rows_s, cols_s = data[len(FGRID_MAGIC):newline].split()
        rows, cols = int(rows_s), int(cols_s)
    except ValueError:
        raise MapFormatError(f"{path}: malformed header", offset=len(FGRID_MAGIC)) from None
    if rows < 1 or cols < 1:
        raise MapFormatError(f"{path}: non-positive dimensions {rows}x{cols}", offset=len(FGRID_MAGIC))
    payload = data[newline + 1:]
    expected_bytes = rows * cols * 4
    if len(payload) != expected_bytes:
        raise MapFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected_bytes}",
            offset=newline + 1 + min(len(payload), expected_bytes),
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values.ravel()))[0])
        raise MapFormatError(f"{path}: non-finite value", offset=newline + 1 + 4 * bad)
    if expected_rows is not None and expected_cols is not None:
        if (rows, cols) != (expected_rows, expected_cols):
            values = bilinear_resize(values, expected_rows, expected_cols)
    return ProbabilityGrid(shift_nonnegative(values))


# ---------------------------------------------------------------------------
# Images


def _open_image(path: str) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise ScanbenchError(f"cannot read image {path}: {exc}") from exc
    return img


def load_image_gray(path: str) -> np.ndarray:
    """Image as a 2D float array in [0, 255].

    Already-gray inputs pass through unchanged; RGB collapses with the
    RGB_WEIGHTS luminance formula. Anything but 8-bit gray/RGB is rejected.
    """
    img = _open_image(path)
    if img.mode == "L":
        return np.asarray(img, dtype=np.float64)
    if img.mode == "RGB":
        rgb = np.asarray(img, dtype=np.float64)
        w = RGB_WEIGHTS
        return rgb[..., 0] * w[0] + rgb[..., 1] * w[1] + rgb[..., 2] * w[2]
    raise ScanbenchError(f"{path}: unsupported image mode {img.mode!r} (need 8-bit L or RGB)")


def load_image_rgb(path: str) -> np.ndarray:
    """Image as an (H, W, 3) float array in [0, 255]; gray inputs replicate."""
    img = _open_image(path)
    if img.mode == "L":
        plane = np.asarray(img, dtype=np.float64)
        return np.stack([plane, plane, plane], axis=-1)
    if img.mode == "RGB":
        return np.asarray(img, dtype=np.float64)
    raise ScanbenchError(f"{path}: unsupported image mode {img.mode!r} (need 8-bit L or RGB)")


# ---------------------------------------------------------------------------
# Dataset JSON


def _parse_fixation(obj, width: int, height: int) -> Fixation:
    x = float(obj["x"])
    y = float(obj["y"])
    if not (np.isfinite(x) and np.isfinite(y)):
        raise ValueError("non-finite fixation")
    eps = 1e-6
    return Fixation(x=min(max(x, 0.0), width - eps), y=min(max(y, 0.0), height - eps))


def _parse_scanpath(obj, width: int, height: int) -> Scanpath:
    fixations = []
    for pair in obj["fixations"]:
        x, y = float(pair[0]), float(pair[1])
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ValueError("non-finite fixation")
        eps = 1e-6
        fixations.append(Fixation(x=min(max(x, 0.0), width - eps), y=min(max(y, 0.0), height - eps)))
    return Scanpath(
        source_id=str(obj["source_id"]),
        fixations=tuple(fixations),
        target_found=bool(obj["target_found"]),
        max_fixations=int(obj["max_fixations"]),
    )


def load_dataset_spec(root: str) -> DatasetSpec:
    spec_path = os.path.join(root, "dataset.json")
    if not os.path.isfile(spec_path):
        raise ScanbenchError(f"missing dataset spec: {spec_path}")
    with open(spec_path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        name = str(raw["name"])
        max_fixations = raw.get("max_fixations")
        if max_fixations is None:
            from .preprocess import DEFAULT_MAX_FIXATIONS

            max_fixations = DEFAULT_MAX_FIXATIONS.get(name.lower())
            if max_fixations is None:
                raise ValueError(
                    f"max_fixations missing and no shipped default for {name!r}"
                )
        return DatasetSpec(
            name=name,
            image_height=int(raw["image_height"]),
            image_width=int(raw["image_width"]),
            fovea_size=int(raw["fovea_size"]),
            max_fixations=int(max_fixations),
            cell_size=int(raw["cell_size"]),
            color=bool(raw.get("color", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScanbenchError(f"malformed dataset.json: {exc}") from exc


def load_dataset(root: str) -> tuple[DatasetSpec, list[Trial], RejectLog]:
    """Load and validate a dataset directory.

    Trials failing validation land in the reject log with a reason instead of
    being silently dropped; missing files are fatal.
    """
    spec = load_dataset_spec(root)
    trials_path = os.path.join(root, "trials.json")
    if not os.path.isfile(trials_path):
        raise ScanbenchError(f"missing trials file: {trials_path}")
    with open(trials_path, "r", encoding="utf-8") as fh:
        raw_trials = json.load(fh)
    if not isinstance(raw_trials, list):
        raise ScanbenchError(f"{trials_path}: top-level value must be an array")

    predicate = FoundPredicate.grid(spec)
    trials: list[Trial] = []
    log = RejectLog()
    for idx, raw in enumerate(raw_trials):
        trial_id = str(raw.get("trial_id", f"#{idx}")) if isinstance(raw, dict) else f"#{idx}"
        try:
            if not isinstance(raw, dict):
                raise ValueError("record is not an object")
            bbox_raw = raw["target_bbox"]
            bbox = BoundingBox(
                x=int(bbox_raw["x"]), y=int(bbox_raw["y"]),
                w=int(bbox_raw["w"]), h=int(bbox_raw["h"]),
            )
            if (
                bbox.x < 0 or bbox.y < 0
                or bbox.x + bbox.w > spec.image_width
                or bbox.y + bbox.h > spec.image_height
            ):
                log.add_trial(trial_id, "bbox out of bounds")
                continue
            initial = _parse_fixation(raw["initial_fixation"], spec.image_width, spec.image_height)
            if is_found(initial, bbox, predicate):
                log.add_trial(trial_id, "trivial trial")
                continue
            scanpaths = []
            for s_raw in raw.get("scanpaths", []):
                try:
                    scanpaths.append(_parse_scanpath(s_raw, spec.image_width, spec.image_height))
                except (KeyError, TypeError, ValueError, IndexError) as exc:
                    source = s_raw.get("source_id", "?") if isinstance(s_raw, dict) else "?"
                    log.add_scanpath(trial_id, str(source), f"malformed scanpath: {exc}")
            template = raw.get("target_template")
            trials.append(
                Trial(
                    trial_id=trial_id,
                    image_ref=os.path.join(root, str(raw["image"])),
                    target_template_ref=(
                        os.path.join(root, str(template)) if template else None
                    ),
                    target_bbox=bbox,
                    target_category=str(raw.get("target_category", "")),
                    initial_fixation=initial,
                    human_scanpaths=tuple(scanpaths),
                )
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            log.add_trial(trial_id, f"malformed record: {exc}")
    return spec, trials, log


def save_dataset(root: str, spec: DatasetSpec, trials: list[Trial]) -> None:
    """Write dataset.json and trials.json; image paths are stored relative
    to the output root when possible."""
    os.makedirs(root, exist_ok=True)
    spec_doc = {
        "name": spec.name,
        "image_height": spec.image_height,
        "image_width": spec.image_width,
        "fovea_size": spec.fovea_size,
        "max_fixations": spec.max_fixations,
        "cell_size": spec.cell_size,
        "color": spec.color,
    }
    with open(os.path.join(root, "dataset.json"), "w", encoding="utf-8") as fh:
        json.dump(spec_doc, fh, indent=2)
        fh.write("\n")
    docs = []
    for t in trials:
        docs.append(
            {
                "trial_id": t.trial_id,
                "image": os.path.relpath(t.image_ref, root) if os.path.isabs(t.image_ref) else t.image_ref,
                "target_template": (
                    (os.path.relpath(t.target_template_ref, root) if os.path.isabs(t.target_template_ref) else t.target_template_ref)
                    if t.target_template_ref
                    else None
                ),
                "target_bbox": {"x": t.target_bbox.x, "y": t.target_bbox.y, "w": t.target_bbox.w, "h": t.target_bbox.h},
                "target_category": t.target_category,
                "initial_fixation": {"x": t.initial_fixation.x, "y": t.initial_fixation.y},
                "scanpaths": [
                    {
                        "source_id": s.source_id,
                        "fixations": [[f.x, f.y] for f in s.fixations],
                        "target_found": s.target_found,
                        "max_fixations": s.max_fixations,
                    }
                    for s in t.human_scanpaths
                ],
            }
        )
    with open(os.path.join(root, "trials.json"), "w", encoding="utf-8") as fh:
        json.dump(docs, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Scanpath files (model output / external input; same schema as trials.json
# scanpath entries plus the owning trial_id)


def save_scanpaths(paths: list[tuple[str, Scanpath]], out: str) -> None:
    docs = [
        {
            "trial_id": trial_id,
            "source_id": s.source_id,
            "fixations": [[f.x, f.y] for f in s.fixations],
            "target_found": s.target_found,
            "max_fixations": s.max_fixations,
        }
        for trial_id, s in paths
    ]
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(docs, fh, indent=2)
        fh.write("\n")


def load_scanpaths(path: str) -> list[tuple[str, Scanpath]]:
    with open(path, "r", encoding="utf-8") as fh:
        docs = json.load(fh)
    if not isinstance(docs, list):
        raise ScanbenchError(f"{path}: top-level value must be an array")
    out = []
    for doc in docs:
        out.append(
            (
                str(doc["trial_id"]),
                Scanpath(
                    source_id=str(doc["source_id"]),
                    fixations=tuple(Fixation(float(p[0]), float(p[1])) for p in doc["fixations"]),
                    target_found=bool(doc["target_found"]),
                    max_fixations=int(doc["max_fixations"]),
                ),
            )
        )
    return out
