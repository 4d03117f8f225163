from __future__ import annotations

import json
import os

import numpy as np
import pytest
from PIL import Image

from scanbench.core import BoundingBox, DatasetSpec, Fixation, Scanpath, Trial


@pytest.fixture
def spec_small() -> DatasetSpec:
    # 64x64 image, 16 px cells -> 4x4 grid.
    return DatasetSpec(
        name="synthetic",
        image_height=64,
        image_width=64,
        fovea_size=16,
        max_fixations=6,
        cell_size=16,
    )


@pytest.fixture
def spec_interiors() -> DatasetSpec:
    # The 768x1024 / 32 px configuration with its 24x32 grid.
    return DatasetSpec(
        name="interiors",
        image_height=768,
        image_width=1024,
        fovea_size=32,
        max_fixations=12,
        cell_size=32,
    )


def make_scanpath(points, found=False, source="s1", max_fixations=10) -> Scanpath:
    return Scanpath(
        source_id=source,
        fixations=tuple(Fixation(float(x), float(y)) for x, y in points),
        target_found=found,
        max_fixations=max_fixations,
    )


def make_trial(
    trial_id="t1",
    bbox=(40, 40, 12, 12),
    initial=(8.0, 8.0),
    scanpaths=(),
    image_ref="unused.pgm",
    template_ref=None,
    category="widget",
) -> Trial:
    return Trial(
        trial_id=trial_id,
        image_ref=image_ref,
        target_template_ref=template_ref,
        target_bbox=BoundingBox(*bbox),
        target_category=category,
        initial_fixation=Fixation(*initial),
        human_scanpaths=tuple(scanpaths),
    )


def write_pgm(path, array):
    Image.fromarray(np.asarray(array, dtype=np.uint8), mode="L").save(path)


def synthetic_image(rng, size=64, bbox=(40, 40, 12, 12)):
    """Noise background with a bright structured patch at the target bbox."""
    img = rng.integers(20, 120, size=(size, size)).astype(np.float64)
    x, y, w, h = bbox
    yy, xx = np.mgrid[0:h, 0:w]
    patch = 150.0 + 50.0 * np.sin(xx * 1.1) * np.cos(yy * 0.9) + 10.0 * rng.random((h, w))
    img[y : y + h, x : x + w] = patch
    return np.clip(img, 0, 255), np.clip(patch, 0, 255)


def write_dataset(root, spec: DatasetSpec, trials, rng=None, with_images=True):
    """Materialize a dataset directory (dataset.json, trials.json, images)."""
    rng = rng or np.random.default_rng(7)
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
    with open(os.path.join(root, "dataset.json"), "w") as fh:
        json.dump(spec_doc, fh, indent=2)
    docs = []
    for t in trials:
        image_name = f"{t['trial_id']}.pgm"
        template_name = f"{t['trial_id']}_template.pgm"
        if with_images:
            bbox = (t["target_bbox"]["x"], t["target_bbox"]["y"],
                    t["target_bbox"]["w"], t["target_bbox"]["h"])
            img, patch = synthetic_image(rng, size=spec.image_width, bbox=bbox)
            write_pgm(os.path.join(root, image_name), img)
            write_pgm(os.path.join(root, template_name), patch)
        docs.append({**t, "image": image_name, "target_template": template_name})
    with open(os.path.join(root, "trials.json"), "w") as fh:
        json.dump(docs, fh, indent=2)
    return root


def trial_doc(
    trial_id,
    bbox,
    initial,
    scanpaths,
    category="widget",
):
    return {
        "trial_id": trial_id,
        "target_bbox": {"x": bbox[0], "y": bbox[1], "w": bbox[2], "h": bbox[3]},
        "target_category": category,
        "initial_fixation": {"x": initial[0], "y": initial[1]},
        "scanpaths": [
            {
                "source_id": source,
                "fixations": [[float(x), float(y)] for x, y in pts],
                "target_found": found,
                "max_fixations": budget,
            }
            for source, pts, found, budget in scanpaths
        ],
    }


@pytest.fixture
def fixture_dataset(tmp_path, spec_small):
    """Five trials, one trivial, three subjects with mostly successful paths."""
    bbox = (40, 40, 12, 12)
    # Fixations that end inside the target square for subjects s1..s3.
    inside = (46.0, 46.0)
    trials = [
        trial_doc(
            "t1", bbox, (8.0, 8.0),
            [
                ("s1", [(8, 8), (20, 30), (30, 44), inside], True, 10),
                ("s2", [(8, 8), (60, 10), (25, 50), inside], True, 10),
                ("s3", [(8, 8), (10, 60), inside], True, 10),
            ],
        ),
        trial_doc(
            "t2", bbox, (60.0, 8.0),
            [
                ("s1", [(60, 8), (30, 20), (44, 42), inside], True, 10),
                ("s2", [(60, 8), (12, 12), (20, 20), (5, 60)], False, 10),
                ("s3", [(60, 8), (50, 30), inside], True, 10),
            ],
        ),
        trial_doc(
            "t3", bbox, (8.0, 60.0),
            [
                ("s1", [(8, 60), (20, 20), inside], True, 10),
                ("s2", [(8, 60), (30, 10), (50, 50)], True, 10),
                ("s3", [(8, 60), (22, 18), (40, 30), inside], True, 10),
            ],
        ),
        # Initial fixation inside the target square: trivial.
        trial_doc(
            "t4", bbox, (45.0, 45.0),
            [("s1", [(45, 45), (50, 50)], True, 10)],
        ),
        trial_doc(
            "t5", bbox, (20.0, 8.0),
            [
                ("s1", [(20, 8), (44, 20), (30, 50), inside], True, 10),
                ("s2", [(20, 8), (10, 44), inside], True, 10),
                ("s3", [(20, 8), (60, 60), (8, 30), inside], True, 10),
            ],
        ),
    ]
    root = tmp_path / "data"
    write_dataset(str(root), spec_small, trials)
    return str(root)
