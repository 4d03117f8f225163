"""Scanpath scoring: cumulative performance curves with AUC, Multi-Match
similarity over the four spatial dimensions, and within/between aggregation.

The temporal (fixation duration) dimension is intentionally absent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Scanpath, Trial


@dataclass(frozen=True)
class CumulativeCurve:
    """values[n-1] = fraction of scanpaths that found the target within n saccades."""

    values: tuple[float, ...]

    def __post_init__(self):
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError("curve values must lie in [0, 1]")
        if any(b < a - 1e-12 for a, b in zip(self.values, self.values[1:])):
            raise ValueError("curve must be monotone non-decreasing")


@dataclass(frozen=True)
class MultiMatchScore:
    shape: float
    direction: float
    length: float
    position: float
    avg: float

    @classmethod
    def from_components(cls, shape, direction, length, position) -> "MultiMatchScore":
        return cls(
            shape=shape,
            direction=direction,
            length=length,
            position=position,
            avg=(shape + direction + length + position) / 4.0,
        )


@dataclass(frozen=True)
class SimplifyThresholds:
    """Merging thresholds for optional scanpath simplification.

    amplitude is in pixels, direction in radians. Consecutive saccade vectors
    are merged while their combined amplitude stays below the amplitude
    threshold or the angle between them stays below the direction threshold.
    """

    amplitude: float
    direction: float


def default_simplify(screen: tuple[float, float]) -> SimplifyThresholds:
    diag = math.hypot(screen[0], screen[1])
    return SimplifyThresholds(amplitude=0.1 * diag, direction=math.radians(45.0))


def cumulative_curve(scanpaths: list[Scanpath], n_max: int) -> CumulativeCurve:
    """Fraction of scanpaths that found the target within n saccades, n = 1..n_max."""
    if not scanpaths:
        raise ValueError("cumulative_curve needs at least one scanpath")
    if n_max < 1:
        raise ValueError("n_max must be positive")
    total = len(scanpaths)
    values = []
    for n in range(1, n_max + 1):
        hits = sum(1 for s in scanpaths if s.target_found and s.n_saccades <= n)
        values.append(hits / total)
    return CumulativeCurve(tuple(values))


def auc(curve: CumulativeCurve) -> float:
    """Normalized area under the cumulative curve: the mean of its values.

    On the unit-spaced budget axis this equals the trapezoidal area divided
    by (n_max - 1) up to the half-weight endpoints; the mean keeps model and
    human values on the same [0, 1] scale.
    """
    if len(curve.values) < 2:
        raise ValueError("curve needs at least 2 points")
    return float(np.mean(curve.values))


# ---------------------------------------------------------------------------
# Multi-Match


def _angle_diff(u: np.ndarray, v: np.ndarray) -> float:
    """Absolute angle between two vectors, wrapped to [0, pi].

    Zero-length vectors take angle 0 by the atan2 convention.
    """
    d = abs(math.atan2(u[1], u[0]) - math.atan2(v[1], v[0]))
    return 2.0 * math.pi - d if d > math.pi else d


def align_vectors(u: np.ndarray, v: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """Cheapest monotone path through the saccade-difference cost matrix.

    M[i][j] is the Euclidean norm of u_i - v_j; moves are right, down and
    diagonal from (0, 0) to (n-1, m-1), and the path cost is the sum of M
    over the path's cells. Among minimal-cost paths the lexicographically
    smallest one is returned, so the result is deterministic.
    """
    n, m = len(u), len(v)
    if n < 1 or m < 1:
        raise ValueError("alignment needs at least one saccade per scanpath")
    M = np.linalg.norm(u[:, None, :] - v[None, :, :], axis=2)

    # cost_from[i][j]: minimal right-associated sum of M over paths to the end.
    cost_from = np.empty((n, m), dtype=np.float64)
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if i == n - 1 and j == m - 1:
                cost_from[i, j] = M[i, j]
            elif i == n - 1:
                cost_from[i, j] = M[i, j] + cost_from[i, j + 1]
            elif j == m - 1:
                cost_from[i, j] = M[i, j] + cost_from[i + 1, j]
            else:
                best = min(cost_from[i, j + 1], cost_from[i + 1, j], cost_from[i + 1, j + 1])
                cost_from[i, j] = M[i, j] + best

    path = [(0, 0)]
    i, j = 0, 0
    while (i, j) != (n - 1, m - 1):
        here = cost_from[i, j]
        # Lexicographic successor order: right, down, diagonal.
        for ni, nj in ((i, j + 1), (i + 1, j), (i + 1, j + 1)):
            if ni < n and nj < m and M[i, j] + cost_from[ni, nj] == here:
                i, j = ni, nj
                break
        else:  # pragma: no cover - DP guarantees a consistent successor
            raise AssertionError("alignment reconstruction failed")
        path.append((i, j))
    return path, float(cost_from[0, 0])


def simplify_vectors(
    fixations: np.ndarray, thresholds: SimplifyThresholds
) -> np.ndarray:
    """Iteratively merge consecutive saccades below the thresholds.

    Merging two saccades removes the fixation between them; repeats until no
    pair qualifies. Returns the surviving fixation coordinates.
    """
    pts = [np.asarray(p, dtype=np.float64) for p in fixations]
    changed = True
    while changed and len(pts) > 2:
        changed = False
        for k in range(1, len(pts) - 1):
            u = pts[k] - pts[k - 1]
            w = pts[k + 1] - pts[k]
            combined = float(np.linalg.norm(u + w))
            if combined < thresholds.amplitude or _angle_diff(u, w) < thresholds.direction:
                del pts[k]
                changed = True
                break
    return np.array(pts)


def multimatch(
    a: Scanpath,
    b: Scanpath,
    screen: tuple[float, float],
    simplify: SimplifyThresholds | None = None,
) -> MultiMatchScore:
    """Compare two scanpaths on vector shape, direction, length and position.

    Saccades are aligned by the cheapest monotone path through the matrix of
    vector-difference norms; per aligned pair the differences are normalized
    by the screen diagonal D (2D for shape, pi for direction) and each
    dimension scores 1 minus the mean normalized difference.

    The comparison is symmetric: the argument pair is put in a canonical
    order first, and every per-pair difference is itself symmetric.
    """
    if len(a.fixations) < 2 or len(b.fixations) < 2:
        raise ValueError("degenerate scanpath: need at least 2 fixations")

    def key(s: Scanpath):
        return (len(s.fixations),) + tuple((f.x, f.y) for f in s.fixations)

    if key(b) < key(a):
        a, b = b, a

    pts_a = np.array([[f.x, f.y] for f in a.fixations], dtype=np.float64)
    pts_b = np.array([[f.x, f.y] for f in b.fixations], dtype=np.float64)
    if simplify is not None:
        pts_a = simplify_vectors(pts_a, simplify)
        pts_b = simplify_vectors(pts_b, simplify)
    u = pts_a[1:] - pts_a[:-1]
    v = pts_b[1:] - pts_b[:-1]

    path, _ = align_vectors(u, v)
    diag = math.hypot(screen[0], screen[1])

    shape_d, dir_d, len_d, pos_d = [], [], [], []
    for i, j in path:
        shape_d.append(float(np.linalg.norm(u[i] - v[j])) / (2.0 * diag))
        dir_d.append(_angle_diff(u[i], v[j]) / math.pi)
        len_d.append(abs(float(np.linalg.norm(u[i])) - float(np.linalg.norm(v[j]))) / diag)
        pos_d.append(float(np.linalg.norm(pts_a[i + 1] - pts_b[j + 1])) / diag)

    def sim(diffs):
        return min(1.0, max(0.0, 1.0 - float(np.mean(diffs))))

    return MultiMatchScore.from_components(
        shape=sim(shape_d), direction=sim(dir_d), length=sim(len_d), position=sim(pos_d)
    )


def mean_multimatch(scores: list[MultiMatchScore]) -> MultiMatchScore:
    if not scores:
        raise ValueError("cannot average an empty score list")
    return MultiMatchScore.from_components(
        shape=float(np.mean([s.shape for s in scores])),
        direction=float(np.mean([s.direction for s in scores])),
        length=float(np.mean([s.length for s in scores])),
        position=float(np.mean([s.position for s in scores])),
    )


def _eligible_humans(trial: Trial, min_fixations: int) -> list[Scanpath]:
    return [
        s
        for s in trial.human_scanpaths
        if s.target_found and len(s.fixations) >= min_fixations
    ]


def within_human_mm(
    trial: Trial,
    screen: tuple[float, float],
    min_fixations: int = 3,
    simplify: SimplifyThresholds | None = None,
) -> MultiMatchScore | None:
    """Mean Multi-Match over all unordered pairs of eligible human scanpaths,
    or None when fewer than two subjects qualify."""
    humans = _eligible_humans(trial, min_fixations)
    if len(humans) < 2:
        return None
    return mean_multimatch(
        [
            multimatch(humans[i], humans[j], screen, simplify)
            for i in range(len(humans))
            for j in range(i + 1, len(humans))
        ]
    )


def human_model_mm(
    trial: Trial,
    model_path: Scanpath,
    screen: tuple[float, float],
    min_fixations: int = 3,
    simplify: SimplifyThresholds | None = None,
) -> MultiMatchScore | None:
    """Mean Multi-Match of the model scanpath against every eligible subject.

    Subjects sharing the model's source_id are skipped so a copied subject is
    never compared with itself. None when the model is ineligible or no
    comparison partner remains.
    """
    if not model_path.target_found or len(model_path.fixations) < min_fixations:
        return None
    partners = [
        h
        for h in _eligible_humans(trial, min_fixations)
        if h.source_id != model_path.source_id
    ]
    if not partners:
        return None
    return mean_multimatch(
        [multimatch(model_path, h, screen, simplify) for h in partners]
    )


def wh_hm_mm(
    trial: Trial,
    model_path: Scanpath,
    screen: tuple[float, float],
    min_fixations: int = 3,
    simplify: SimplifyThresholds | None = None,
) -> tuple[MultiMatchScore | None, MultiMatchScore | None]:
    """Within-human and human-vs-model Multi-Match means for one trial.

    Only scanpaths that found the target with at least min_fixations
    fixations participate; a side whose preconditions fail comes back None
    and the caller excludes and logs the trial.
    """
    return (
        within_human_mm(trial, screen, min_fixations, simplify),
        human_model_mm(trial, model_path, screen, min_fixations, simplify),
    )


def mm_correlation(points: list[tuple[float, float]], method: str = "pearson") -> float | None:
    """Correlation across images between hmMM and whMM averages.

    Returns None when either axis has zero variance (reported as "n/a").
    """
    if len(points) < 3:
        raise ValueError("correlation needs at least 3 points")
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    if method == "spearman":
        from scipy.stats import rankdata

        xs = rankdata(xs)
        ys = rankdata(ys)
    elif method != "pearson":
        raise ValueError(f"unknown correlation method: {method}")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    denom = math.sqrt(float(np.sum(dx * dx)) * float(np.sum(dy * dy)))
    if denom <= 0.0:
        return None
    return float(np.sum(dx * dy)) / denom
