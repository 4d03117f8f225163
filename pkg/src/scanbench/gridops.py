"""Array resampling helpers: bilinear resize, block means, min-max scaling."""
from __future__ import annotations

import numpy as np


def bilinear_resize(a: np.ndarray, out_rows: int, out_cols: int) -> np.ndarray:
    """Bilinear resample with corner-aligned sampling.

    Output position j along an axis of length n_out samples the input at
    j * (n_in - 1) / (n_out - 1); a single-sample output axis samples the
    input center. Constant inputs are reproduced exactly.
    """
    a = np.asarray(a, dtype=np.float64)
    in_rows, in_cols = a.shape
    if (in_rows, in_cols) == (out_rows, out_cols):
        return a.copy()
    if out_rows < 1 or out_cols < 1:
        raise ValueError("output dimensions must be positive")

    def axis_positions(n_in, n_out):
        if n_out == 1:
            return np.array([(n_in - 1) / 2.0])
        return np.linspace(0.0, n_in - 1, n_out)

    r_pos = axis_positions(in_rows, out_rows)
    c_pos = axis_positions(in_cols, out_cols)
    r0 = np.minimum(np.floor(r_pos).astype(int), in_rows - 1)
    c0 = np.minimum(np.floor(c_pos).astype(int), in_cols - 1)
    r1 = np.minimum(r0 + 1, in_rows - 1)
    c1 = np.minimum(c0 + 1, in_cols - 1)
    fr = (r_pos - r0)[:, None]
    fc = (c_pos - c0)[None, :]

    top = a[np.ix_(r0, c0)] * (1 - fc) + a[np.ix_(r0, c1)] * fc
    bot = a[np.ix_(r1, c0)] * (1 - fc) + a[np.ix_(r1, c1)] * fc
    return top * (1 - fr) + bot * fr


def block_mean(a: np.ndarray, cell_size: int) -> np.ndarray:
    """Mean over cell_size x cell_size blocks; partial edge blocks average
    only the pixels they actually cover."""
    a = np.asarray(a, dtype=np.float64)
    rows, cols = a.shape
    r_starts = np.arange(0, rows, cell_size)
    c_starts = np.arange(0, cols, cell_size)
    sums = np.add.reduceat(np.add.reduceat(a, r_starts, axis=0), c_starts, axis=1)
    r_sizes = np.minimum(r_starts + cell_size, rows) - r_starts
    c_sizes = np.minimum(c_starts + cell_size, cols) - c_starts
    return sums / np.outer(r_sizes, c_sizes)


def minmax_scale(a: np.ndarray, degenerate_value: float = 0.5) -> np.ndarray:
    """Affine rescale to [0, 1]; constant inputs map to degenerate_value."""
    a = np.asarray(a, dtype=np.float64)
    lo = float(a.min())
    hi = float(a.max())
    if hi - lo <= 1e-12:
        return np.full_like(a, degenerate_value)
    return (a - lo) / (hi - lo)


def shift_nonnegative(a: np.ndarray) -> np.ndarray:
    """Subtract the minimum when negative, preserving value ordering."""
    a = np.asarray(a, dtype=np.float64)
    lo = float(a.min())
    if lo < 0:
        return a - lo
    return a.copy()
