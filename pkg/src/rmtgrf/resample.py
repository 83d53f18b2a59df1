"""Bilinear resampling between regular grids (corner-aligned)."""
import numpy as np


def _weights(n_in, n_out):
    pos = np.linspace(0.0, n_in - 1, n_out)
    i0 = np.clip(np.floor(pos).astype(int), 0, max(n_in - 2, 0))
    i1 = np.minimum(i0 + 1, n_in - 1)
    t = pos - i0
    return i0, i1, t


def resize_bilinear(arr, shape):
    """Resample the last two axes of ``arr`` to ``shape``.

    First and last samples map onto each other, so the output range never
    exceeds the input range.
    """
    arr = np.asarray(arr, dtype=float)
    h, w = arr.shape[-2:]
    H, W = shape
    r0, r1, tr = _weights(h, H)
    c0, c1, tc = _weights(w, W)
    rows = arr[..., r0, :] * (1 - tr)[:, None] + arr[..., r1, :] * tr[:, None]
    return rows[..., c0] * (1 - tc) + rows[..., c1] * tc
