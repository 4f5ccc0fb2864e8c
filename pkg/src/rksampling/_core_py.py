"""Pure-Python (numpy/scipy) implementations of the hot kernels.

Every function here has a twin with the same signature in ``_core.pyx``.
"""

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d


def assign_levels_sorted(values, thresholds):
    """Index of the largest threshold that does not exceed each value.

    Parameters
    ----------
    values : ndarray of float64, shape (m,)
        Nonnegative values.
    thresholds : ndarray of float64, shape (L,)
        Strictly increasing thresholds.

    Returns
    -------
    ndarray of int64
        ``-1`` where the value is below every threshold.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    return np.searchsorted(thresholds, values, side="right").astype(np.int64) - 1


def assign_levels_multi(approx, thresholds):
    """Largest row ``t`` with ``approx[t, i] >= thresholds[t]``; ``-1`` if none."""
    approx = np.ascontiguousarray(approx, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    nlev = approx.shape[0]
    if nlev == 0:
        return np.full(approx.shape[1], -1, dtype=np.int64)
    hit = approx >= thresholds[:, None]
    rev = hit[::-1]
    idx = nlev - 1 - rev.argmax(axis=0)
    return np.where(rev.any(axis=0), idx, -1).astype(np.int64)


def interp_linear_1d(values, first, step, x):
    """Piecewise-linear interpolation of samples at ``first + step * i``.

    Points outside the sample range take the nearest end value.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    xp = first + step * np.arange(values.shape[0], dtype=np.float64)
    return np.interp(np.asarray(x, dtype=np.float64), xp, values)


def window_max_absdiff(K, w):
    """``out[i, j] = max_{|s| <= w} |K[i + s, j] - K[i, j]|`` with the window clipped to the array."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    if w <= 0:
        return np.zeros_like(K)
    hi = maximum_filter1d(K, size=2 * w + 1, axis=0, mode="nearest")
    lo = minimum_filter1d(K, size=2 * w + 1, axis=0, mode="nearest")
    return np.maximum(hi - K, K - lo)
