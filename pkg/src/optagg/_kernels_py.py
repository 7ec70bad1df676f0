"""Pure-numpy implementations of the decision kernels.

Reference semantics for the compiled ``_ckernels`` module; both must agree to
rounding.  Ties in nearest-point decisions go to the lowest point index.
"""

import numpy as np

_CHUNK = 1 << 16


def nearest_points(symbols, points):
    """Index of the closest constellation point and the squared distance to it."""
    symbols = np.ascontiguousarray(symbols, dtype=np.complex128)
    points = np.ascontiguousarray(points, dtype=np.complex128)
    idx = np.empty(symbols.size, dtype=np.int64)
    err2 = np.empty(symbols.size, dtype=np.float64)
    for a in range(0, symbols.size, _CHUNK):
        s = symbols[a:a + _CHUNK]
        d = np.abs(s[:, None] - points[None, :]) ** 2
        k = np.argmin(d, axis=1)
        idx[a:a + _CHUNK] = k
        err2[a:a + _CHUNK] = d[np.arange(s.size), k]
    return idx, err2


def phase_search_mse(symbols, points, phases):
    """Decision-directed mean squared error after rotating by each trial phase."""
    symbols = np.ascontiguousarray(symbols, dtype=np.complex128)
    points = np.ascontiguousarray(points, dtype=np.complex128)
    phases = np.ascontiguousarray(phases, dtype=np.float64)
    out = np.empty(phases.size, dtype=np.float64)
    rot = np.exp(1j * phases)
    for i, r in enumerate(rot):
        s = symbols * r
        d = np.abs(s[:, None] - points[None, :]) ** 2
        out[i] = d.min(axis=1).mean()
    return out


def eye_histogram(values, time_index, n_time, lo, hi, n_amp):
    """Count samples per (time bin, amplitude bin); out-of-range amplitudes are dropped."""
    values = np.asarray(values, dtype=np.float64)
    time_index = np.asarray(time_index, dtype=np.int64)
    hist = np.zeros((n_time, n_amp), dtype=np.int64)
    scale = n_amp / (hi - lo)
    a = np.floor((values - lo) * scale).astype(np.int64)
    a[values == hi] = n_amp - 1
    ok = (a >= 0) & (a < n_amp)
    np.add.at(hist, (time_index[ok], a[ok]), 1)
    return hist
