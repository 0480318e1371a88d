"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The two kernels that dominate a run are the per-node hinge-loss SGD loop
(called once per node per round) and the pairwise cluster-distance matrix.
Both exist twice: a loop form compiled with numba's @njit, and a vectorized
numpy form. The backend is picked once at import time: numba when importable,
unless the environment variable SCALESIM_DISABLE_NUMBA is set to anything
other than "" or "0". Both paths implement identical math; they may differ in
floating-point summation order, so cross-backend comparisons are close, not
bit-equal. Within one backend, results are fully deterministic.

benchmarks/bench_kernels.py times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

from .geo import EARTH_RADIUS_KM


def _sgd_epochs_np(X, y, w0, b0, perms, lr0, l2, batch_size):
    """Mini-batch subgradient descent on l2*||w||^2 + mean hinge, numpy path.

    perms holds one precomputed index permutation per epoch so both backends
    walk identical batches. The step counter t starts at 1 and the learning
    rate for step t is lr0 / sqrt(t).
    """
    w = w0.copy()
    b = float(b0)
    n = X.shape[0]
    t = 0
    for e in range(perms.shape[0]):
        order = perms[e]
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            t += 1
            lr = lr0 / np.sqrt(float(t))
            Xb = X[idx]
            yb = y[idx]
            margins = yb * (Xb @ w + b)
            active = margins < 1.0
            m = idx.shape[0]
            grad_w = 2.0 * l2 * w
            grad_b = 0.0
            if np.any(active):
                grad_w = grad_w - (yb[active] @ Xb[active]) / m
                grad_b = -yb[active].sum() / m
            w = w - lr * grad_w
            b = b - lr * grad_b
    return w, b


def _sgd_epochs_loops(X, y, w0, b0, perms, lr0, l2, batch_size):
    # loop form of _sgd_epochs_np, written to compile under @njit
    n, d = X.shape
    w = w0.copy()
    b = b0
    t = 0
    grad = np.empty(d)
    for e in range(perms.shape[0]):
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            m = stop - start
            t += 1
            lr = lr0 / np.sqrt(float(t))
            for j in range(d):
                grad[j] = 2.0 * l2 * w[j]
            gb = 0.0
            for p in range(start, stop):
                i = perms[e, p]
                margin = 0.0
                for j in range(d):
                    margin += X[i, j] * w[j]
                margin = y[i] * (margin + b)
                if margin < 1.0:
                    for j in range(d):
                        grad[j] -= y[i] * X[i, j] / m
                    gb -= y[i] / m
            for j in range(d):
                w[j] -= lr * grad[j]
            b -= lr * gb
    return w, b


def _mixed_distance_matrix_np(ds, pi, lat_rad, lon_rad, w_ds, w_pi, w_gp, geo_scale_km):
    """Pairwise composite distance over similarity, performance, and location."""
    dphi = lat_rad[:, None] - lat_rad[None, :]
    mean_phi = 0.5 * (lat_rad[:, None] + lat_rad[None, :])
    dlam = lon_rad[:, None] - lon_rad[None, :]
    dlam = np.where(dlam > np.pi, dlam - 2.0 * np.pi,
                    np.where(dlam < -np.pi, dlam + 2.0 * np.pi, dlam))
    geo = EARTH_RADIUS_KM * np.sqrt(dphi ** 2 + (np.cos(mean_phi) * dlam) ** 2)
    return (w_ds * np.abs(ds[:, None] - ds[None, :])
            + w_pi * np.abs(pi[:, None] - pi[None, :])
            + w_gp * geo / geo_scale_km)


def _mixed_distance_matrix_loops(ds, pi, lat_rad, lon_rad, w_ds, w_pi, w_gp, geo_scale_km):
    # loop form of _mixed_distance_matrix_np, written to compile under @njit
    n = ds.shape[0]
    out = np.zeros((n, n))
    two_pi = 2.0 * np.pi
    for a in range(n):
        for c in range(a + 1, n):
            dphi = lat_rad[a] - lat_rad[c]
            mean_phi = 0.5 * (lat_rad[a] + lat_rad[c])
            dlam = lon_rad[a] - lon_rad[c]
            if dlam > np.pi:
                dlam -= two_pi
            elif dlam < -np.pi:
                dlam += two_pi
            geo = EARTH_RADIUS_KM * np.sqrt(dphi * dphi + (np.cos(mean_phi) * dlam) ** 2)
            v = (w_ds * abs(ds[a] - ds[c])
                 + w_pi * abs(pi[a] - pi[c])
                 + w_gp * geo / geo_scale_km)
            out[a, c] = v
            out[c, a] = v
    return out


def _numba_disabled() -> bool:
    return os.environ.get("SCALESIM_DISABLE_NUMBA", "0") not in ("", "0")


NUMBA_AVAILABLE = False
if not _numba_disabled():
    try:
        from numba import njit

        NUMBA_AVAILABLE = True
    except ImportError:
        NUMBA_AVAILABLE = False

if NUMBA_AVAILABLE:
    sgd_epochs = njit(cache=True)(_sgd_epochs_loops)
    mixed_distance_matrix = njit(cache=True)(_mixed_distance_matrix_loops)
    BACKEND = "numba"
else:
    sgd_epochs = _sgd_epochs_np
    mixed_distance_matrix = _mixed_distance_matrix_np
    BACKEND = "numpy"
