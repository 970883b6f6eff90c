"""Hot numeric kernels with numba and pure-numpy implementations.

Four inner loops dominate the runtime of the whole package:

* ``power_norm_batch`` -- weighted sums of |U @ G|**beta rows, the core of
  every characteristic-function evaluation on a quadrature grid,
* ``ecf_batch`` -- the joint empirical characteristic function of a path
  at many frequency nodes,
* ``cms_transform`` -- the Chambers-Mallows-Stuck map from (uniform,
  exponential) pairs to symmetric stable variates,
* ``path_convolve`` -- the discretized stochastic integral (kernel taps
  against a shared noise array).

Each has a numba twin selected via :mod:`stablema._backend`.  The numba
loops are written serially so results do not depend on a threading
schedule.
"""

import numpy as np

from ._backend import USE_NUMBA

__all__ = ["power_norm_batch", "ecf_batch", "cms_transform", "path_convolve"]

_ECF_CHUNK = 128


# ---------------------------------------------------------------------------
# numpy implementations


def _power_norm_batch_np(U, G, w, beta, cap=np.inf):
    # out[q] = sum_j w[j] * |sum_k U[q,k] G[k,j]|**beta, clipped at >= cap.
    # (The numba twin stops accumulating once a row passes `cap`; rows at
    # or above it are only ever fed to exp(-x), where both are ~0.)
    S = U @ G
    np.abs(S, out=S)
    out = np.power(S, beta) @ w
    if np.isfinite(cap):
        out = np.minimum(out, cap)
    return out


def _ecf_batch_np(x, U):
    n = x.shape[0]
    q_total, m = U.shape
    windows = np.lib.stride_tricks.sliding_window_view(x, m)
    out = np.empty(q_total)
    for lo in range(0, q_total, _ECF_CHUNK):
        hi = min(lo + _ECF_CHUNK, q_total)
        args = windows @ U[lo:hi].T
        out[lo:hi] = np.cos(args).sum(axis=0)
    return out / n


def _cms_transform_np(v, w, beta):
    if beta == 1.0:
        return np.tan(v)
    bv = beta * v
    t1 = np.sin(bv) / np.cos(v) ** (1.0 / beta)
    t2 = (np.cos(v - bv) / w) ** ((1.0 - beta) / beta)
    return t1 * t2


def _path_convolve_np(taps, noise, n, per_unit):
    windows = np.lib.stride_tricks.sliding_window_view(noise, taps.shape[0])
    idx = np.arange(n) * per_unit
    return windows[idx] @ taps[::-1]


# ---------------------------------------------------------------------------
# numba implementations

if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _power_norm_batch_nb(U, G, w, beta, cap=np.inf):
        q_total, m = U.shape
        j_total = G.shape[1]
        out = np.empty(q_total)
        for q in range(q_total):
            acc = 0.0
            for j in range(j_total):
                s = 0.0
                for k in range(m):
                    s += U[q, k] * G[k, j]
                acc += w[j] * abs(s) ** beta
                if acc >= cap:
                    acc = cap
                    break
            out[q] = acc
        return out

    @njit(cache=True)
    def _ecf_batch_nb(x, U):
        n = x.shape[0]
        q_total, m = U.shape
        out = np.empty(q_total)
        for q in range(q_total):
            acc = 0.0
            for i in range(n - m + 1):
                s = 0.0
                for k in range(m):
                    s += U[q, k] * x[i + k]
                acc += np.cos(s)
            out[q] = acc / n
        return out

    @njit(cache=True)
    def _cms_transform_nb(v, w, beta):
        out = np.empty(v.shape[0])
        if beta == 1.0:
            for i in range(v.shape[0]):
                out[i] = np.tan(v[i])
            return out
        c = (1.0 - beta) / beta
        for i in range(v.shape[0]):
            bv = beta * v[i]
            t1 = np.sin(bv) / np.cos(v[i]) ** (1.0 / beta)
            out[i] = t1 * (np.cos(v[i] - bv) / w[i]) ** c
        return out

    @njit(cache=True)
    def _path_convolve_nb(taps, noise, n, per_unit):
        n_taps = taps.shape[0]
        out = np.empty(n)
        for t in range(n):
            base = t * per_unit + n_taps - 1
            acc = 0.0
            for j in range(n_taps):
                acc += taps[j] * noise[base - j]
            out[t] = acc
        return out

    power_norm_batch = _power_norm_batch_nb
    ecf_batch = _ecf_batch_nb
    cms_transform = _cms_transform_nb
    path_convolve = _path_convolve_nb
else:
    power_norm_batch = _power_norm_batch_np
    ecf_batch = _ecf_batch_np
    cms_transform = _cms_transform_np
    path_convolve = _path_convolve_np
