"""Trajectory kernels.

Randomness never enters the kernels: uniforms are drawn up front from a
Philox stream keyed by ``seed`` with the replica index in the top counter
word, so every replica is an independent, addressable stream. Both backends
do the same inverse-CDF lookups and the same sequential sums, hence produce
bit-identical output for any thread count.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, maybe_njit, prange

CHUNK = 1024


def replica_uniforms(seed: int, replica: int, count: int) -> np.ndarray:
    bitgen = np.random.Philox(key=int(seed), counter=[0, 0, 0, int(replica)])
    return np.random.Generator(bitgen).random(count)


def uniforms_block(seed: int, first: int, replicas: int, count: int) -> np.ndarray:
    out = np.empty((replicas, count))
    for r in range(replicas):
        out[r] = replica_uniforms(seed, first + r, count)
    return out


def cdf_rows(rows: np.ndarray) -> np.ndarray:
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0
    return np.ascontiguousarray(cum)


def cdf(weights: np.ndarray) -> np.ndarray:
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return cum


@maybe_njit
def _lookup(cum, u):
    # first index with cum[j] > u
    lo = 0
    hi = cum.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@maybe_njit(parallel=True)
def _paths_numba(cum_rows, cum_nu, U):
    R, L = U.shape
    out = np.empty((R, L), np.int64)
    for r in prange(R):
        x = _lookup(cum_nu, U[r, 0])
        out[r, 0] = x
        for k in range(1, L):
            x = _lookup(cum_rows[x], U[r, k])
            out[r, k] = x
    return out


def _paths_numpy(cum_rows, cum_nu, U):
    R, L = U.shape
    out = np.empty((R, L), np.int64)
    out[:, 0] = (cum_nu[None, :] <= U[:, :1]).sum(axis=1)
    for k in range(1, L):
        out[:, k] = (cum_rows[out[:, k - 1]] <= U[:, k:k + 1]).sum(axis=1)
    return out


@maybe_njit(parallel=True)
def _maxima_numba(cum_rows, cum_nu, fc, u, pu, U):
    """Per replica: S*, M*, R*, final M_n, final centred S_n."""
    R, L = U.shape
    out = np.empty((R, 5))
    for r in prange(R):
        x = _lookup(cum_nu, U[r, 0])
        u1 = u[x]
        s = 0.0
        m = 0.0
        s_star = 0.0
        m_star = 0.0
        r_star = 0.0
        for k in range(1, L):
            s += fc[x]
            nx = _lookup(cum_rows[x], U[r, k])
            m += u[nx] - pu[x]
            rem = abs(u1 - u[nx])
            if abs(s) > s_star:
                s_star = abs(s)
            if abs(m) > m_star:
                m_star = abs(m)
            if rem > r_star:
                r_star = rem
            x = nx
        out[r, 0] = s_star
        out[r, 1] = m_star
        out[r, 2] = r_star
        out[r, 3] = m
        out[r, 4] = s
    return out


def _maxima_numpy(cum_rows, cum_nu, fc, u, pu, U):
    R, L = U.shape
    x = (cum_nu[None, :] <= U[:, :1]).sum(axis=1)
    u1 = u[x]
    s = np.zeros(R)
    m = np.zeros(R)
    s_star = np.zeros(R)
    m_star = np.zeros(R)
    r_star = np.zeros(R)
    for k in range(1, L):
        s += fc[x]
        nx = (cum_rows[x] <= U[:, k:k + 1]).sum(axis=1)
        m += u[nx] - pu[x]
        np.maximum(s_star, np.abs(s), out=s_star)
        np.maximum(m_star, np.abs(m), out=m_star)
        np.maximum(r_star, np.abs(u1 - u[nx]), out=r_star)
        x = nx
    return np.column_stack([s_star, m_star, r_star, m, s])


if USE_NUMBA:
    sample_block = _paths_numba
    maxima_block = _maxima_numba
else:
    sample_block = _paths_numpy
    maxima_block = _maxima_numpy


def sample_paths(rows, nu, length: int, replicas: int, seed: int, first_replica: int = 0):
    """States ``X_1 .. X_length`` for ``replicas`` consecutive replica streams."""
    cum_rows, cum_nu = cdf_rows(np.asarray(rows, float)), cdf(np.asarray(nu, float))
    U = uniforms_block(seed, first_replica, replicas, length)
    return sample_block(cum_rows, cum_nu, U)


def replica_maxima(rows, nu, fc, u, n: int, replicas: int, seed: int) -> np.ndarray:
    """Stream ``replicas`` paths of ``n + 1`` states; returns an ``(R, 5)`` table.

    Columns: ``S*_n, M*_n, R*_n, M_n, S_n`` with ``fc`` the centred forcing
    function and ``u`` a Poisson solution for it.
    """
    rows = np.asarray(rows, float)
    cum_rows, cum_nu = cdf_rows(rows), cdf(np.asarray(nu, float))
    fc = np.ascontiguousarray(fc, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    pu = rows @ u
    out = np.empty((replicas, 5))
    for first in range(0, replicas, CHUNK):
        cnt = min(CHUNK, replicas - first)
        U = uniforms_block(seed, first, cnt, n + 1)
        out[first:first + cnt] = maxima_block(cum_rows, cum_nu, fc, u, pu, U)
    return out
