"""Transportation simplex (network simplex on the bipartite graph).

Basis = spanning tree of ``m + k - 1`` cells, initialised by the north-west
corner rule. Pricing is Dantzig's most-negative reduced cost until a run of
``m + k`` consecutive degenerate pivots is seen; from then on Bland's rule
(lowest cell index enters, lowest cell index leaves among ties) is used for
the rest of the solve, which rules out cycling.

Everything here is numba-compatible; with ``MARKOV_POISSON_PURE_NUMPY=1`` the
same code runs as plain python.
"""
from __future__ import annotations

import numpy as np

from ._accel import maybe_njit, prange

OPTIMAL = 0
ITERATION_CAP = 1


@maybe_njit
def _nw_corner(a, b, bi, bj, bx):
    m = a.size
    k = b.size
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for t in range(m + k - 1):
        x = min(ra[i], rb[j])
        bi[t] = i
        bj[t] = j
        bx[t] = x
        ra[i] -= x
        rb[j] -= x
        if t == m + k - 2:
            break
        if i == m - 1:
            j += 1
        elif j == k - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1


@maybe_njit
def _adjacency(bi, bj, m, k):
    nb = bi.size
    nn = m + k
    start = np.zeros(nn + 1, np.int64)
    for t in range(nb):
        start[bi[t] + 1] += 1
        start[m + bj[t] + 1] += 1
    for v in range(nn):
        start[v + 1] += start[v]
    fill = start[:-1].copy()
    adj = np.empty(2 * nb, np.int64)
    for t in range(nb):
        r = bi[t]
        c = m + bj[t]
        adj[fill[r]] = t
        fill[r] += 1
        adj[fill[c]] = t
        fill[c] += 1
    return start, adj


@maybe_njit
def _potentials(bi, bj, C, m, k, start, adj, u, v):
    """Solve u_i + v_j = C_ij on the tree, anchored at u_0 = 0."""
    nn = m + k
    seen = np.zeros(nn, np.bool_)
    stack = np.empty(nn, np.int64)
    top = 0
    stack[0] = 0
    top = 1
    seen[0] = True
    u[0] = 0.0
    while top > 0:
        top -= 1
        node = stack[top]
        for p in range(start[node], start[node + 1]):
            t = adj[p]
            r = bi[t]
            c = m + bj[t]
            other = c if node == r else r
            if seen[other]:
                continue
            seen[other] = True
            if other >= m:
                v[other - m] = C[r, bj[t]] - u[r]
            else:
                u[other] = C[r, bj[t]] - v[bj[t]]
            stack[top] = other
            top += 1


@maybe_njit
def _tree_path(ei, ej, m, k, bi, bj, start, adj, path):
    """Basic cells on the tree path from column node ``ej`` back to row ``ei``.

    Returns the path length; ``path[0]`` touches column ``ej``.
    """
    nn = m + k
    parent_edge = np.full(nn, -1, np.int64)
    seen = np.zeros(nn, np.bool_)
    queue = np.empty(nn, np.int64)
    head = 0
    tail = 1
    queue[0] = ei
    seen[ei] = True
    target = m + ej
    while head < tail:
        node = queue[head]
        head += 1
        if node == target:
            break
        for p in range(start[node], start[node + 1]):
            t = adj[p]
            r = bi[t]
            c = m + bj[t]
            other = c if node == r else r
            if not seen[other]:
                seen[other] = True
                parent_edge[other] = t
                queue[tail] = other
                tail += 1
    length = 0
    node = target
    while node != ei:
        t = parent_edge[node]
        path[length] = t
        length += 1
        r = bi[t]
        c = m + bj[t]
        node = r if node == c else c
    return length


@maybe_njit
def transport_simplex(a, b, C, max_iter, eps):
    """Solve ``min <C, X>`` over ``X >= 0`` with row sums ``a``, column sums ``b``.

    ``a`` and ``b`` must be positive with equal totals. Returns
    ``(plan, u, v, status, iterations)`` where ``u, v`` are optimal dual
    potentials (``u_i + v_j <= C_ij + eps``, equality on the support).
    """
    m = a.size
    k = b.size
    nb = m + k - 1
    bi = np.empty(nb, np.int64)
    bj = np.empty(nb, np.int64)
    bx = np.empty(nb)
    _nw_corner(a, b, bi, bj, bx)
    u = np.zeros(m)
    v = np.zeros(k)
    path = np.empty(nb, np.int64)
    bland = False
    degenerate_run = 0
    status = OPTIMAL
    it = 0
    while True:
        start, adj = _adjacency(bi, bj, m, k)
        _potentials(bi, bj, C, m, k, start, adj, u, v)
        ei = -1
        ej = -1
        if bland:
            for i in range(m):
                for j in range(k):
                    if C[i, j] - u[i] - v[j] < -eps:
                        ei = i
                        ej = j
                        break
                if ei >= 0:
                    break
        else:
            best = -eps
            for i in range(m):
                for j in range(k):
                    rc = C[i, j] - u[i] - v[j]
                    if rc < best:
                        best = rc
                        ei = i
                        ej = j
        if ei < 0:
            break
        if it >= max_iter:
            status = ITERATION_CAP
            break
        it += 1
        length = _tree_path(ei, ej, m, k, bi, bj, start, adj, path)
        # even positions lose theta, odd positions gain it
        theta = np.inf
        leave = -1
        leave_key = 0
        for q in range(0, length, 2):
            t = path[q]
            key = bi[t] * k + bj[t]
            if bx[t] < theta or (bx[t] == theta and key < leave_key):
                theta = bx[t]
                leave = t
                leave_key = key
        if theta < 0.0:
            theta = 0.0
        for q in range(length):
            t = path[q]
            if q % 2 == 0:
                bx[t] -= theta
                if bx[t] < 0.0:
                    bx[t] = 0.0
            else:
                bx[t] += theta
        bi[leave] = ei
        bj[leave] = ej
        bx[leave] = theta
        if theta <= 0.0:
            degenerate_run += 1
            if degenerate_run > m + k:
                bland = True
        else:
            degenerate_run = 0
    plan = np.zeros((m, k))
    for t in range(nb):
        plan[bi[t], bj[t]] += bx[t]
    return plan, u, v, status, it


@maybe_njit
def _signed_split(diff):
    m = 0
    k = 0
    for x in range(diff.size):
        if diff[x] > 0.0:
            m += 1
        elif diff[x] < 0.0:
            k += 1
    src = np.empty(m, np.int64)
    snk = np.empty(k, np.int64)
    m = 0
    k = 0
    for x in range(diff.size):
        if diff[x] > 0.0:
            src[m] = x
            m += 1
        elif diff[x] < 0.0:
            snk[k] = x
            k += 1
    return src, snk


@maybe_njit
def w1_signed(diff, cost, max_iter):
    """Value of W1 between the positive and negative parts of ``diff``.

    Valid because ``cost`` is a metric: common mass stays put at zero cost.
    Returns ``(value, status)``.
    """
    src, snk = _signed_split(diff)
    m = src.size
    k = snk.size
    if m == 0 or k == 0:
        return 0.0, OPTIMAL
    a = np.empty(m)
    b = np.empty(k)
    for i in range(m):
        a[i] = diff[src[i]]
    for j in range(k):
        b[j] = -diff[snk[j]]
    total = 0.5 * (a.sum() + b.sum())
    a *= total / a.sum()
    b *= total / b.sum()
    C = np.empty((m, k))
    cmax = 0.0
    for i in range(m):
        for j in range(k):
            C[i, j] = cost[src[i], snk[j]]
            if C[i, j] > cmax:
                cmax = C[i, j]
    plan, u, v, status, it = transport_simplex(a, b, C, max_iter, 1e-12 * max(cmax, 1.0))
    value = 0.0
    for i in range(m):
        for j in range(k):
            value += plan[i, j] * C[i, j]
    return value, status


@maybe_njit(parallel=True)
def pairwise_row_w1(rows, cost, pi_idx, pj_idx, max_iter):
    """W1 between ``rows[pi_idx[t]]`` and ``rows[pj_idx[t]]`` for every ``t``.

    Each pair is solved independently into its own output slot, so the result
    does not depend on the thread schedule.
    """
    npairs = pi_idx.size
    values = np.empty(npairs)
    status = np.zeros(npairs, np.int64)
    for t in prange(npairs):
        diff = rows[pi_idx[t]] - rows[pj_idx[t]]
        val, st = w1_signed(diff, cost, max_iter)
        values[t] = val
        status[t] = st
    return values, status
