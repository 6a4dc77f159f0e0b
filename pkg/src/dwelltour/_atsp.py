"""Compiled kernels for the ATSP solvers.

Tours are kept as successor/predecessor arrays.  Every move preserves the
direction of the segments it touches, so the kernels are valid for asymmetric
weights.
"""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def nearest_neighbor(w, start):
    n = w.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    tour = np.empty(n, dtype=np.int64)
    tour[0] = start
    visited[start] = True
    cur = start
    for i in range(1, n):
        best = -1
        best_w = np.inf
        for j in range(n):
            if not visited[j] and w[cur, j] < best_w:
                best_w = w[cur, j]
                best = j
        tour[i] = best
        visited[best] = True
        cur = best
    return tour


@numba.njit(cache=True)
def tour_cost(w, tour):
    n = tour.shape[0]
    total = 0.0
    for i in range(n):
        total += w[tour[i], tour[(i + 1) % n]]
    return total


@numba.njit(cache=True)
def _relink_positions(succ, pos, first):
    n = succ.shape[0]
    x = first
    for i in range(n):
        pos[x] = i
        x = succ[x]


@numba.njit(cache=True)
def _to_tour(succ, first):
    n = succ.shape[0]
    tour = np.empty(n, dtype=np.int64)
    x = first
    for i in range(n):
        tour[i] = x
        x = succ[x]
    return tour


@numba.njit(cache=True)
def _try_or_opt(w, succ, pred, nbr, inv_ptr, inv_idx, tol):
    """One improving segment relocation (segments of 1-3 nodes); returns the gain or 0."""
    n = succ.shape[0]
    k_nbr = nbr.shape[1]
    for seg_len in range(1, 4):
        if seg_len + 2 > n:
            break
        for s in range(n):
            e = s
            for _ in range(seg_len - 1):
                e = succ[e]
            a = pred[s]
            b = succ[e]
            removed = w[a, s] + w[e, b] - w[a, b]
            if removed <= tol:
                continue
            # insertion points c -> d: arcs c->s from the inverse list of s,
            # arcs e->d from the neighbor list of e
            for pass_ in range(2):
                if pass_ == 0:
                    lo = inv_ptr[s]
                    hi = inv_ptr[s + 1]
                else:
                    lo = 0
                    hi = k_nbr
                for idx in range(lo, hi):
                    if pass_ == 0:
                        c = inv_idx[idx]
                        d = succ[c]
                    else:
                        d = nbr[e, idx]
                        c = pred[d]
                    if c == a:
                        continue
                    inside = False
                    x = s
                    for _ in range(seg_len):
                        if x == c:
                            inside = True
                        x = succ[x]
                    if inside:
                        continue
                    delta = w[c, s] + w[e, d] - w[c, d] - removed
                    if delta < -tol:
                        succ[a] = b
                        pred[b] = a
                        succ[c] = s
                        pred[s] = c
                        succ[e] = d
                        pred[d] = e
                        return -delta
    return 0.0


@numba.njit(cache=True)
def _try_segment_swap(w, succ, pred, pos, nbr, inv_ptr, inv_idx, tol):
    """One improving pure 3-opt move t1->t4..t5->t2..t3->t6; returns the gain or 0."""
    n = succ.shape[0]
    k_nbr = nbr.shape[1]
    for t1 in range(n):
        t2 = succ[t1]
        base = pos[t1]
        for a in range(k_nbr):
            t4 = nbr[t1, a]
            r4 = (pos[t4] - base) % n
            if r4 < 2:
                continue
            t3 = pred[t4]
            g1 = w[t1, t2] + w[t3, t4] - w[t1, t4]
            for idx in range(inv_ptr[t2], inv_ptr[t2 + 1]):
                t5 = inv_idx[idx]
                r5 = (pos[t5] - base) % n
                if r5 < r4:
                    continue
                t6 = succ[t5]
                delta = w[t5, t2] + w[t3, t6] - w[t5, t6] - g1
                if delta < -tol:
                    succ[t1] = t4
                    pred[t4] = t1
                    succ[t5] = t2
                    pred[t2] = t5
                    succ[t3] = t6
                    pred[t6] = t3
                    return -delta
    return 0.0


@numba.njit(cache=True)
def local_search(w, tour, nbr, inv_ptr, inv_idx, tol):
    """Or-opt and segment-swap moves until neither improves.

    Returns the improved tour and the cost after every accepted move.
    """
    n = tour.shape[0]
    succ = np.empty(n, dtype=np.int64)
    pred = np.empty(n, dtype=np.int64)
    for i in range(n):
        succ[tour[i]] = tour[(i + 1) % n]
        pred[tour[(i + 1) % n]] = tour[i]
    pos = np.empty(n, dtype=np.int64)
    first = tour[0]
    _relink_positions(succ, pos, first)
    cost = tour_cost(w, tour)
    history = [cost]
    if n < 3:
        return tour.copy(), history
    while True:
        gain = _try_or_opt(w, succ, pred, nbr, inv_ptr, inv_idx, tol)
        if gain <= 0.0:
            gain = _try_segment_swap(w, succ, pred, pos, nbr, inv_ptr, inv_idx, tol)
        if gain <= 0.0:
            break
        _relink_positions(succ, pos, first)
        cost = tour_cost(w, _to_tour(succ, first))
        history.append(cost)
    return _to_tour(succ, first), history


@numba.njit(cache=True)
def held_karp(w):
    """Optimal tour from node 0 and its cost; the lexicographically smallest among ties."""
    n = w.shape[0]
    m = n - 1
    full = (1 << m) - 1
    # best[mask, j]: cheapest completion from node j+1 through every node
    # outside ``mask`` and back to node 0; j+1 is already in ``mask``
    best = np.full((1 << m, m), np.inf)
    for j in range(m):
        best[full, j] = w[j + 1, 0]
    for mask in range(full - 1, 0, -1):
        for j in range(m):
            if not (mask >> j) & 1:
                continue
            b = np.inf
            for k in range(m):
                if (mask >> k) & 1:
                    continue
                c = w[j + 1, k + 1] + best[mask | (1 << k), k]
                if c < b:
                    b = c
            best[mask, j] = b
    opt = np.inf
    for j in range(m):
        c = w[0, j + 1] + best[1 << j, j]
        if c < opt:
            opt = c
    tol = 1e-9 * (1.0 + abs(opt))
    tour = np.empty(n, dtype=np.int64)
    tour[0] = 0
    mask = 0
    spent = 0.0
    cur = 0
    for step in range(1, n):
        for k in range(m):
            if (mask >> k) & 1:
                continue
            nxt = mask | (1 << k)
            if spent + w[cur, k + 1] + best[nxt, k] <= opt + tol:
                spent += w[cur, k + 1]
                mask = nxt
                cur = k + 1
                tour[step] = cur
                break
    return tour, opt
