"""Generalized TSP solvers.

A GTSP instance asks for the cheapest closed tour visiting exactly one node of
every cluster.  It is reduced to an asymmetric TSP with the Noon-Bean
transform, solved there either exactly (Held-Karp, small instances only) or
with a nearest-neighbor + Or-opt + 3-opt local search, and contracted back.
The heuristic result is then polished directly on the GTSP (node replacement
and cluster reinsertion moves).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _atsp

EXACT_MAX_NODES = 15
BRUTE_FORCE_LIMIT = 10**6
RESTARTS = {"fast": 1, "default": 8, "thorough": 32}
# full candidate lists below this size, nearest-K lists above
_FULL_NEIGHBORHOOD = 80
_NEIGHBORS = 10


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GtspInstance:
    weight: np.ndarray
    clusters: tuple[np.ndarray, ...]

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weight must be a square matrix")
        clusters = tuple(np.asarray(c, dtype=np.int64).reshape(-1) for c in self.clusters)
        if not clusters or any(len(c) == 0 for c in clusters):
            raise ValueError("clusters must be nonempty")
        flat = np.concatenate(clusters)
        if len(flat) != w.shape[0] or not np.array_equal(np.sort(flat), np.arange(w.shape[0])):
            raise ValueError("clusters must partition the node set")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "clusters", clusters)

    @property
    def n(self) -> int:
        return self.weight.shape[0]

    @property
    def m(self) -> int:
        return len(self.clusters)

    def cluster_of(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for j, c in enumerate(self.clusters):
            out[c] = j
        return out


@dataclass(frozen=True, eq=False)
class AtspInstance:
    weight: np.ndarray
    node_map: np.ndarray
    penalty: float
    sentinel: float


@dataclass(frozen=True)
class GtspTour:
    node_sequence: tuple[int, ...]
    cost: float


def cycle_cost(w: np.ndarray, seq) -> float:
    """Cyclic sum of weights along ``seq``; zero for a single node."""
    seq = list(seq)
    if len(seq) < 2:
        return 0.0
    return math.fsum(float(w[a, b]) for a, b in zip(seq, seq[1:] + seq[:1]))


def noon_bean_transform(g: GtspInstance) -> AtspInstance:
    """Noon-Bean reduction of ``g`` to an ATSP on the same node indices.

    Each cluster is chained into a zero-weight cycle in its listed order; an
    arc leaving a cluster from ``u`` is charged as if it left from the node
    after ``u`` on that cycle, plus a uniform penalty.
    """
    n = g.n
    cl = g.cluster_of()
    sigma = np.empty(n, dtype=np.int64)
    for c in g.clusters:
        sigma[c] = np.roll(c, -1)
    same = cl[:, None] == cl[None, :]
    penalty = 1.0 + float(g.weight[~same].sum())
    sentinel = (g.m + 1) * penalty
    w = g.weight[sigma, :] + penalty
    w[same] = sentinel
    w[np.arange(n), sigma] = 0.0
    return AtspInstance(w, np.arange(n), penalty, sentinel)


def _check_size(n: int):
    if n > EXACT_MAX_NODES:
        raise InstanceTooLarge(f"exact ATSP limited to {EXACT_MAX_NODES} nodes, got {n}")


def solve_atsp_exact(w) -> tuple[list[int], float]:
    """Held-Karp dynamic program; tours start at node 0."""
    w = np.ascontiguousarray(w, dtype=float)
    n = w.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes")
    _check_size(n)
    tour, cost = _atsp.held_karp(w)
    return [int(x) for x in tour], float(cost)


def _candidate_lists(w: np.ndarray):
    n = w.shape[0]
    k = n - 1 if n <= _FULL_NEIGHBORHOOD else _NEIGHBORS
    masked = w.copy()
    np.fill_diagonal(masked, np.inf)
    if k < n - 1:
        part = np.argpartition(masked, k, axis=1)[:, :k]
        order = np.take_along_axis(masked, part, axis=1).argsort(axis=1, kind="stable")
        nbr = np.take_along_axis(part, order, axis=1)
    else:
        nbr = masked.argsort(axis=1, kind="stable")[:, : n - 1]
    nbr = np.ascontiguousarray(nbr, dtype=np.int64)
    # inverse lists: for every v, the nodes u having v among their neighbors
    src = np.repeat(np.arange(n), nbr.shape[1])
    dst = nbr.reshape(-1)
    order = np.argsort(dst, kind="stable")
    inv_idx = np.ascontiguousarray(src[order], dtype=np.int64)
    inv_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(dst, minlength=n), out=inv_ptr[1:])
    return nbr, inv_ptr, inv_idx


def solve_atsp_heuristic(w, seed: int = 0, effort: str = "default", trace: bool = False):
    """Nearest-neighbor construction plus Or-opt / 3-opt local search.

    Runs one restart per effort level (1 / 8 / 32) from seeded start nodes and
    keeps the cheapest tour.  Returns ``(tour, cost)``, or ``(tour, cost,
    history)`` with the per-move costs of every restart when ``trace`` is set.
    """
    w = np.ascontiguousarray(w, dtype=float)
    n = w.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes")
    restarts = RESTARTS[effort]
    rng = np.random.default_rng(seed)
    starts = rng.permutation(n)[: min(restarts, n)]
    nbr, inv_ptr, inv_idx = _candidate_lists(w)
    finite = w[np.isfinite(w)]
    tol = 1e-13 * max(1.0, float(np.abs(finite).max()) if finite.size else 1.0)
    best_tour, best_cost = None, math.inf
    histories = []
    for s in starts:
        tour = _atsp.nearest_neighbor(w, int(s))
        tour, history = _atsp.local_search(w, tour, nbr, inv_ptr, inv_idx, tol)
        histories.append(list(history))
        cost = float(_atsp.tour_cost(w, tour))
        if cost < best_cost:
            best_tour, best_cost = tour, cost
    out = [int(x) for x in best_tour]
    if trace:
        return out, best_cost, histories
    return out, best_cost


def contract_tour(at: AtspInstance, g: GtspInstance, tour) -> list[int]:
    """GTSP node sequence (cluster entry nodes) from a Noon-Bean ATSP tour."""
    tour = [int(at.node_map[x]) for x in tour]
    n = len(tour)
    for a, b in zip(tour, tour[1:] + tour[:1]):
        if at.weight[a, b] >= at.sentinel:
            raise RuntimeError(f"ATSP tour uses forbidden arc {a}->{b}")
    cl = g.cluster_of()
    entries = [tour[i] for i in range(n) if cl[tour[i - 1]] != cl[tour[i]]]
    if sorted(cl[entries].tolist()) != list(range(g.m)):
        raise RuntimeError("ATSP tour does not traverse every cluster exactly once")
    return entries


def _rotate_to_min(seq: list[int]) -> list[int]:
    i = seq.index(min(seq))
    return seq[i:] + seq[:i]


def brute_force_gtsp(g: GtspInstance) -> GtspTour:
    """Exhaustive optimum over node choices and cluster orders (cluster 0 first)."""
    m = g.m
    size = math.prod(len(c) for c in g.clusters) * math.factorial(max(m - 1, 0))
    if size > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"brute force over {size} tours exceeds {BRUTE_FORCE_LIMIT}")
    if m == 1:
        return GtspTour((int(g.clusters[0][0]),), 0.0)
    w = g.weight
    best_seq, best = None, math.inf
    for order in itertools.permutations(range(1, m)):
        for choice in itertools.product(*(g.clusters[j] for j in (0,) + order)):
            cost = cycle_cost(w, choice)
            if cost < best:
                best, best_seq = cost, choice
    return GtspTour(tuple(int(x) for x in best_seq), best)


# ---------------------------------------------------------------------------
# polishing on the GTSP itself


def _best_pair(w, a_nodes, b_nodes):
    """Exact optimum of a two-cluster tour."""
    costs = w[np.ix_(a_nodes, b_nodes)] + w[np.ix_(b_nodes, a_nodes)].T
    i, j = np.unravel_index(np.argmin(costs), costs.shape)
    return [int(a_nodes[i]), int(b_nodes[j])], float(costs[i, j])


def improve_gtsp_tour(g: GtspInstance, seq: list[int]) -> list[int]:
    """Local search over the GTSP tour until no move improves it.

    Moves: re-choose the node of one cluster, re-choose the nodes of two
    adjacent clusters jointly, and reinsert one cluster at its best position
    with its best node.
    """
    w = g.weight
    cl = g.cluster_of()
    m = len(seq)
    if m == 2:
        a, b = g.clusters[cl[seq[0]]], g.clusters[cl[seq[1]]]
        pair, _ = _best_pair(w, a, b)
        return pair
    seq = list(seq)
    tol = 1e-9 * (1.0 + cycle_cost(w, seq))
    improved = True
    while improved:
        improved = False
        for i in range(m):
            p, v, q = seq[i - 1], seq[i], seq[(i + 1) % m]
            c = g.clusters[cl[v]]
            costs = w[p, c] + w[c, q]
            k = int(np.argmin(costs))
            if costs[k] < w[p, v] + w[v, q] - tol:
                seq[i] = int(c[k])
                improved = True
        for i in range(m):
            j = (i + 1) % m
            p, q = seq[i - 1], seq[(j + 1) % m]
            if p == seq[j]:
                continue
            a, b = g.clusters[cl[seq[i]]], g.clusters[cl[seq[j]]]
            costs = w[p, a][:, None] + w[np.ix_(a, b)] + w[b, q][None, :]
            x, y = np.unravel_index(np.argmin(costs), costs.shape)
            current = w[p, seq[i]] + w[seq[i], seq[j]] + w[seq[j], q]
            if costs[x, y] < current - tol:
                seq[i], seq[j] = int(a[x]), int(b[y])
                improved = True
        for i in range(m):
            v = seq[i]
            p, q = seq[i - 1], seq[(i + 1) % m]
            saving = w[p, v] + w[v, q] - w[p, q]
            rest = seq[:i] + seq[i + 1 :]
            c = g.clusters[cl[v]]
            best_cost, best_at, best_node = math.inf, None, None
            for k in range(len(rest)):
                a, b = rest[k], rest[(k + 1) % len(rest)]
                costs = w[a, c] + w[c, b] - w[a, b]
                x = int(np.argmin(costs))
                if costs[x] < best_cost:
                    best_cost, best_at, best_node = float(costs[x]), k, int(c[x])
            if best_cost < saving - tol:
                seq = rest[: best_at + 1] + [best_node] + rest[best_at + 1 :]
                improved = True
                break
    return seq


def solve_gtsp(g: GtspInstance, mode: str = "heuristic", seed: int = 0, effort: str = "default") -> GtspTour:
    """Solve through the Noon-Bean transform.

    ``exact`` runs Held-Karp on the transformed instance (at most
    ``EXACT_MAX_NODES`` nodes); ``heuristic`` runs the local-search ATSP solver
    and polishes the contracted tour.
    """
    if g.m == 1:
        return GtspTour((int(g.clusters[0][0]),), 0.0)
    at = noon_bean_transform(g)
    if mode == "exact":
        _check_size(g.n)
        tour, atsp_cost = solve_atsp_exact(at.weight)
        seq = contract_tour(at, g, tour)
        cost = cycle_cost(g.weight, seq)
        expected = atsp_cost - g.m * at.penalty
        if abs(cost - expected) > 1e-9 * max(1.0, g.m * at.penalty):
            raise RuntimeError(f"transform mismatch: {cost} vs {expected}")
    elif mode == "heuristic":
        tour, _ = solve_atsp_heuristic(at.weight, seed=seed, effort=effort)
        seq = improve_gtsp_tour(g, contract_tour(at, g, tour))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    seq = _rotate_to_min(seq)
    return GtspTour(tuple(seq), cycle_cost(g.weight, seq))
