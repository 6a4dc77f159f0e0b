"""Complete directed roadmap over sampled nodes plus the start configuration."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .dubins import Configuration, dubins_length_matrix
from .mission import UavParams
from .sampling import SampledNode

START = -1


@dataclass(frozen=True, eq=False)
class RoadmapGraph:
    """Edge weights in seconds.

    ``weights[u, v]`` is the dwell time at ``u`` plus the Dubins flight time
    from ``u`` to ``v``.  ``start_weights[v]`` is the flight time from the
    start configuration; there are no edges back into the start.
    """

    nodes: list[SampledNode]
    start: Configuration
    weights: np.ndarray
    start_weights: np.ndarray
    dwell: np.ndarray
    targets: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)

    def travel_time(self, u: int, v: int) -> float:
        """Dubins flight time alone, without the dwell at ``u``."""
        if u == v:
            return 0.0
        return float(self.weights[u, v] - self.dwell[u])

    def nodes_of(self, target_index: int) -> np.ndarray:
        return np.flatnonzero(self.targets == target_index)


def build_graph(nodes: list[SampledNode], uav: UavParams) -> RoadmapGraph:
    if not nodes:
        raise ValueError("cannot build a roadmap without nodes")
    configs = np.array([v.config.as_tuple() for v in nodes])
    dwell = np.array([v.dwell_seconds for v in nodes])
    weights = dubins_length_matrix(configs, configs, uav.turn_radius)
    weights /= uav.speed
    weights += dwell[:, None]
    np.fill_diagonal(weights, 0.0)
    start_weights = dubins_length_matrix([uav.start.as_tuple()], configs, uav.turn_radius)[0] / uav.speed
    for a in (weights, start_weights, dwell):
        a.setflags(write=False)
    targets = np.array([v.target_index for v in nodes], dtype=np.int64)
    targets.setflags(write=False)
    return RoadmapGraph(list(nodes), uav.start, weights, start_weights, dwell, targets)


def edge_weight(g: RoadmapGraph, u: int, v: int) -> float:
    """Weight of arc ``u -> v``; pass ``START`` as ``u`` for arcs out of the start."""
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range")
    if u == START:
        return float(g.start_weights[v])
    if not 0 <= u < g.n:
        raise IndexError(f"node {u} out of range")
    if u == v:
        raise ValueError("no self arcs in the roadmap")
    return float(g.weights[u, v])


def weights_csv(g: RoadmapGraph) -> str:
    """Weight matrix as CSV with a header row of node ids (debugging aid)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node_id"] + [v.node_id for v in g.nodes])
    for v, row in zip(g.nodes, g.weights):
        w.writerow([v.node_id] + [repr(float(x)) for x in row])
    return buf.getvalue()
