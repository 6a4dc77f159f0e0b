"""End-to-end tour planning on the sampled roadmap.

The initial-maneuver bound ``epsilon`` restricts the first stop to INL, the
nodes reachable from the start within ``epsilon`` seconds.  One target's nodes
are cut down to INL, the GTSP is solved over the remaining roadmap, and the
tour is rotated so it begins at that target.  Every such tour satisfies the
bound; when the chosen target meets one of the two covering conditions
(all of INL belongs to it, or all of its nodes lie in INL) the exact GTSP
optimum is also optimal for the constrained problem.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dubins import Configuration, dubins_shortest_path, sample_path_points
from .graph import RoadmapGraph, build_graph
from .gtsp import GtspInstance, solve_gtsp
from .mission import Finding, Mission, UavParams, validate_mission
from .sampling import SampledNode, SpacingParams, sample_mission, spacing_label
from .visibility import build_visibility_region

log = logging.getLogger(__name__)

DEFAULT_STEP = 25.0
DEFAULT_PARETO_POINTS = 64


class MissionInfeasible(RuntimeError):
    def __init__(self, findings: list[Finding]):
        self.findings = list(findings)
        super().__init__("; ".join(f"{f.target_id}: {f.message}" for f in self.findings))


class DiscreteInfeasible(RuntimeError):
    """No sampled node can be reached within the initial-maneuver bound."""

    def __init__(self, epsilon: float, nearest: float, detail: str = ""):
        self.epsilon = epsilon
        self.nearest_start_time = nearest
        msg = f"Discrete Approximation Infeasible at epsilon={epsilon:g} s"
        if detail:
            msg += f" ({detail})"
        msg += f"; nearest achievable start time is {nearest:.6f} s"
        super().__init__(msg)


@dataclass(frozen=True)
class DiscreteSolution:
    sequence: tuple[int, ...]
    initial_time: float
    closed_time: float
    target: int = 0
    equivalence: bool = False


@dataclass(frozen=True)
class Leg:
    from_node: int
    to_node: int
    dubins_seconds: float
    dwell_seconds: float


@dataclass(frozen=True)
class PlanResult:
    discrete: DiscreteSolution
    initial_maneuver: list[Configuration]
    closed_route: list[Configuration]
    per_leg: list[Leg]
    stops: tuple[SampledNode, ...] = ()


@dataclass(frozen=True)
class InlSelection:
    target: int
    nodes: np.ndarray
    equivalence: bool


@dataclass(eq=False)
class Roadmap:
    """Sampled nodes and graph for one (mission, spacing); reused across epsilon values."""

    mission: Mission
    spacing: SpacingParams
    regions: list
    nodes: list[SampledNode]
    graph: RoadmapGraph
    cache: dict = field(default_factory=dict, repr=False)

    def counts(self) -> list[int]:
        return np.bincount(self.graph.targets, minlength=len(self.mission.targets)).tolist()


def prepare(m: Mission, sp: SpacingParams) -> Roadmap:
    """Validate, sample and build the graph.

    Raises MissionInfeasible or sampling.SamplingError.
    """
    findings = validate_mission(m)
    if findings:
        raise MissionInfeasible(findings)
    regions = [build_visibility_region(t, m.uav.altitude) for t in m.targets]
    nodes = sample_mission(m, sp, regions)
    log.info("%s: %d nodes", spacing_label(sp), len(nodes))
    return Roadmap(m, sp, regions, nodes, build_graph(nodes, m.uav))


def with_uniform_loops(m: Mission, loops: int) -> Mission:
    return dataclasses.replace(m, targets=tuple(dataclasses.replace(t, loops=loops) for t in m.targets))


def resolve_policy(m: Mission, policy: str) -> str:
    """Map ``target:ID`` (a target id or index) to ``target:<index>``."""
    if not policy.startswith("target:"):
        if policy not in ("auto", "best_of_all"):
            raise ValueError(f"unknown policy {policy!r}")
        return policy
    key = policy.split(":", 1)[1]
    ids = [t.id for t in m.targets]
    if key in ids:
        return f"target:{ids.index(key)}"
    if key.isdigit() and int(key) < len(ids):
        return f"target:{int(key)}"
    raise ValueError(f"policy names unknown target {key!r}")


# ---------------------------------------------------------------------------
# discrete problem


def build_inl(g: RoadmapGraph, epsilon: float) -> np.ndarray:
    """Sorted ids of the nodes with start weight <= epsilon."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return np.flatnonzero(g.start_weights <= epsilon)


def select_inl_star(inl, targets, policy: str = "auto") -> list[InlSelection]:
    """Candidate first-stop targets and their share of INL.

    ``targets`` holds the target index of every node.  ``auto`` and
    ``target:j`` return one candidate; ``best_of_all`` returns every target
    with a nonempty share, for the caller to solve and compare.
    """
    inl = np.asarray(inl, dtype=np.int64)
    targets = np.asarray(targets)
    if len(inl) == 0:
        raise ValueError("Problem infeasible at this epsilon/sampling: INL is empty")
    n_targets = int(targets.max()) + 1
    inl_targets = targets[inl]
    share = np.bincount(inl_targets, minlength=n_targets)
    sizes = np.bincount(targets, minlength=n_targets)
    covered = share == sizes  # every node of j is in INL
    single = len(np.unique(inl_targets)) == 1

    def make(j):
        return InlSelection(int(j), inl[inl_targets == j], bool(covered[j] or (single and inl_targets[0] == j)))

    if policy == "auto":
        for j in range(n_targets):
            if covered[j] and share[j] > 0:
                return [make(j)]
        if single:
            return [make(inl_targets[0])]
        return [make(int(np.argmax(share)))]
    if policy == "best_of_all":
        return [make(j) for j in range(n_targets) if share[j] > 0]
    if policy.startswith("target:"):
        j = int(policy.split(":", 1)[1])
        if not 0 <= j < n_targets:
            raise ValueError(f"target index {j} out of range")
        return [make(j)]
    raise ValueError(f"unknown policy {policy!r}")


def tour_cost(g: RoadmapGraph, sequence) -> float:
    """Closed-trajectory time of visiting ``sequence`` cyclically, dwell included."""
    seq = [int(v) for v in sequence]
    if not seq:
        raise ValueError("empty sequence")
    tars = [int(g.targets[v]) for v in seq]
    if len(set(tars)) != len(tars):
        raise ValueError("sequence visits a target twice")
    if len(seq) == 1:
        return float(g.dwell[seq[0]])
    return math.fsum(float(g.weights[a, b]) for a, b in zip(seq, seq[1:] + seq[:1]))


def _solve_for_target(g: RoadmapGraph, sel: InlSelection, mode, seed, effort, cache) -> tuple[int, ...]:
    key = (sel.target, sel.nodes.tobytes(), mode, seed, effort)
    if cache is not None and key in cache:
        return cache[key]
    n_targets = int(g.targets.max()) + 1
    if n_targets == 1:
        # the closed tour is the dwell loop alone
        order = np.lexsort((sel.nodes, g.start_weights[sel.nodes], g.dwell[sel.nodes]))
        seq = (int(sel.nodes[order[0]]),)
    else:
        keep_mask = g.targets != sel.target
        keep_mask[sel.nodes] = True
        keep = np.flatnonzero(keep_mask)
        local = g.targets[keep]
        clusters = [np.flatnonzero(local == j) for j in range(n_targets)]
        inst = GtspInstance(g.weights[np.ix_(keep, keep)], clusters)
        tour = solve_gtsp(inst, mode=mode, seed=seed, effort=effort)
        seq = [int(keep[i]) for i in tour.node_sequence]
        k = next(i for i, v in enumerate(seq) if g.targets[v] == sel.target)
        seq = tuple(seq[k:] + seq[:k])
    if cache is not None:
        cache[key] = seq
    return seq


def solve_discrete(
    g: RoadmapGraph,
    epsilon: float,
    policy: str = "auto",
    mode: str = "heuristic",
    seed: int = 0,
    effort: str = "default",
    cache: dict | None = None,
) -> DiscreteSolution:
    inl = build_inl(g, epsilon)
    if len(inl) == 0:
        raise DiscreteInfeasible(epsilon, float(g.start_weights.min()))
    selections = select_inl_star(inl, g.targets, policy)
    best = None
    for sel in selections:
        if len(sel.nodes) == 0:
            nearest = float(g.start_weights[g.nodes_of(sel.target)].min())
            raise DiscreteInfeasible(epsilon, nearest, f"target index {sel.target} has no node within reach")
        seq = _solve_for_target(g, sel, mode, seed, effort, cache)
        sol = DiscreteSolution(
            seq, float(g.start_weights[seq[0]]), tour_cost(g, seq), sel.target, sel.equivalence
        )
        if best is None or (sol.closed_time, sol.initial_time) < (best.closed_time, best.initial_time):
            best = sol
    return best


# ---------------------------------------------------------------------------
# geometry


def recover_route(g: RoadmapGraph, uav: UavParams, solution: DiscreteSolution, step: float = DEFAULT_STEP) -> PlanResult:
    """Initial maneuver and closed trajectory as sampled configurations."""
    seq = list(solution.sequence)
    stops = tuple(g.nodes[v] for v in seq)
    first = stops[0].config
    initial = sample_path_points(dubins_shortest_path(uav.start, first, uav.turn_radius), uav.start, step)
    route = [first]
    legs = []
    for k, node in enumerate(stops):
        route.extend(node.loop.sample(node.config, step)[1:])
        if len(stops) == 1:
            legs.append(Leg(seq[k], seq[k], 0.0, node.dwell_seconds))
            break
        nxt = stops[(k + 1) % len(stops)]
        path = dubins_shortest_path(node.config, nxt.config, uav.turn_radius)
        route.extend(sample_path_points(path, node.config, step)[1:])
        legs.append(Leg(seq[k], seq[(k + 1) % len(seq)], path.total_length / uav.speed, node.dwell_seconds))
    route[-1] = first  # exact closure; sampled endpoint differs by rounding only
    return PlanResult(solution, initial, route, legs, stops)


# ---------------------------------------------------------------------------
# pipelines


def plan(
    m: Mission,
    sp: SpacingParams,
    epsilon: float,
    policy: str = "auto",
    mode: str = "heuristic",
    seed: int = 0,
    effort: str = "default",
    step: float = DEFAULT_STEP,
    roadmap: Roadmap | None = None,
) -> PlanResult:
    rm = roadmap or prepare(m, sp)
    sol = solve_discrete(rm.graph, epsilon, resolve_policy(m, policy), mode, seed, effort, rm.cache)
    return recover_route(rm.graph, m.uav, sol, step)


def greedy_sequence(g: RoadmapGraph) -> tuple[int, ...]:
    """Nearest unvisited target by pure flight time, starting from the start configuration."""
    n_targets = int(g.targets.max()) + 1
    done = np.zeros(n_targets, dtype=bool)
    seq = []
    times = g.start_weights
    for _ in range(n_targets):
        masked = np.where(done[g.targets], np.inf, times)
        v = int(np.argmin(masked))
        seq.append(v)
        done[g.targets[v]] = True
        times = g.weights[v] - g.dwell[v]
    return tuple(seq)


def greedy_plan(
    m: Mission, sp: SpacingParams, seed: int = 0, step: float = DEFAULT_STEP, roadmap: Roadmap | None = None
) -> PlanResult:
    """Baseline that always flies to the closest node of a target not yet imaged.

    Deterministic; ``seed`` is accepted for interface symmetry only.
    """
    rm = roadmap or prepare(m, sp)
    g = rm.graph
    seq = greedy_sequence(g)
    sol = DiscreteSolution(seq, float(g.start_weights[seq[0]]), tour_cost(g, seq), int(g.targets[seq[0]]), False)
    return recover_route(g, m.uav, sol, step)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DWELLTOUR_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def default_epsilons(g: RoadmapGraph, count: int = DEFAULT_PARETO_POINTS) -> list[float]:
    return np.linspace(0.0, float(g.start_weights.max()), count).tolist()


@dataclass(frozen=True)
class ParetoPoint:
    epsilon: float
    initial_time: float | None
    closed_time_raw: float | None
    closed_time_envelope: float | None


def pareto_envelope(epsilons, runs) -> list[float | None]:
    """For each epsilon, the cheapest closed time over all runs starting within it."""
    out = []
    for eps in epsilons:
        ok = [c for (t, c) in runs if t is not None and t <= eps]
        out.append(min(ok) if ok else None)
    return out


def pareto_sweep(
    m: Mission,
    sp: SpacingParams,
    epsilons,
    policy: str = "auto",
    mode: str = "heuristic",
    seed: int = 0,
    effort: str = "default",
    roadmap: Roadmap | None = None,
) -> list[ParetoPoint]:
    epsilons = [float(e) for e in epsilons]
    if any(b < a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be sorted ascending")
    rm = roadmap or prepare(m, sp)
    pol = resolve_policy(m, policy)

    def run(eps):
        try:
            sol = solve_discrete(rm.graph, eps, pol, mode, seed, effort, rm.cache)
        except DiscreteInfeasible:
            return (None, None)
        return (sol.initial_time, sol.closed_time)

    runs = _map(run, epsilons)
    env = pareto_envelope(epsilons, runs)
    return [ParetoPoint(e, t, c, v) for e, (t, c), v in zip(epsilons, runs, env)]


@dataclass(frozen=True)
class ConvergencePoint:
    condition: str
    closed_time: float | None
    relative_error: float | None
    outcome: str = "ok"
    node_count: int = 0


def convergence_sweep(
    m: Mission,
    epsilon: float,
    conditions,
    policy: str = "auto",
    mode: str = "heuristic",
    seed: int = 0,
    effort: str = "default",
    reference: float | None = None,
) -> list[ConvergencePoint]:
    """Closed time per spacing condition; ``conditions`` holds SpacingParams or (label, SpacingParams)."""
    from .sampling import SamplingError

    items = [c if isinstance(c, tuple) else (spacing_label(c), c) for c in conditions]

    def run(item):
        label, sp = item
        try:
            rm = prepare(m, sp)
        except SamplingError:
            return ConvergencePoint(label, None, None, "empty-sampling")
        try:
            sol = solve_discrete(rm.graph, epsilon, resolve_policy(m, policy), mode, seed, effort, rm.cache)
        except DiscreteInfeasible:
            return ConvergencePoint(label, None, None, "infeasible-discrete", rm.graph.n)
        err = None if reference is None else (sol.closed_time - reference) / reference
        return ConvergencePoint(label, sol.closed_time, err, "ok", rm.graph.n)

    return _map(run, items)


@dataclass(frozen=True)
class GreedyRow:
    tau: int
    epsilon: float
    greedy_closed: float
    planner_closed: float | None

    @property
    def gap(self) -> float | None:
        return None if self.planner_closed is None else self.greedy_closed - self.planner_closed


def greedy_comparison(
    m: Mission,
    sp: SpacingParams,
    taus,
    epsilons=None,
    policy: str = "best_of_all",
    mode: str = "heuristic",
    seed: int = 0,
    effort: str = "default",
) -> list[GreedyRow]:
    """Greedy vs planner closed times with every target set to ``tau`` loops.

    Without explicit ``epsilons`` each tau is compared at the greedy route's own
    initial time, where the greedy route is itself a feasible candidate.
    """
    rows = []
    for tau in taus:
        mt = with_uniform_loops(m, int(tau))
        rm = prepare(mt, sp)
        greedy = greedy_plan(mt, sp, seed, roadmap=rm).discrete
        eps_list = [greedy.initial_time] if epsilons is None else list(epsilons)
        for eps in eps_list:
            try:
                sol = solve_discrete(rm.graph, eps, resolve_policy(mt, policy), mode, seed, effort, rm.cache)
                closed = sol.closed_time
            except DiscreteInfeasible:
                closed = None
            rows.append(GreedyRow(int(tau), float(eps), greedy.closed_time, closed))
    return rows
