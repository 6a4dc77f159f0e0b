"""Command-line front end.

    dwelltour plan --mission m.json --epsilon 130 --spacing condition7 --out plan.json --svg route.svg
    dwelltour pareto --mission m.json --spacing condition1,condition7 --epsilons 0:400:32 --csv front.csv
    dwelltour compare-greedy --mission m.json --loops-sweep 0,1,2,4 --csv gap.csv
    dwelltour converge --mission m.json --epsilon 130 --reference 848.62 --csv conv.csv

Exit codes: 0 ok, 1 usage or input error, 2 discrete approximation
infeasible, 3 mission infeasible.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .gtsp import InstanceTooLarge
from .mission import MissionError, parse_mission
from .planner import (
    DEFAULT_PARETO_POINTS,
    DEFAULT_STEP,
    DiscreteInfeasible,
    MissionInfeasible,
    PlanResult,
    Roadmap,
    convergence_sweep,
    greedy_comparison,
    pareto_sweep,
    plan,
    prepare,
    resolve_policy,
)
from .sampling import PRESETS, SamplingError, parse_spacing, spacing_label

log = logging.getLogger("dwelltour")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DISCRETE = 2
EXIT_MISSION = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunSummary:
    command: str
    mission_digest: str
    spacing: list[str]
    epsilon: list[float]
    seed: int
    outcome: str = "ok"
    metrics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# ---------------------------------------------------------------------------
# argument helpers


def parse_epsilons(text: str) -> list[float]:
    """``A:B:N`` (N evenly spaced values from A to B) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            a, b, n = float(a), float(b), int(n)
            if n < 1:
                raise ValueError
            if n == 1:
                return [a]
            return [a + (b - a) * i / (n - 1) for i in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad epsilon list {text!r}; use A:B:N or a comma-separated list") from None


def _spacings(text: str):
    out = []
    for part in _split_spacings(text):
        try:
            out.append((part if part in PRESETS else spacing_label(parse_spacing(part)), parse_spacing(part)))
        except ValueError as e:
            raise UsageError(str(e)) from None
    return out


def _split_spacings(text: str) -> list[str]:
    # presets are comma separated; a dr=..,dtheta=..,dalpha=.. triple keeps its commas
    parts, buf = [], []
    for tok in text.split(","):
        tok = tok.strip()
        if tok.startswith(("dtheta=", "dalpha=")) and buf:
            buf.append(tok)
        else:
            if buf:
                parts.append(",".join(buf))
            buf = [tok]
    if buf:
        parts.append(",".join(buf))
    return [p for p in parts if p]


def _read_mission(path: str):
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read mission: {e}") from None
    return parse_mission(raw), hashlib.sha256(raw).hexdigest()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# JSON documents


def _config(c) -> dict:
    return {"x_m": c.x, "y_m": c.y, "heading_rad": c.heading}


def plan_document(rm: Roadmap, res: PlanResult, epsilon: float, policy: str) -> dict:
    m = rm.mission
    d = res.discrete
    stops = []
    for node in res.stops:
        loop = node.loop
        stops.append(
            {
                "node_id": node.node_id,
                "target_id": m.targets[node.target_index].id,
                "config": _config(node.config),
                "start_time_s": float(rm.graph.start_weights[node.node_id]),
                "dwell_s": node.dwell_seconds,
                "loop": {
                    "kind": loop.kind.value,
                    "center": list(loop.center),
                    "radius_m": loop.radius,
                    "direction": loop.direction.value,
                    "loops": loop.loops,
                },
            }
        )
    regions = []
    for t, r in zip(m.targets, rm.regions):
        regions.append(
            {
                "target_id": t.id,
                "center": list(r.center),
                "r_min_m": r.r_min,
                "r_max_m": r.r_max,
                "azimuth_start_rad": r.angular.start,
                "azimuth_extent_rad": r.angular.extent,
            }
        )
    return {
        "spacing": spacing_label(rm.spacing),
        "epsilon_s": epsilon,
        "policy": policy,
        "node_counts": dict(zip((t.id for t in m.targets), rm.counts())),
        "first_target": m.targets[d.target].id,
        "equivalence": d.equivalence,
        "start": _config(m.uav.start),
        "sequence": stops,
        "legs": [
            {
                "from_node": leg.from_node,
                "to_node": leg.to_node,
                "dubins_s": leg.dubins_seconds,
                "dwell_s": leg.dwell_seconds,
            }
            for leg in res.per_leg
        ],
        "totals": {"initial_time_s": d.initial_time, "closed_time_s": d.closed_time},
        "regions": regions,
        "initial_maneuver": [[c.x, c.y] for c in res.initial_maneuver],
        "closed_route": [[c.x, c.y] for c in res.closed_route],
    }


# ---------------------------------------------------------------------------
# plots (projections of the emitted data only)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "dwelltour"
    return plt


def _save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def _region_outline(reg, n=181):
    cx, cy = reg["center"]
    a0, ext = reg["azimuth_start_rad"], reg["azimuth_extent_rad"]
    angles = [a0 + ext * i / (n - 1) for i in range(n)]
    outer = [(cx + reg["r_max_m"] * math.cos(a), cy + reg["r_max_m"] * math.sin(a)) for a in angles]
    inner = [(cx + reg["r_min_m"] * math.cos(a), cy + reg["r_min_m"] * math.sin(a)) for a in reversed(angles)]
    return outer + inner + outer[:1]


def plot_route(doc: dict, path: str):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 6))
    for reg in doc["regions"]:
        pts = _region_outline(reg)
        ax.fill([p[0] for p in pts], [p[1] for p in pts], alpha=0.15, color="tab:blue", lw=0)
        ax.plot(*reg["center"], "k^", ms=5)
        ax.annotate(reg["target_id"], reg["center"], textcoords="offset points", xytext=(4, 4), fontsize=8)
    for stop in doc["sequence"]:
        loop = stop["loop"]
        if loop["kind"] != "NONE":
            ax.add_patch(plt.Circle(loop["center"], loop["radius_m"], fill=False, ls="--", color="tab:green"))
    if doc["closed_route"]:
        xs, ys = zip(*doc["closed_route"])
        ax.plot(xs, ys, color="tab:red", lw=1.2, label="closed trajectory")
    if doc["initial_maneuver"]:
        xs, ys = zip(*doc["initial_maneuver"])
        ax.plot(xs, ys, color="tab:orange", lw=1.2, label="initial maneuver")
    s = doc["start"]
    ax.plot(s["x_m"], s["y_m"], "ko", ms=6, label="start")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    t = doc["totals"]
    ax.set_title(f"initial {t['initial_time_s']:.2f} s, closed {t['closed_time_s']:.2f} s")
    ax.legend(loc="best", fontsize=8)
    _save_svg(fig, path)
    plt.close(fig)


def plot_series(series: dict, xlabel: str, ylabel: str, path: str, step=False):
    """One line per key of ``series``; values are (x list, y list) with None gaps."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 5))
    for label, (xs, ys) in series.items():
        ys = [math.nan if y is None else y for y in ys]
        if step:
            ax.step(xs, ys, where="post", label=label)
        else:
            ax.plot(xs, ys, marker="o", ms=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _save_svg(fig, path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# commands


def cmd_plan(args, summary: RunSummary) -> int:
    m = args.mission_obj
    (label, sp), = args.spacing_list
    policy = resolve_policy(m, args.policy)
    rm = prepare(m, sp)
    summary.metrics["node_counts"] = rm.counts()
    res = plan(m, sp, args.epsilon, policy, args.mode, args.seed, args.effort, args.step, roadmap=rm)
    doc = plan_document(rm, res, args.epsilon, args.policy)
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    if args.svg:
        plot_route(doc, args.svg)
    summary.metrics.update(initial_time=res.discrete.initial_time, closed_time=res.discrete.closed_time)
    return EXIT_OK


def cmd_pareto(args, summary: RunSummary) -> int:
    m = args.mission_obj
    roadmaps = [(label, prepare(m, sp)) for label, sp in args.spacing_list]
    if args.epsilons is None:
        hi = max(float(rm.graph.start_weights.max()) for _, rm in roadmaps)
        eps = [hi * i / (DEFAULT_PARETO_POINTS - 1) for i in range(DEFAULT_PARETO_POINTS)]
    else:
        eps = sorted(args.epsilons)
    summary.epsilon = eps
    rows, series, feasible = [], {}, 0
    for label, rm in roadmaps:
        pts = pareto_sweep(m, rm.spacing, eps, args.policy, args.mode, args.seed, args.effort, roadmap=rm)
        for p in pts:
            feasible += p.initial_time is not None
            rows.append([label, repr(p.epsilon), _fmt(p.initial_time), _fmt(p.closed_time_raw), _fmt(p.closed_time_envelope)])
        series[label] = ([p.epsilon for p in pts], [p.closed_time_envelope for p in pts])
        summary.metrics.setdefault("node_counts", {})[label] = rm.counts()
    header = ["spacing", "epsilon", "initial_time", "closed_time_raw", "closed_time_envelope"]
    _write_text(args.csv, _csv(header, rows))
    if args.svg:
        plot_series(series, "epsilon: initial maneuver bound [s]", "closed trajectory time [s]", args.svg, step=True)
    summary.metrics["feasible_runs"] = feasible
    if feasible == 0:
        summary.outcome = "infeasible-discrete"
        return EXIT_DISCRETE
    return EXIT_OK


def cmd_compare_greedy(args, summary: RunSummary) -> int:
    m = args.mission_obj
    (label, sp), = args.spacing_list
    taus = args.loops_sweep
    rows = greedy_comparison(m, sp, taus, args.epsilons, args.policy, args.mode, args.seed, args.effort)
    header = ["tau", "epsilon", "greedy_closed", "planner_closed", "gap"]
    _write_text(
        args.csv,
        _csv(header, [[r.tau, repr(r.epsilon), repr(r.greedy_closed), _fmt(r.planner_closed), _fmt(r.gap)] for r in rows]),
    )
    if args.svg:
        series = {}
        for r in rows:
            xs, ys = series.setdefault(f"tau={r.tau}", ([], []))
            xs.append(r.epsilon)
            ys.append(r.gap)
        plot_series(series, "epsilon [s]", "greedy - planner closed time [s]", args.svg)
    if all(r.planner_closed is None for r in rows):
        summary.outcome = "infeasible-discrete"
        return EXIT_DISCRETE
    return EXIT_OK


def cmd_converge(args, summary: RunSummary) -> int:
    m = args.mission_obj
    pts = convergence_sweep(
        m, args.epsilon, args.spacing_list, args.policy, args.mode, args.seed, args.effort, args.reference
    )
    header = ["condition", "closed_time", "relative_error", "outcome"]
    _write_text(args.csv, _csv(header, [[p.condition, _fmt(p.closed_time), _fmt(p.relative_error), p.outcome] for p in pts]))
    if args.svg:
        ys = [p.relative_error if args.reference is not None else p.closed_time for p in pts]
        ylabel = "relative error" if args.reference is not None else "closed trajectory time [s]"
        plot_series({"heuristic": ([p.condition for p in pts], ys)}, "sampling condition", ylabel, args.svg)
    summary.metrics["closed_time"] = {p.condition: p.closed_time for p in pts}
    if all(p.closed_time is None for p in pts):
        summary.outcome = "infeasible-discrete"
        return EXIT_DISCRETE
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "pareto": cmd_pareto,
    "compare-greedy": cmd_compare_greedy,
    "converge": cmd_converge,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dwelltour", description="Dwell-time UAV tour planning on sampled Dubins roadmaps.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spacing_default, policy_default="auto"):
        sp.add_argument("--mission", required=True, metavar="PATH")
        sp.add_argument("--spacing", default=spacing_default, help="preset name(s) or dr=..,dtheta=..,dalpha=..")
        sp.add_argument("--policy", default=policy_default, help="auto | best_of_all | target:ID")
        sp.add_argument("--mode", choices=("heuristic", "exact"), default="heuristic")
        sp.add_argument("--effort", choices=("fast", "default", "thorough"), default="default")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--svg", metavar="PATH")

    sp = sub.add_parser("plan", help="plan one route")
    common(sp, "condition5")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--out", metavar="PATH", help="plan JSON (stdout when omitted)")
    sp.add_argument("--step", type=float, default=DEFAULT_STEP, help="route sampling step [m]")

    sp = sub.add_parser("pareto", help="sweep epsilon and emit the trade-off front")
    common(sp, "condition5")
    sp.add_argument("--epsilons", help="A:B:N or comma-separated list")
    sp.add_argument("--csv", metavar="PATH")

    sp = sub.add_parser("compare-greedy", help="greedy baseline versus planner")
    common(sp, "condition5", "best_of_all")
    sp.add_argument("--loops-sweep", default="0,1,2,4", help="comma-separated loop counts applied to every target")
    sp.add_argument("--epsilons", help="A:B:N or comma-separated list (default: greedy initial time)")
    sp.add_argument("--csv", metavar="PATH")

    sp = sub.add_parser("converge", help="closed time across sampling conditions")
    common(sp, ",".join(PRESETS))
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--reference", type=float)
    sp.add_argument("--csv", metavar="PATH")
    return p


def _prepare_args(args):
    args.spacing_list = _spacings(args.spacing)
    if args.command in ("plan", "compare-greedy") and len(args.spacing_list) != 1:
        raise UsageError(f"{args.command} takes exactly one spacing")
    if getattr(args, "epsilon", None) is not None and not args.epsilon >= 0:
        raise UsageError("--epsilon must be non-negative")
    eps = getattr(args, "epsilons", None)
    args.epsilons = None if eps is None else parse_epsilons(eps)
    if args.epsilons is not None and any(e < 0 for e in args.epsilons):
        raise UsageError("epsilons must be non-negative")
    if args.command == "compare-greedy":
        try:
            args.loops_sweep = [int(x) for x in args.loops_sweep.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"bad --loops-sweep {args.loops_sweep!r}") from None
        if any(t < 0 for t in args.loops_sweep):
            raise UsageError("loop counts must be non-negative")
    if getattr(args, "step", 1.0) <= 0:
        raise UsageError("--step must be positive")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    started = time.perf_counter()
    summary = RunSummary(args.command, "", [], [], args.seed)
    try:
        _prepare_args(args)
        summary.spacing = [label for label, _ in args.spacing_list]
        if getattr(args, "epsilon", None) is not None:
            summary.epsilon = [args.epsilon]
        elif args.epsilons is not None:
            summary.epsilon = list(args.epsilons)
        args.mission_obj, summary.mission_digest = _read_mission(args.mission)
        resolve_policy(args.mission_obj, args.policy)
        code = COMMANDS[args.command](args, summary)
    except (UsageError, InstanceTooLarge) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MissionError as e:
        print(f"error: invalid mission field {e.field}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MissionInfeasible as e:
        print(f"error: mission infeasible: {e}", file=sys.stderr)
        summary.outcome = "infeasible-mission"
        code = EXIT_MISSION
    except (DiscreteInfeasible, SamplingError) as e:
        print(f"error: {e}", file=sys.stderr)
        summary.outcome = "infeasible-discrete"
        code = EXIT_DISCRETE
    summary.metrics["wall_time"] = round(time.perf_counter() - started, 3)
    # keep stdout clean when the main output goes there
    table_on_stdout = (args.out if args.command == "plan" else args.csv) in (None, "-")
    print(summary.to_json(), file=sys.stderr if table_on_stdout else sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
