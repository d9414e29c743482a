"""Per-write inconsistency windows, error rates, and latency distributions.

All functions are pure over an immutable log: re-running the analysis on a
stored log reproduces the report exactly. Results are reported per
cooperation graph and as a global aggregate equal to the merge of the
per-graph sections; ops flagged as warmup are excluded throughout.

A write's inconsistency window is the span between the first and the last
ApplyEnd of that write across replicas (the state-mutation instants). Writes
that never reached every vertex of their chosen replication graph (crash-stop
in the path, or no ApplyEnd at all) have no defined window and are counted
separately as non-converged rather than folded into the histogram.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

from .engine import APPLY_END, GRAPH_CHOSEN, OP_COMMIT, OP_FAIL, OP_START
from .errors import MalformedLogError
from .workload import READ, WRITE

# Fixed log-scale bucket edges: 1 us .. 100 s, 5 buckets per decade. Values
# of exactly zero get their own bucket so reports stay comparable across runs.
HISTOGRAM_EDGES_US = tuple(round(10 ** (k / 5)) for k in range(41))

_TERMINAL = (OP_COMMIT, OP_FAIL)


def _event_list(log):
    return log.events if hasattr(log, "events") else log


def group_events(log) -> dict[int, list]:
    """Partition events by op id, each group ordered by (time, seq).

    Raises MalformedLogError if an op lacks an op_start or a terminal event,
    or has more than one of either.
    """
    events = sorted(_event_list(log), key=lambda e: (e[1], e[0]))
    groups: dict[int, list] = {}
    for ev in events:
        if ev[2] is not None:
            groups.setdefault(ev[2], []).append(ev)
    for op_id, group in groups.items():
        starts = sum(1 for ev in group if ev[3] == OP_START)
        terminals = sum(1 for ev in group if ev[3] in _TERMINAL)
        if starts != 1:
            raise MalformedLogError(f"op {op_id} has {starts} op_start events")
        if terminals != 1:
            raise MalformedLogError(f"op {op_id} has {terminals} terminal events")
    return groups


def inconsistency_window(write_group: list, graph_vertices) -> int | None:
    """max - min ApplyEnd time over replicas, or None when undefined.

    Undefined when the write produced no ApplyEnd at all or some vertex of
    its replication graph never applied it.
    """
    apply_times = {}
    for ev in write_group:
        if ev[3] == APPLY_END:
            apply_times[ev[4][0]] = ev[1]
    if not apply_times or set(graph_vertices) - set(apply_times):
        return None
    return max(apply_times.values()) - min(apply_times.values())


@dataclass
class _Section:
    ops: int = 0
    reads: int = 0
    writes: int = 0
    commits: int = 0
    fails: int = 0
    read_fails: int = 0
    write_fails: int = 0
    latencies: list = field(default_factory=list)
    windows: list = field(default_factory=list)
    non_converged: int = 0

    def to_json(self) -> dict:
        return {
            "counts": {
                "ops": self.ops,
                "reads": self.reads,
                "writes": self.writes,
                "commits": self.commits,
                "fails": self.fails,
            },
            "error_rate": {
                "all": self.fails / self.ops if self.ops else 0.0,
                "read": self.read_fails / self.reads if self.reads else 0.0,
                "write": self.write_fails / self.writes if self.writes else 0.0,
            },
            "latency_us": _histogram_summary(self.latencies),
            "inconsistency_window_us": _histogram_summary(self.windows),
            "non_converged_writes": self.non_converged,
        }


def _percentile(sorted_values, q):
    """Nearest-rank percentile over a non-empty sorted list."""
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


def _histogram_summary(values) -> dict:
    values = sorted(values)
    zero = 0
    counts = [0] * len(HISTOGRAM_EDGES_US)
    overflow = 0
    top = HISTOGRAM_EDGES_US[-1]
    for v in values:
        if v == 0:
            zero += 1
        elif v > top:
            overflow += 1
        else:
            counts[bisect_left(HISTOGRAM_EDGES_US, v)] += 1
    if not values:
        return {
            "count": 0,
            "mean": None,
            "median": None,
            "p95": None,
            "p99": None,
            "max": None,
            "histogram": {"zero": 0, "edges_us": list(HISTOGRAM_EDGES_US), "counts": counts, "overflow": 0},
        }
    return {
        "count": len(values),
        "mean": sum(values) / len(values),
        "median": _percentile(values, 0.50),
        "p95": _percentile(values, 0.95),
        "p99": _percentile(values, 0.99),
        "max": values[-1],
        "histogram": {"zero": zero, "edges_us": list(HISTOGRAM_EDGES_US), "counts": counts, "overflow": overflow},
    }


def op_records(log) -> list[dict]:
    """One record per op: identity, chosen graph, outcome, latency, window."""
    graphs = log.meta.get("graphs", {}) if hasattr(log, "meta") else {}
    records = []
    for op_id, group in sorted(group_events(log).items()):
        rec = {
            "op_id": op_id,
            "client_id": None,
            "kind": None,
            "key": None,
            "graph_id": None,
            "start_us": None,
            "status": None,
            "latency_us": None,
            "window_us": None,
            "warmup": False,
        }
        apply_times = {}
        for ev in group:
            kind = ev[3]
            if kind == OP_START:
                client, op_kind, key, _, _, warmup, _ = ev[4]
                rec.update(client_id=client, kind=op_kind, key=key, start_us=ev[1], warmup=warmup)
            elif kind == GRAPH_CHOSEN:
                rec["graph_id"] = ev[4][0]
            elif kind == APPLY_END:
                apply_times[ev[4][0]] = ev[1]
            elif kind == OP_COMMIT:
                rec["status"] = "committed"
                rec["latency_us"] = ev[4][0]
            elif kind == OP_FAIL:
                rec["status"] = f"failed:{ev[4][0]}"
        if rec["kind"] == WRITE:
            vertices = graphs.get(rec["graph_id"], {}).get("vertices")
            if vertices is not None:
                window = inconsistency_window(group, vertices)
            else:
                window = (max(apply_times.values()) - min(apply_times.values())) if apply_times else None
            rec["window_us"] = window
        records.append(rec)
    return records


def build_datacentric_report(log) -> dict:
    """Stage-2 report: window/latency distributions and error rates, per graph and global."""
    graphs_meta = log.meta.get("graphs", {}) if hasattr(log, "meta") else {}
    global_section = _Section()
    per_graph: dict[int, _Section] = {}

    for rec in op_records(log):
        if rec["warmup"]:
            continue
        gid = rec["graph_id"]
        sections = [global_section]
        if gid is not None:
            sections.append(per_graph.setdefault(gid, _Section()))
        is_write = rec["kind"] == WRITE
        committed = rec["status"] == "committed"
        for s in sections:
            s.ops += 1
            if is_write:
                s.writes += 1
            elif rec["kind"] == READ:
                s.reads += 1
            if committed:
                s.commits += 1
                s.latencies.append(rec["latency_us"])
            else:
                s.fails += 1
                if is_write:
                    s.write_fails += 1
                else:
                    s.read_fails += 1
            if is_write:
                if rec["window_us"] is None:
                    s.non_converged += 1
                else:
                    s.windows.append(rec["window_us"])

    return {
        "kind": "datacentric_report",
        "format": 1,
        "global": global_section.to_json(),
        "graphs": {
            str(gid): {**per_graph[gid].to_json(), **_graph_label(graphs_meta, gid)}
            for gid in sorted(per_graph)
        },
    }


def _graph_label(graphs_meta, gid):
    info = graphs_meta.get(gid) or graphs_meta.get(str(gid)) or {}
    return {"graph_kind": info.get("kind")} if info else {}
