"""Serialization of event logs, metric reports, and verdict tables.

Events file: JSON Lines. The first line is a ``run_meta`` header carrying the
strategy, seed, and cooperation-graph summaries so the file is
self-contained for re-analysis; every following line is one event with
fields in fixed order (seq, time_us, op_id, kind, then kind-specific
payload). Readers ignore unknown fields and tolerate shuffled event lines;
structural problems raise MalformedLogError with the 1-based line number.
"""

from __future__ import annotations

import csv
import json

from . import engine
from .engine import SimulationLog, VersionRef
from .errors import MalformedLogError

FORMAT_VERSION = 1


def _ref_to_json(ref: VersionRef) -> dict:
    obj = {"write_id": ref.write_id, "client_id": ref.client_id, "client_ts_us": ref.client_timestamp}
    if ref.vclock is not None:
        obj["vclock"] = {str(cid): n for cid, n in ref.vclock}
    return obj


def _ref_from_json(obj) -> VersionRef:
    vclock = obj.get("vclock")
    return VersionRef(
        obj["write_id"],
        obj["client_id"],
        obj["client_ts_us"],
        tuple(sorted((int(c), n) for c, n in vclock.items())) if vclock is not None else None,
    )


def event_to_json(ev) -> dict:
    seq, t, op_id, kind, payload = ev
    obj = {"seq": seq, "time_us": t, "op_id": op_id, "kind": kind}
    if kind == engine.OP_START:
        client, op_kind, key, write_id, payload_bytes, warmup, vclock = payload
        obj["client_id"] = client
        obj["op"] = op_kind
        obj["key"] = key
        if write_id is not None:
            obj["write_id"] = write_id
        obj["payload_bytes"] = payload_bytes
        obj["warmup"] = warmup
        if vclock is not None:
            obj["vclock"] = {str(cid): n for cid, n in vclock}
    elif kind == engine.GRAPH_CHOSEN:
        obj["graph_id"] = payload[0]
    elif kind == engine.APPLY_START:
        obj["replica"] = payload[0]
    elif kind == engine.APPLY_END:
        obj["replica"] = payload[0]
        if isinstance(payload[1], tuple):
            obj["value"] = list(payload[1])
        else:
            obj["write_id"] = payload[1]
    elif kind == engine.ACK:
        obj["parent"] = payload[0]
        obj["child"] = payload[1]
    elif kind == engine.READ_RETURN:
        obj["participants"] = list(payload[0])
        obj["returned"] = [_ref_to_json(r) for r in payload[1]]
    elif kind == engine.OP_COMMIT:
        obj["latency_us"] = payload[0]
    elif kind == engine.OP_FAIL:
        obj["reason"] = payload[0]
    elif kind in (engine.REPLICA_DOWN, engine.REPLICA_UP):
        obj["replica"] = payload[0]
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    return obj


def event_from_json(obj, line: int | None = None):
    try:
        seq, t, op_id, kind = obj["seq"], obj["time_us"], obj["op_id"], obj["kind"]
        if kind == engine.OP_START:
            vclock = obj.get("vclock")
            payload = (
                obj["client_id"],
                obj["op"],
                obj["key"],
                obj.get("write_id"),
                obj["payload_bytes"],
                obj["warmup"],
                tuple(sorted((int(c), n) for c, n in vclock.items())) if vclock is not None else None,
            )
        elif kind == engine.GRAPH_CHOSEN:
            payload = (obj["graph_id"],)
        elif kind == engine.APPLY_START:
            payload = (obj["replica"],)
        elif kind == engine.APPLY_END:
            if "value" in obj:
                payload = (obj["replica"], tuple(obj["value"]))
            else:
                payload = (obj["replica"], obj["write_id"])
        elif kind == engine.ACK:
            payload = (obj["parent"], obj["child"])
        elif kind == engine.READ_RETURN:
            payload = (tuple(obj["participants"]), tuple(_ref_from_json(r) for r in obj["returned"]))
        elif kind == engine.OP_COMMIT:
            payload = (obj["latency_us"],)
        elif kind == engine.OP_FAIL:
            payload = (obj["reason"],)
        elif kind in (engine.REPLICA_DOWN, engine.REPLICA_UP):
            payload = (obj["replica"],)
        else:
            raise MalformedLogError(f"unknown event kind {kind!r}", line)
        return (seq, t, op_id, kind, payload)
    except (KeyError, TypeError) as e:
        raise MalformedLogError(f"event is missing field {e.args[0]!r}", line) from None


def _meta_to_json(meta: dict) -> dict:
    obj = {"kind": "run_meta", "format": FORMAT_VERSION}
    obj.update({k: v for k, v in meta.items() if k != "graphs"})
    obj["graphs"] = {str(gid): info for gid, info in meta.get("graphs", {}).items()}
    return obj


def _meta_from_json(obj) -> dict:
    meta = {k: v for k, v in obj.items() if k not in ("kind", "format", "graphs")}
    meta["graphs"] = {int(gid): info for gid, info in obj.get("graphs", {}).items()}
    return meta


def write_events(log: SimulationLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_meta_to_json(log.meta), separators=(",", ":")))
        fh.write("\n")
        for ev in log.events:
            fh.write(json.dumps(event_to_json(ev), separators=(",", ":")))
            fh.write("\n")


def read_events(path) -> SimulationLog:
    """Parse an events file back into a SimulationLog (without final stores)."""
    meta: dict = {}
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise MalformedLogError("line is not valid JSON", line_no) from None
            if not isinstance(obj, dict) or "kind" not in obj:
                raise MalformedLogError("line is not an event object", line_no)
            if obj["kind"] == "run_meta":
                meta = _meta_from_json(obj)
                continue
            events.append(event_from_json(obj, line_no))
    return SimulationLog(meta, events, {})


def write_json_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


READ_VERDICT_HEADER = ["op_id", "client_id", "key", "start_us", "stale", "mrc", "rywc", "returned_writes"]


def write_read_verdicts(verdicts, path) -> None:
    """Per-read verdict CSV (non-warmup committed reads, one row per read)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(READ_VERDICT_HEADER)
        for v in verdicts:
            if v.warmup:
                continue
            writer.writerow(
                [
                    v.op_id,
                    v.client_id,
                    v.key,
                    v.start_us,
                    str(v.stale).lower(),
                    str(v.mrc).lower(),
                    str(v.rywc).lower(),
                    ";".join(str(w) for w in v.returned_write_ids),
                ]
            )


OPS_HEADER = ["op_id", "client_id", "kind", "key", "graph_id", "start_us", "status", "latency_us", "window_us", "warmup"]


def write_op_table(records, path) -> None:
    """Raw per-op CSV for external plotting (all ops, warmup flagged)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OPS_HEADER)
        for r in records:
            writer.writerow(
                [
                    r["op_id"],
                    r["client_id"],
                    r["kind"],
                    r["key"],
                    r["graph_id"],
                    r["start_us"],
                    r["status"],
                    r["latency_us"] if r["latency_us"] is not None else "",
                    r["window_us"] if r["window_us"] is not None else "",
                    str(r["warmup"]).lower(),
                ]
            )
