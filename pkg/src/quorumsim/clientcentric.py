"""Staleness and session-guarantee violation detection per client session.

Everything here is a pure function of (log, strategy) and is computed post
hoc over the complete log. "Reflects" is strategy-relative: order-key
dominance for the LWW strategies, set inclusion for write_set, and vector
clock dominance for competing_writes. Under the LWW strategies a version's
order key is (client_timestamp, write_id) for lww_timestamp and the commit
order (commit time, write_id) for lww_arrival, with uncommitted versions
ranking below every committed one and the initial version below everything.

A read's staleness reference point is its issue instant: the read is stale
iff its result fails to reflect some write committed at or before that
instant. Warmup ops take part in session context but are excluded from
every numerator and denominator.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .engine import (
    APPLY_END,
    COMPETING_WRITES,
    LWW_ARRIVAL,
    LWW_TIMESTAMP,
    OP_COMMIT,
    OP_FAIL,
    OP_START,
    READ_RETURN,
    WRITE_SET,
    VersionRef,
    merge_heads,
    vclock_dominates,
)
from .errors import MalformedLogError
from .workload import READ, WRITE

_INITIAL_KEY = (-1,)
_LWW = (LWW_TIMESTAMP, LWW_ARRIVAL)
# parse dispatch: 1 apply_end, 2 op_start, 3 read_return, 4 commit, 5 fail
_KIND_CODE = {APPLY_END: 1, OP_START: 2, READ_RETURN: 3, OP_COMMIT: 4, OP_FAIL: 5}


@dataclass(frozen=True)
class WriteRecord:
    """One write on a key, as seen by the detectors."""

    write_id: int
    client_id: int
    client_timestamp: int
    commit_us: int | None
    vclock: tuple | None = None


@dataclass(frozen=True)
class ReadVerdict:
    op_id: int
    client_id: int
    key: int
    start_us: int
    stale: bool
    mrc: bool
    rywc: bool
    returned_write_ids: tuple[int, ...]
    fresh_write_ids: tuple[int, ...]
    warmup: bool = False


@dataclass(slots=True)
class _ReadInfo:
    op_id: int
    client: int
    key: int
    start: int
    warmup: bool
    returned: tuple = ()
    return_time: int | None = None
    commit_us: int | None = None


@dataclass(slots=True)
class _WriteInfo:
    op_id: int
    client: int
    key: int
    start: int
    warmup: bool
    write_id: int
    client_ts: int
    vclock: tuple | None
    commit_us: int | None = None
    applies: dict = field(default_factory=dict)  # replica -> (time, seq)


def _event_list(log):
    return log.events if hasattr(log, "events") else log


def _parse_ops(log):
    """Single pass over events in any order: reads, writes, terminals."""
    reads: dict[int, _ReadInfo] = {}
    writes: dict[int, _WriteInfo] = {}
    pending: list = []
    kind_code = _KIND_CODE
    for ev in _event_list(log):
        code = kind_code.get(ev[3])
        if code is None:
            continue
        op_id = ev[2]
        if op_id is None:
            continue
        if code == 1:
            w = writes.get(op_id)
            if w is not None:
                w.applies[ev[4][0]] = (ev[1], ev[0])
            elif op_id not in reads:
                pending.append(ev)
        elif code == 2:
            t = ev[1]
            client, op_kind, key, write_id, _, warmup, vclock = ev[4]
            if op_kind == WRITE:
                writes[op_id] = _WriteInfo(op_id, client, key, t, warmup, write_id, t, vclock)
            elif op_kind == READ:
                reads[op_id] = _ReadInfo(op_id, client, key, t, warmup)
        elif code == 3:
            r = reads.get(op_id)
            if r is None:
                pending.append(ev)
            else:
                r.returned = tuple(ev[4][1])
                r.return_time = ev[1]
        elif code == 4:
            if op_id in writes:
                writes[op_id].commit_us = ev[1]
            elif op_id in reads:
                reads[op_id].commit_us = ev[1]
            else:
                pending.append(ev)
        elif op_id not in writes and op_id not in reads:
            pending.append(ev)
    # Shuffled logs only: events seen before their op_start.
    for ev in pending:
        seq, t, op_id, kind, payload = ev
        if kind == APPLY_END:
            w = writes.get(op_id)
            if w is not None:
                w.applies[payload[0]] = (t, seq)
            elif op_id not in reads:
                raise MalformedLogError(f"apply_end for unknown op {op_id}")
        elif kind == READ_RETURN:
            r = reads.get(op_id)
            if r is None:
                raise MalformedLogError(f"read_return for unknown op {op_id}")
            r.returned = tuple(payload[1])
            r.return_time = t
        elif kind == OP_COMMIT:
            if op_id in writes:
                writes[op_id].commit_us = t
            elif op_id in reads:
                reads[op_id].commit_us = t
            else:
                raise MalformedLogError(f"terminal event for unknown op {op_id}")
        elif op_id not in writes and op_id not in reads:
            raise MalformedLogError(f"terminal event for unknown op {op_id}")
    return reads, writes


def commit_timestamps(log) -> dict[int, int]:
    """write_id -> commit instant, committed writes only."""
    _, writes = _parse_ops(log)
    return {w.write_id: w.commit_us for w in writes.values() if w.commit_us is not None}


# -- strategy order keys and reflection --------------------------------------

def _returned_key(strategy: str, refs, commit_map):
    """Order key of a read result under an LWW strategy."""
    best = _INITIAL_KEY
    if strategy == LWW_TIMESTAMP:
        for r in refs:
            k = (0, r.client_timestamp, r.write_id)
            if k > best:
                best = k
    else:
        for r in refs:
            c = commit_map.get(r.write_id)
            k = (0, 0, c, r.write_id) if c is not None else (0, -1, 0, r.write_id)
            if k > best:
                best = k
    return best


def _write_key(strategy: str, w):
    if strategy == LWW_TIMESTAMP:
        ts = w.client_timestamp if isinstance(w, (WriteRecord, VersionRef)) else w.client_ts
        return (0, ts, w.write_id)
    if w.commit_us is None:
        return (0, -1, 0, w.write_id)
    return (0, 0, w.commit_us, w.write_id)


def _reflects(strategy, refs, w, commit_map) -> bool:
    """Does a read result (refs) reflect write w?"""
    if strategy == WRITE_SET:
        return any(r.write_id == w.write_id for r in refs)
    if strategy == COMPETING_WRITES:
        wv = w.vclock
        return any(vclock_dominates(r.vclock, wv) for r in refs)
    return _returned_key(strategy, refs, commit_map) >= _write_key(strategy, w)


def judge_staleness(strategy: str, read_start_us: int, returned_refs, key_writes) -> bool:
    """True iff the result fails to reflect some write committed <= read start.

    key_writes is the key's history as WriteRecord entries (failed writes may
    be present; they are ignored for freshness but supply commit lookups).
    """
    fresh = [w for w in key_writes if w.commit_us is not None and w.commit_us <= read_start_us]
    if not fresh:
        return False
    if strategy == WRITE_SET:
        returned_ids = {r.write_id for r in returned_refs}
        return any(w.write_id not in returned_ids for w in fresh)
    if strategy == COMPETING_WRITES:
        return any(
            not any(vclock_dominates(r.vclock, w.vclock) for r in returned_refs)
            for w in fresh
        )
    commit_map = {w.write_id: w.commit_us for w in key_writes if w.commit_us is not None}
    rkey = _returned_key(strategy, returned_refs, commit_map)
    return rkey < max(_write_key(strategy, w) for w in fresh)


# -- internal scans over parsed ops -------------------------------------------


def _commit_map(writes) -> dict[int, int]:
    return {w.write_id: w.commit_us for w in writes.values() if w.commit_us is not None}


def _sessions(infos):
    """(client, key) -> infos in session (issue) order."""
    out: dict[tuple[int, int], list] = {}
    for info in sorted(infos, key=lambda i: i.op_id):
        out.setdefault((info.client, info.key), []).append(info)
    return out


class _KeyHistory:
    """Committed writes per key, commit-ordered, with prefix-max order keys."""

    def __init__(self, writes, strategy):
        by_key: dict[int, list[_WriteInfo]] = {}
        for w in writes.values():
            if w.commit_us is not None:
                by_key.setdefault(w.key, []).append(w)
        self.strategy = strategy
        self.times: dict[int, list[int]] = {}
        self.ordered: dict[int, list[_WriteInfo]] = {}
        self.prefix_max: dict[int, list] = {}
        lww = strategy in _LWW
        self._fresh_ids_cache: dict[tuple[int, int], tuple[int, ...]] = {}
        for key, ws in by_key.items():
            ws.sort(key=lambda w: (w.commit_us, w.write_id))
            self.ordered[key] = ws
            self.times[key] = [w.commit_us for w in ws]
            if lww:
                best = None
                pm = []
                for w in ws:
                    k = _write_key(strategy, w)
                    if best is None or k > best:
                        best = k
                    pm.append(best)
                self.prefix_max[key] = pm

    def fresh(self, key, start):
        ws = self.ordered.get(key)
        if not ws:
            return []
        hi = bisect_right(self.times[key], start)
        return ws[:hi]

    def fresh_ids(self, key, start):
        times = self.times.get(key)
        if not times:
            return ()
        hi = bisect_right(times, start)
        cached = self._fresh_ids_cache.get((key, hi))
        if cached is None:
            cached = self._fresh_ids_cache[(key, hi)] = tuple(w.write_id for w in self.ordered[key][:hi])
        return cached

    def max_key_upto(self, key, start):
        times = self.times.get(key)
        if not times:
            return None
        hi = bisect_right(times, start)
        return self.prefix_max[key][hi - 1] if hi else None


def _stale_ids(reads, history, commit_map, strategy) -> set[int]:
    stale: set[int] = set()
    committed = [r for r in reads.values() if r.commit_us is not None]
    if strategy in _LWW:
        for r in committed:
            m = history.max_key_upto(r.key, r.start)
            if m is not None and _returned_key(strategy, r.returned, commit_map) < m:
                stale.add(r.op_id)
    elif strategy == WRITE_SET:
        for r in committed:
            fresh = history.fresh(r.key, r.start)
            if fresh:
                returned_ids = {ref.write_id for ref in r.returned}
                if any(w.write_id not in returned_ids for w in fresh):
                    stale.add(r.op_id)
    else:
        for r in committed:
            for w in history.fresh(r.key, r.start):
                if not any(vclock_dominates(ref.vclock, w.vclock) for ref in r.returned):
                    stale.add(r.op_id)
                    break
    return stale


def _mrc_ids(reads, commit_map, strategy) -> set[int]:
    violating: set[int] = set()
    committed = [r for r in reads.values() if r.commit_us is not None]
    for session in _sessions(committed).values():
        if strategy in _LWW:
            running = None
            for r in session:
                key = _returned_key(strategy, r.returned, commit_map)
                if running is not None and running > key:
                    violating.add(r.op_id)
                if running is None or key > running:
                    running = key
        elif strategy == WRITE_SET:
            running: set[int] = set()
            for r in session:
                ids = {ref.write_id for ref in r.returned}
                if not running <= ids:
                    violating.add(r.op_id)
                running |= ids
        else:  # competing_writes: earlier heads must be dominated-or-equaled
            running: list[VersionRef] = []
            for r in session:
                for h1 in running:
                    if not any(vclock_dominates(h2.vclock, h1.vclock) for h2 in r.returned):
                        violating.add(r.op_id)
                        break
                running = merge_heads(list(running) + list(r.returned))
    return violating


def _rywc_ids(reads, writes, commit_map, strategy):
    """(violating op ids, applicable op ids)."""
    own: dict[tuple[int, int], list[_WriteInfo]] = {}
    for w in writes.values():
        if w.commit_us is not None:
            own.setdefault((w.client, w.key), []).append(w)
    own_times: dict[tuple[int, int], list[int]] = {}
    for ck, ws in own.items():
        ws.sort(key=lambda w: (w.commit_us, w.write_id))
        own_times[ck] = [w.commit_us for w in ws]
    violating: set[int] = set()
    applicable: set[int] = set()
    for r in reads.values():
        if r.commit_us is None:
            continue
        ck = (r.client, r.key)
        ws = own.get(ck)
        if not ws:
            continue
        hi = bisect_right(own_times[ck], r.start)
        if not hi:
            continue
        applicable.add(r.op_id)
        if any(not _reflects(strategy, r.returned, w, commit_map) for w in ws[:hi]):
            violating.add(r.op_id)
    return violating, applicable


# -- public detectors ----------------------------------------------------------

def detect_mrc(log, strategy: str) -> set[int]:
    """Op ids of committed reads that moved backward within their session."""
    reads, writes = _parse_ops(log)
    return _mrc_ids(reads, _commit_map(writes), strategy)


def detect_rywc(log, strategy: str) -> set[int]:
    """Op ids of committed reads that fail to reflect an own earlier-committed write."""
    reads, writes = _parse_ops(log)
    return _rywc_ids(reads, writes, _commit_map(writes), strategy)[0]


def _mwc_scan(writes):
    """(all violating triples, applicable triple count, per-client counts,
    counted violation total).

    A triple is (earlier write id, later write id, replica) for same-client
    same-key writes both applied at that replica; it violates when the later
    write's ApplyEnd precedes the earlier one's there (log order). Triples
    whose later write is a warmup op are detected but not counted.
    """
    violations: list[tuple[int, int, int]] = []
    applicable = 0
    counted = 0
    per_client: dict[int, list[int]] = {}
    for session in _sessions(list(writes.values())).values():
        client = session[0].client
        counts = per_client.setdefault(client, [0, 0])
        for j in range(1, len(session)):
            w2 = session[j]
            countable = not w2.warmup
            for i in range(j):
                w1 = session[i]
                for replica, at1 in w1.applies.items():
                    at2 = w2.applies.get(replica)
                    if at2 is None:
                        continue
                    if countable:
                        applicable += 1
                        counts[0] += 1
                    if at1 > at2:
                        violations.append((w1.write_id, w2.write_id, replica))
                        if countable:
                            counted += 1
                            counts[1] += 1
    return violations, applicable, per_client, counted


def detect_mwc(log) -> list[tuple[int, int, int]]:
    """Violating (earlier write, later write, replica) triples."""
    _, writes = _parse_ops(log)
    return _mwc_scan(writes)[0]


def _wfrc_scan(reads, writes):
    """(violating (write, replica) pairs, applicable write count, per-client counts).

    The reflected set of the latest preceding own read is its returned write
    ids; the write violates at a replica that applied it without having
    applied every member of that set first (log order).
    """
    by_write_id = {w.write_id: w for w in writes.values()}
    committed_reads = [r for r in reads.values() if r.commit_us is not None]
    read_sessions = _sessions(committed_reads)
    violations: list[tuple[int, int]] = []
    applicable = 0
    per_client: dict[int, list[int]] = {}
    for w in sorted(writes.values(), key=lambda w: w.op_id):
        session = read_sessions.get((w.client, w.key))
        if not session:
            continue
        prior_idx = bisect_right([r.op_id for r in session], w.op_id)
        if not prior_idx:
            continue
        last_read = session[prior_idx - 1]
        counts = per_client.setdefault(w.client, [0, 0])
        countable = not w.warmup
        if countable:
            applicable += 1
            counts[0] += 1
        seen = last_read.returned
        if not seen:
            continue
        seen_applies = []
        for ref in seen:
            src = by_write_id.get(ref.write_id)
            seen_applies.append(src.applies if src is not None else {})
        violated = False
        for replica, at_w in w.applies.items():
            for applies in seen_applies:
                at_s = applies.get(replica)
                if at_s is None or at_s > at_w:
                    violations.append((w.write_id, replica))
                    violated = True
                    break
        if violated and countable:
            counts[1] += 1
    return violations, applicable, per_client


def detect_wfrc(log) -> list[tuple[int, int]]:
    """Violating (write, replica) pairs: the write applied somewhere before
    every write its latest preceding own read had reflected."""
    reads, writes = _parse_ops(log)
    return _wfrc_scan(reads, writes)[0]


# -- verdicts and report -------------------------------------------------------

def _verdicts(reads, writes, strategy):
    commit_map = _commit_map(writes)
    history = _KeyHistory(writes, strategy)
    stale = _stale_ids(reads, history, commit_map, strategy)
    mrc = _mrc_ids(reads, commit_map, strategy)
    rywc, rywc_applicable = _rywc_ids(reads, writes, commit_map, strategy)
    verdicts = []
    for r in sorted(reads.values(), key=lambda r: r.op_id):
        if r.commit_us is None:
            continue
        verdicts.append(
            ReadVerdict(
                op_id=r.op_id,
                client_id=r.client,
                key=r.key,
                start_us=r.start,
                stale=r.op_id in stale,
                mrc=r.op_id in mrc,
                rywc=r.op_id in rywc,
                returned_write_ids=tuple(ref.write_id for ref in r.returned),
                fresh_write_ids=history.fresh_ids(r.key, r.start),
                warmup=r.warmup,
            )
        )
    return verdicts, rywc_applicable


def read_verdicts(log, strategy: str) -> list[ReadVerdict]:
    """Per committed read: staleness, MRC, RYWC, returned and fresh sets."""
    reads, writes = _parse_ops(log)
    return _verdicts(reads, writes, strategy)[0]


def _last_unseen(writes, read_sessions, strategy, commit_map):
    """Per committed write: last instant its writer saw a result not containing it."""
    rows = []
    for w in sorted(writes.values(), key=lambda w: w.op_id):
        if w.commit_us is None:
            rows.append({"write_id": w.write_id, "client_id": w.client, "key": w.key, "commit_us": None, "last_unseen_at_us": None})
            continue
        last = None
        for r in read_sessions.get((w.client, w.key), ()):
            if r.return_time is not None and r.return_time >= w.commit_us and not _reflects(strategy, r.returned, w, commit_map):
                if last is None or r.return_time > last:
                    last = r.return_time
        rows.append({"write_id": w.write_id, "client_id": w.client, "key": w.key, "commit_us": w.commit_us, "last_unseen_at_us": last})
    return rows


def build_clientcentric_report(log, strategy: str) -> dict:
    """Stage-3 report: staleness and session-guarantee violation probabilities."""
    reads, writes = _parse_ops(log)
    commit_map = _commit_map(writes)
    verdicts, rywc_applicable = _verdicts(reads, writes, strategy)
    counted = [v for v in verdicts if not v.warmup]

    mwc_violations, mwc_applicable, mwc_per_client, mwc_counted = _mwc_scan(writes)
    wfrc_violations, wfrc_applicable, wfrc_per_client = _wfrc_scan(reads, writes)

    # Internal consistency: an RYWC violation is always also a stale read.
    for v in verdicts:
        if v.rywc and not v.stale:
            raise MalformedLogError(f"read {v.op_id} violates RYWC but is not stale")

    stale_n = sum(1 for v in counted if v.stale)
    mrc_n = sum(1 for v in counted if v.mrc)
    rywc_counted = [v for v in counted if v.op_id in rywc_applicable]
    rywc_n = sum(1 for v in rywc_counted if v.rywc)
    wfrc_violating_writes = {w for w, _ in wfrc_violations}
    wfrc_n = sum(1 for w in writes.values() if not w.warmup and w.write_id in wfrc_violating_writes)

    def rate(num, den):
        return num / den if den else 0.0

    per_client: dict[int, dict] = {}
    by_client: dict[int, list[ReadVerdict]] = {}
    for v in counted:
        by_client.setdefault(v.client_id, []).append(v)
    rywc_ids = {v.op_id for v in rywc_counted}
    clients = {i.client for i in reads.values()} | {i.client for i in writes.values()}
    for cid in sorted(clients):
        mine = by_client.get(cid, [])
        mine_rywc = [v for v in mine if v.op_id in rywc_ids]
        mwc = mwc_per_client.get(cid, [0, 0])
        wfrc = wfrc_per_client.get(cid, [0, 0])
        per_client[cid] = {
            "reads": len(mine),
            "stale": sum(1 for v in mine if v.stale),
            "mrc_violations": sum(1 for v in mine if v.mrc),
            "rywc_applicable": len(mine_rywc),
            "rywc_violations": sum(1 for v in mine_rywc if v.rywc),
            "mwc_triples": mwc[0],
            "mwc_violations": mwc[1],
            "wfrc_writes": wfrc[0],
            "wfrc_violations": wfrc[1],
        }

    read_sessions = _sessions([r for r in reads.values() if r.commit_us is not None])
    metadata = {"extended_detectors": ["mwc", "wfrc"]}
    if strategy == COMPETING_WRITES:
        metadata["version_order"] = "vector-clock dominance (partial order) generalizes the total version order"

    return {
        "kind": "clientcentric_report",
        "format": 1,
        "strategy": strategy,
        "stale_read_rate": rate(stale_n, len(counted)),
        "mrc_violation_probability": rate(mrc_n, len(counted)),
        "rywc_violation_probability": rate(rywc_n, len(rywc_counted)),
        "mwc_violation_probability": rate(mwc_counted, mwc_applicable),
        "wfrc_violation_probability": rate(wfrc_n, wfrc_applicable),
        "violations": {
            "stale": stale_n,
            "mrc": mrc_n,
            "rywc": rywc_n,
            "mwc": mwc_counted,
            "wfrc": wfrc_n,
        },
        "denominators": {
            "staleness": len(counted),
            "mrc": len(counted),
            "rywc": len(rywc_counted),
            "mwc": mwc_applicable,
            "wfrc": wfrc_applicable,
        },
        "per_client": {str(cid): stats for cid, stats in per_client.items()},
        "writes": _last_unseen(writes, read_sessions, strategy, commit_map),
        "metadata": metadata,
    }
