"""Reading and analysing JSONL traces.

A trace is a header line followed by one line per robot per tick. The header
holds ``type: "header"``, the seed, the resolved config and the assignment
plan; every other line is a TraceEvent with the keys listed in EVENT_KEYS.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Iterator, Union

EVENT_KEYS = ("tick", "robot", "true", "est", "phase", "cmd", "sent", "recv", "collision", "blocked")


class TraceError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _parse(line_no: int, text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceError(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise TraceError(line_no, "expected a JSON object")
    return doc


def iter_trace(source: Union[str, Path, Iterable[str]]) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, record)`` pairs, header first.

    Raises TraceError for an empty trace, a missing header, or any line that
    is not a well-formed record; the error carries the 1-based line number.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from iter_trace(fh)
        return
    seen_header = False
    for line_no, raw in enumerate(source, start=1):
        text = raw.strip()
        if not text:
            raise TraceError(line_no, "blank line")
        doc = _parse(line_no, text)
        if not seen_header:
            if doc.get("type") != "header":
                raise TraceError(line_no, "first line must be the header")
            seen_header = True
        else:
            missing = [k for k in EVENT_KEYS if k not in doc]
            if missing:
                raise TraceError(line_no, f"missing keys {missing}")
            if not isinstance(doc["tick"], int) or not isinstance(doc["robot"], int):
                raise TraceError(line_no, "tick and robot must be integers")
        yield line_no, doc
    if not seen_header:
        raise TraceError(0, "empty trace")


def read_trace(source) -> tuple[dict, list[dict]]:
    records = iter_trace(source)
    _, header = next(records)
    return header, [doc for _, doc in records]


def phase_entries(events: Iterable[dict]) -> dict[int, dict[str, int]]:
    """First tick at which each robot was seen in each phase."""
    out: dict[int, dict[str, int]] = {}
    for e in events:
        out.setdefault(e["robot"], {}).setdefault(e["phase"], e["tick"])
    return out


def _plan_by_robot(header: dict) -> dict[int, dict]:
    return {p["robot"]: p for p in header["plan"]}


def row_serialization(header: dict, events: Iterable[dict]) -> list[tuple[int, int, int]]:
    """``(row, first PHASE1 tick of row, last arrival tick of row - 2)`` for rows 3 and up.

    Arrival is the tick a robot enters DONE. Robots that never enter PHASE1
    (pre-positioned ones) do not count toward the first PHASE1 tick.
    """
    plan = _plan_by_robot(header)
    entries = phase_entries(events)
    first_p1: dict[int, int] = {}
    last_done: dict[int, int] = {}
    for rid, phases in entries.items():
        row = plan[rid]["row"]
        if "PHASE1_TO_START" in phases:
            t = phases["PHASE1_TO_START"]
            first_p1[row] = min(first_p1.get(row, t), t)
        if "DONE" in phases:
            last_done[row] = max(last_done.get(row, -1), phases["DONE"])
    return [(n, first_p1[n], last_done.get(n - 2, -1)) for n in sorted(first_p1) if n >= 3]


def release_ticks(header: dict, events: Iterable[dict]) -> dict[int, list[int]]:
    """Per row, the first PHASE2 tick of each robot in release order."""
    plan = _plan_by_robot(header)
    entries = phase_entries(events)
    rows: dict[int, list[tuple[int, int]]] = {}
    for rid, phases in entries.items():
        if "PHASE2_TO_TARGET" in phases:
            p = plan[rid]
            rows.setdefault(p["row"], []).append((p["order"], phases["PHASE2_TO_TARGET"]))
    return {row: [t for _, t in sorted(items)] for row, items in sorted(rows.items())}


def sent_counts(events: Iterable[dict]) -> Counter:
    """Messages sent, keyed by wire type."""
    counts: Counter = Counter()
    for e in events:
        for text in e["sent"]:
            counts[text.split("|", 1)[0]] += 1
    return counts
