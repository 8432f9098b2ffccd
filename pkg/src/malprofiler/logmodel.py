"""Integrated system log model and file ingestion.

A log file is UTF-8 text, one record per line:

    @id <sample_id>           optional header, at most once
    # free-form comment       ignored
    S|<name>|<arg1>|<arg2>    kernel system call with string arguments
    E|<CHANNEL>|k1=v1;k2=v2   sandbox event with a key/value payload

Channels are SMS, CALL, NET_OPEN, NET_SEND, DATA_LEAK and MAP.  Field
values must not contain ``|``, payload entries must not contain ``;``,
and nothing may contain a newline; there is no escaping mechanism.
Record order carries no meaning downstream, the collections behave as
unordered multisets.

When no ``@id`` header is present the sample id defaults to the SHA-256
hex digest of the raw file bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

EVENT_CHANNELS = ("SMS", "CALL", "NET_OPEN", "NET_SEND", "DATA_LEAK", "MAP")


class LogError(Exception):
    """Base class for log ingestion failures."""


class MalformedLine(LogError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class EmptyLog(LogError):
    def __init__(self) -> None:
        super().__init__("log contains no records or events")


class SampleIdMismatch(LogError):
    def __init__(self, left: str, right: str):
        super().__init__(f"cannot merge logs for different samples: {left!r} != {right!r}")
        self.left = left
        self.right = right


@dataclass(frozen=True)
class SyscallRecord:
    name: str
    args: tuple[str, ...]
    raw: str

    def line(self) -> str:
        return "|".join(("S", self.name) + self.args)


@dataclass(frozen=True)
class SandboxEvent:
    channel: str
    pairs: tuple[tuple[str, str], ...]  # insertion-ordered, keys unique

    @property
    def payload(self) -> dict[str, str]:
        return dict(self.pairs)

    def line(self) -> str:
        body = ";".join(f"{k}={v}" for k, v in self.pairs)
        return f"E|{self.channel}|{body}"


@dataclass(frozen=True)
class IntegratedSystemLog:
    sample_id: str
    records: tuple[SyscallRecord, ...]
    events: tuple[SandboxEvent, ...]


def _parse_syscall(line: str, line_no: int) -> SyscallRecord:
    fields = line.split("|")
    if len(fields) < 2 or not fields[1]:
        raise MalformedLine(line_no, "syscall line needs a name: S|<name>|<args...>")
    return SyscallRecord(name=fields[1], args=tuple(fields[2:]), raw=line)


def _parse_event(line: str, line_no: int) -> SandboxEvent:
    fields = line.split("|")
    if len(fields) != 3:
        raise MalformedLine(line_no, "event line must be E|<CHANNEL>|k1=v1;k2=v2")
    channel, body = fields[1], fields[2]
    if channel not in EVENT_CHANNELS:
        raise MalformedLine(line_no, f"unknown event channel {channel!r}")
    pairs: list[tuple[str, str]] = []
    seen: set[str] = set()
    if body:
        for entry in body.split(";"):
            key, eq, value = entry.partition("=")
            if not eq or not key:
                raise MalformedLine(line_no, f"payload entry {entry!r} is not key=value")
            if key in seen:
                raise MalformedLine(line_no, f"duplicate payload key {key!r}")
            seen.add(key)
            pairs.append((key, value))
    return SandboxEvent(channel=channel, pairs=tuple(pairs))


def parse_log_file(data: bytes) -> IntegratedSystemLog:
    """Parse raw log bytes into an IntegratedSystemLog.

    Raises MalformedLine for any unrecognized line and EmptyLog when no
    records or events survive parsing.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedLine(0, f"log is not valid UTF-8: {exc}") from None
    sample_id: str | None = None
    records: list[SyscallRecord] = []
    events: list[SandboxEvent] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("@id"):
            declared = stripped[3:].strip()
            if not declared:
                raise MalformedLine(line_no, "@id header without a sample id")
            if sample_id is not None:
                raise MalformedLine(line_no, "duplicate @id header")
            sample_id = declared
            continue
        if stripped.startswith("S|"):
            records.append(_parse_syscall(stripped, line_no))
        elif stripped.startswith("E|"):
            events.append(_parse_event(stripped, line_no))
        else:
            raise MalformedLine(line_no, f"unrecognized line prefix: {stripped.split('|', 1)[0]!r}")
    if not records and not events:
        raise EmptyLog()
    if sample_id is None:
        sample_id = hashlib.sha256(data).hexdigest()
    return IntegratedSystemLog(sample_id=sample_id, records=tuple(records), events=tuple(events))


def parse_log_path(path) -> IntegratedSystemLog:
    with open(path, "rb") as handle:
        return parse_log_file(handle.read())


def serialize_log(log: IntegratedSystemLog) -> bytes:
    """Render a log back to its file form (comments are not preserved)."""
    lines = [f"@id {log.sample_id}"]
    lines.extend(rec.line() for rec in log.records)
    lines.extend(evt.line() for evt in log.events)
    return ("\n".join(lines) + "\n").encode("utf-8")


def merge_logs(a: IntegratedSystemLog, b: IntegratedSystemLog) -> IntegratedSystemLog:
    """Concatenate two captures of the same sample (multiset union)."""
    if a.sample_id != b.sample_id:
        raise SampleIdMismatch(a.sample_id, b.sample_id)
    return IntegratedSystemLog(
        sample_id=a.sample_id,
        records=a.records + b.records,
        events=a.events + b.events,
    )
