"""Behavior profiles: findings aggregated into a nested object map.

A profile maps hardware/resource objects to operations to targets to a
single representative attribute:

    {object: {operation: {target: attribute}}}

Operations sit under a fixed object: SendingSMS under Telephony,
Calling under Phone, SendingSensitiveInfo and ConvertingData under
Network.  Records are a multiset, so when several findings disagree on
the attribute for one (operation, target) slot the lexicographically
smallest attribute wins; that keeps profiles invariant under any
permutation of the input log.

The canonical text form is an ``@id <sample_id>`` line followed by one
``object/operation/target=attribute`` line per entry, sorted, joined
with newlines.  The encoded form is base-64 over that text.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass, field

from .logmodel import IntegratedSystemLog
from .rules import (
    FACTOR_CALLING,
    FACTOR_CONVERTING_DATA,
    FACTOR_SENDING_SMS,
    FACTOR_SENSITIVE_INFO,
    RuleSet,
    iter_findings,
)

OBJECT_TELEPHONY = "Telephony"
OBJECT_PHONE = "Phone"
OBJECT_NETWORK = "Network"

OBJECT_FOR_OPERATION = {
    FACTOR_SENDING_SMS: OBJECT_TELEPHONY,
    FACTOR_CALLING: OBJECT_PHONE,
    FACTOR_SENSITIVE_INFO: OBJECT_NETWORK,
    FACTOR_CONVERTING_DATA: OBJECT_NETWORK,
}

# ConvertingData targets that identify the transmission itself
TARGET_DEST_URL = "Destination URL"
TARGET_CIPHER = "Cipher algorithm"
TARGET_ENCODING = "Encoding algorithm"


class CorruptProfile(Exception):
    pass


@dataclass
class BehaviorProfile:
    sample_id: str
    entries: dict[str, dict[str, dict[str, str]]] = field(default_factory=dict)

    def operations(self) -> set[str]:
        return {op for ops in self.entries.values() for op in ops}

    def targets(self, operation: str) -> frozenset[str]:
        obj = OBJECT_FOR_OPERATION[operation]
        return frozenset(self.entries.get(obj, {}).get(operation, {}))

    def attribute(self, operation: str, target: str) -> str | None:
        obj = OBJECT_FOR_OPERATION[operation]
        return self.entries.get(obj, {}).get(operation, {}).get(target)

    def is_empty(self) -> bool:
        return not self.entries


def build_profile(log: IntegratedSystemLog, ruleset: RuleSet) -> BehaviorProfile:
    """Aggregate rule findings over a log into a behavior profile."""
    slots: dict[tuple[str, str], str] = {}
    for finding in iter_findings(ruleset, log):
        key = (finding.factor, finding.target)
        current = slots.get(key)
        if current is None or finding.attribute < current:
            slots[key] = finding.attribute
    entries: dict[str, dict[str, dict[str, str]]] = {}
    for (operation, target), attribute in slots.items():
        obj = OBJECT_FOR_OPERATION[operation]
        entries.setdefault(obj, {}).setdefault(operation, {})[target] = attribute
    return BehaviorProfile(sample_id=log.sample_id, entries=entries)


def canonical_text(profile: BehaviorProfile) -> str:
    lines = [f"@id {profile.sample_id}"]
    body = []
    for obj, ops in profile.entries.items():
        for operation, targets in ops.items():
            for target, attribute in targets.items():
                body.append(f"{obj}/{operation}/{target}={attribute}")
    lines.extend(sorted(body))
    return "\n".join(lines)


def encode_profile(profile: BehaviorProfile) -> bytes:
    return base64.b64encode(canonical_text(profile).encode("utf-8"))


def decode_profile(data: bytes) -> BehaviorProfile:
    try:
        text = base64.b64decode(data, validate=True).decode("utf-8")
    except (binascii.Error, ValueError, UnicodeDecodeError) as exc:
        raise CorruptProfile(f"undecodable profile: {exc}") from None
    lines = text.split("\n")
    if not lines or not lines[0].startswith("@id "):
        raise CorruptProfile("profile text must start with an @id line")
    sample_id = lines[0][4:]
    if not sample_id:
        raise CorruptProfile("empty sample id")
    entries: dict[str, dict[str, dict[str, str]]] = {}
    for line in lines[1:]:
        head, eq, attribute = line.partition("=")
        parts = head.split("/", 2)
        if not eq or len(parts) != 3:
            raise CorruptProfile(f"bad profile line {line!r}")
        obj, operation, target = parts
        if OBJECT_FOR_OPERATION.get(operation) != obj or not target:
            raise CorruptProfile(f"bad profile line {line!r}")
        targets = entries.setdefault(obj, {}).setdefault(operation, {})
        if target in targets:
            raise CorruptProfile(f"duplicate target {target!r} under {operation}")
        targets[target] = attribute
    return BehaviorProfile(sample_id=sample_id, entries=entries)


def render_pretty(profile: BehaviorProfile) -> str:
    lines = [f"sample {profile.sample_id}"]
    if profile.is_empty():
        lines.append("  (no findings)")
    for obj in sorted(profile.entries):
        lines.append(f"  {obj}")
        for operation in sorted(profile.entries[obj]):
            lines.append(f"    {operation}")
            targets = profile.entries[obj][operation]
            for target in sorted(targets):
                lines.append(f"      {target} = {targets[target]}")
    return "\n".join(lines)
