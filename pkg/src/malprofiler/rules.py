"""Parsing rules: patterns over syscalls and sandbox events that emit
(behavior factor, target, attribute) findings.

Rule file grammar, one rule per line, ``#`` comments and blank lines
ignored, an optional ``@version <tag>`` header:

    <id> | <factor> | <kind> | <name_pattern> | <arg_patterns> | <target> | <attribute_source>

``factor`` is one of SendingSMS, Calling, SendingSensitiveInfo,
ConvertingData.  ``kind`` is ``syscall`` or ``event``.  Patterns are
globs with alternation: ``*`` matches any run of characters and
``{a|b|c}`` matches exactly one alternative; everything else is
literal.  The name pattern must match the whole syscall name (or event
channel).  Each entry of the ``;``-separated ``arg_patterns`` list must
match somewhere inside at least one argument; for events the patterns
run over the ``key=value`` rendering of each payload entry.
``attribute_source`` is ``literal:<value>``, ``arg:<index>`` or
``payload:<key>``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .logmodel import IntegratedSystemLog, SandboxEvent, SyscallRecord

log = logging.getLogger(__name__)

FACTOR_SENDING_SMS = "SendingSMS"
FACTOR_CALLING = "Calling"
FACTOR_SENSITIVE_INFO = "SendingSensitiveInfo"
FACTOR_CONVERTING_DATA = "ConvertingData"
FACTORS = (
    FACTOR_SENDING_SMS,
    FACTOR_CALLING,
    FACTOR_SENSITIVE_INFO,
    FACTOR_CONVERTING_DATA,
)

KIND_SYSCALL = "syscall"
KIND_EVENT = "event"


class RuleError(Exception):
    """Base class for rule loading failures."""


class RuleSyntax(RuleError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateRuleId(RuleError):
    def __init__(self, rule_id: str):
        super().__init__(f"duplicate rule id {rule_id!r}")
        self.rule_id = rule_id


@lru_cache(maxsize=None)
def compile_pattern(pattern: str) -> re.Pattern:
    """Translate a glob-with-alternation pattern into a compiled regex.

    Raises ValueError on nested or unterminated ``{...}`` groups; the
    loader converts that into RuleSyntax with the offending line.
    """
    out: list[str] = []
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "*":
            out.append(".*")
            i += 1
        elif ch == "{":
            end = pattern.find("}", i)
            if end < 0:
                raise ValueError(f"unterminated alternation in {pattern!r}")
            body = pattern[i + 1 : end]
            if "{" in body:
                raise ValueError(f"nested alternation in {pattern!r}")
            choices = [re.escape(c) for c in body.split("|")]
            if any(not c for c in choices):
                raise ValueError(f"empty alternative in {pattern!r}")
            out.append("(?:" + "|".join(choices) + ")")
            i = end + 1
        elif ch == "}":
            raise ValueError(f"stray '}}' in {pattern!r}")
        else:
            out.append(re.escape(ch))
            i += 1
    return re.compile("".join(out))


# attribute_source kinds
SOURCE_LITERAL = "literal"
SOURCE_ARG = "arg"
SOURCE_PAYLOAD = "payload"


@dataclass(frozen=True)
class Finding:
    factor: str
    target: str
    attribute: str


@dataclass(frozen=True)
class ParsingRule:
    rule_id: str
    factor: str
    kind: str
    name_pattern: str
    arg_patterns: tuple[str, ...]
    target: str
    attribute_source: tuple  # (kind, value)

    def name_matches(self, name: str) -> bool:
        return compile_pattern(self.name_pattern).fullmatch(name) is not None

    def _args_match(self, values: tuple[str, ...]) -> bool:
        for pattern in self.arg_patterns:
            regex = compile_pattern(pattern)
            if not any(regex.search(value) for value in values):
                return False
        return True

    def _attribute(self, record: SyscallRecord | SandboxEvent) -> str | None:
        kind, value = self.attribute_source
        if kind == SOURCE_LITERAL:
            return value
        if kind == SOURCE_ARG:
            assert isinstance(record, SyscallRecord)
            return record.args[value] if value < len(record.args) else None
        payload = record.payload  # type: ignore[union-attr]
        return payload.get(value)


def match_record(rule: ParsingRule, record: SyscallRecord | SandboxEvent) -> Finding | None:
    """Return the finding a rule produces for a record, or None."""
    if isinstance(record, SyscallRecord):
        if rule.kind != KIND_SYSCALL or not rule.name_matches(record.name):
            return None
        if not rule._args_match(record.args):
            return None
    else:
        if rule.kind != KIND_EVENT or not rule.name_matches(record.channel):
            return None
        entries = tuple(f"{k}={v}" for k, v in record.pairs)
        if not rule._args_match(entries):
            return None
    attribute = rule._attribute(record)
    if attribute is None:
        return None
    return Finding(factor=rule.factor, target=rule.target, attribute=attribute)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[ParsingRule, ...]
    version: str = "1"

    def _index(self) -> tuple[dict, list, dict, list]:
        # exact-name buckets plus a spillover list for wildcard patterns
        by_syscall: dict[str, list[ParsingRule]] = {}
        syscall_globs: list[ParsingRule] = []
        by_channel: dict[str, list[ParsingRule]] = {}
        channel_globs: list[ParsingRule] = []
        for rule in self.rules:
            literal = "*" not in rule.name_pattern and "{" not in rule.name_pattern
            if rule.kind == KIND_SYSCALL:
                if literal:
                    by_syscall.setdefault(rule.name_pattern, []).append(rule)
                else:
                    syscall_globs.append(rule)
            else:
                if literal:
                    by_channel.setdefault(rule.name_pattern, []).append(rule)
                else:
                    channel_globs.append(rule)
        return by_syscall, syscall_globs, by_channel, channel_globs

    def candidates(self, record: SyscallRecord | SandboxEvent) -> list[ParsingRule]:
        cache = self.__dict__.get("_cached_index")
        if cache is None:
            cache = self._index()
            self.__dict__["_cached_index"] = cache
        by_syscall, syscall_globs, by_channel, channel_globs = cache
        if isinstance(record, SyscallRecord):
            return by_syscall.get(record.name, []) + syscall_globs
        return by_channel.get(record.channel, []) + channel_globs

    def missing_factors(self) -> tuple[str, ...]:
        present = {rule.factor for rule in self.rules}
        return tuple(f for f in FACTORS if f not in present)


def _parse_attribute_source(text: str, line_no: int) -> tuple:
    kind, sep, value = text.partition(":")
    if not sep:
        raise RuleSyntax(line_no, f"attribute source {text!r} needs kind:value")
    if kind == SOURCE_LITERAL:
        return (SOURCE_LITERAL, value)
    if kind == SOURCE_ARG:
        if not value.isdigit():
            raise RuleSyntax(line_no, f"arg index {value!r} is not a number")
        return (SOURCE_ARG, int(value))
    if kind == SOURCE_PAYLOAD:
        if not value:
            raise RuleSyntax(line_no, "payload source needs a key")
        return (SOURCE_PAYLOAD, value)
    raise RuleSyntax(line_no, f"unknown attribute source kind {kind!r}")


def load_rules(data: bytes) -> RuleSet:
    """Parse a rule file.  Raises RuleSyntax / DuplicateRuleId."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise RuleSyntax(0, f"rule file is not valid UTF-8: {exc}") from None
    version = "1"
    rules: list[ParsingRule] = []
    seen_ids: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("@version"):
            version = stripped[len("@version"):].strip() or version
            continue
        fields = [f.strip() for f in stripped.split("|")]
        # re-join alternation groups that the field split tore apart
        fields = _rejoin_alternations(fields, line_no)
        if len(fields) != 7:
            raise RuleSyntax(line_no, f"expected 7 fields, got {len(fields)}")
        rule_id, factor, kind, name_pattern, arg_field, target, source_text = fields
        if not rule_id:
            raise RuleSyntax(line_no, "empty rule id")
        if rule_id in seen_ids:
            raise DuplicateRuleId(rule_id)
        if factor not in FACTORS:
            raise RuleSyntax(line_no, f"unknown factor {factor!r}")
        if kind not in (KIND_SYSCALL, KIND_EVENT):
            raise RuleSyntax(line_no, f"unknown kind {kind!r}")
        if not target:
            raise RuleSyntax(line_no, "empty target")
        arg_patterns = tuple(p.strip() for p in arg_field.split(";") if p.strip())
        if name_pattern in ("", "*") and not arg_patterns:
            raise RuleSyntax(line_no, "rule matches everything: give a name or argument pattern")
        for pattern in (name_pattern,) + arg_patterns:
            try:
                compile_pattern(pattern)
            except ValueError as exc:
                raise RuleSyntax(line_no, str(exc)) from None
        source = _parse_attribute_source(source_text, line_no)
        if source[0] == SOURCE_ARG and kind != KIND_SYSCALL:
            raise RuleSyntax(line_no, "arg:<index> capture requires a syscall rule")
        if source[0] == SOURCE_PAYLOAD and kind != KIND_EVENT:
            raise RuleSyntax(line_no, "payload:<key> capture requires an event rule")
        seen_ids.add(rule_id)
        rules.append(
            ParsingRule(
                rule_id=rule_id,
                factor=factor,
                kind=kind,
                name_pattern=name_pattern,
                arg_patterns=arg_patterns,
                target=target,
                attribute_source=source,
            )
        )
    if not rules:
        raise RuleSyntax(0, "rule file defines no rules")
    ruleset = RuleSet(rules=tuple(rules), version=version)
    missing = ruleset.missing_factors()
    if missing:
        log.warning("rule set covers no rules for factors: %s", ", ".join(missing))
    return ruleset


def _rejoin_alternations(fields: list[str], line_no: int) -> list[str]:
    """Splitting on ``|`` also splits {a|b} groups; stitch them back."""
    out: list[str] = []
    depth = 0
    for piece in fields:
        if depth > 0:
            out[-1] = out[-1] + "|" + piece
        else:
            out.append(piece)
        depth += piece.count("{") - piece.count("}")
        if depth < 0:
            raise RuleSyntax(line_no, "unbalanced '}' in rule")
    if depth != 0:
        raise RuleSyntax(line_no, "unbalanced '{' in rule")
    return out


def iter_findings(ruleset: RuleSet, logfile: IntegratedSystemLog):
    """Yield every finding any rule produces for any record or event."""
    for record in logfile.records:
        for rule in ruleset.candidates(record):
            finding = match_record(rule, record)
            if finding is not None:
                yield finding
    for event in logfile.events:
        for rule in ruleset.candidates(event):
            finding = match_record(rule, event)
            if finding is not None:
                yield finding


def default_rules_path():
    return resources.files("malprofiler").joinpath("rules/default.rules")


def load_default_rules() -> RuleSet:
    return load_rules(default_rules_path().read_bytes())
