"""Nearest-representative classification with incremental cluster updates.

Each cluster keeps one representative profile.  An incoming profile is
compared only against representatives that share its behavior category;
the decision score is the weighted total similarity normalized by the
weight mass the shared category can reach, so an exact resubmission
always scores 1.0 no matter which factors the category spans.  When the
best score clears the threshold the profile joins that cluster and the
representative is updated, by entry intersection (representatives only
shrink) or entry union (they only grow); otherwise the profile founds a
new cluster and becomes its representative.

Store file format, line oriented:

    <label>|<category>|<member_count>|<base64 profile>     representative
    <sample_id>|<decision>|<score>                         journal entry

Journal decisions are BENIGN, ASSIGNED:<label>, NEW:<label>, plus
EMPTIED:<label> when an intersection update removes the last entry of a
representative (the cluster keeps its founding category tag).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .categories import BehaviorCategory, categorize, parse_category
from .profiles import BehaviorProfile, CorruptProfile, decode_profile, encode_profile
from .similarity import DEFAULT_WEIGHTS, SimilarityBreakdown, SimilarityWeights, total_similarity

METHOD_INTERSECTION = "intersection"
METHOD_UNION = "union"

DECISION_BENIGN = "benign"
DECISION_ASSIGNED = "assigned"
DECISION_NEW_CLUSTER = "new-cluster"

_CLUSTER_LABEL = re.compile(r"^cluster-(\d+)$")


class CorruptStore(Exception):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    threshold: float = 0.85
    weights: SimilarityWeights = DEFAULT_WEIGHTS
    update_method: str = METHOD_INTERSECTION

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside (0, 1]")
        if self.update_method not in (METHOD_INTERSECTION, METHOD_UNION):
            raise ValueError(f"unknown update method {self.update_method!r}")


@dataclass
class FamilyRepresentative:
    label: str
    profile: BehaviorProfile
    category: BehaviorCategory
    member_count: int = 1


@dataclass(frozen=True)
class JournalEntry:
    sample_id: str
    decision: str
    score: float

    def line(self) -> str:
        return f"{self.sample_id}|{self.decision}|{self.score:.6f}"


@dataclass
class ProfileStore:
    representatives: list[FamilyRepresentative] = field(default_factory=list)
    journal: list[JournalEntry] = field(default_factory=list)

    def next_label(self) -> str:
        highest = 0
        for rep in self.representatives:
            match = _CLUSTER_LABEL.match(rep.label)
            if match:
                highest = max(highest, int(match.group(1)))
        return f"cluster-{highest + 1:04d}"


@dataclass(frozen=True)
class Decision:
    kind: str
    label: str | None
    score: float
    breakdown: SimilarityBreakdown | None

    def render(self) -> str:
        if self.kind == DECISION_BENIGN:
            return "BENIGN"
        prefix = "ASSIGNED" if self.kind == DECISION_ASSIGNED else "NEW"
        return f"{prefix}:{self.label}"


@dataclass(frozen=True)
class Match:
    representative: FamilyRepresentative
    breakdown: SimilarityBreakdown
    score: float  # total normalized by the category weight mass


def best_match(
    profile: BehaviorProfile,
    category: BehaviorCategory,
    representatives: list[FamilyRepresentative],
    weights: SimilarityWeights,
) -> Match | None:
    """Highest-scoring same-category representative, ties to the smallest label."""
    mass = weights.category_mass(category)
    best: Match | None = None
    candidates = [r for r in representatives if r.category.factors == category.factors]
    for rep in sorted(candidates, key=lambda r: r.label):
        breakdown = total_similarity(profile, rep.profile, weights)
        score = breakdown.total / mass if mass > 0 else 0.0
        if best is None or score > best.score:
            best = Match(representative=rep, breakdown=breakdown, score=score)
    return best


def update_intersection(rep: BehaviorProfile, incoming: BehaviorProfile) -> BehaviorProfile:
    """Keep only entries both profiles share; attributes come from the representative."""
    entries: dict[str, dict[str, dict[str, str]]] = {}
    for obj, ops in rep.entries.items():
        for operation, targets in ops.items():
            shared = {
                target: attribute
                for target, attribute in targets.items()
                if target in incoming.targets(operation)
            }
            if shared:
                entries.setdefault(obj, {})[operation] = shared
    return BehaviorProfile(sample_id=rep.sample_id, entries=entries)


def update_union(rep: BehaviorProfile, incoming: BehaviorProfile) -> BehaviorProfile:
    """Merge entries of both profiles; on conflicts the representative wins."""
    entries: dict[str, dict[str, dict[str, str]]] = {
        obj: {operation: dict(targets) for operation, targets in ops.items()}
        for obj, ops in rep.entries.items()
    }
    for obj, ops in incoming.entries.items():
        for operation, targets in ops.items():
            slot = entries.setdefault(obj, {}).setdefault(operation, {})
            for target, attribute in targets.items():
                slot.setdefault(target, attribute)
    return BehaviorProfile(sample_id=rep.sample_id, entries=entries)


def classify(profile: BehaviorProfile, store: ProfileStore, cfg: ClassifierConfig) -> Decision:
    """Classify one profile, updating the store and its journal."""
    category = categorize(profile)
    if category.is_benign:
        decision = Decision(kind=DECISION_BENIGN, label=None, score=0.0, breakdown=None)
        store.journal.append(JournalEntry(profile.sample_id, decision.render(), 0.0))
        return decision

    match = best_match(profile, category, store.representatives, cfg.weights)
    if match is not None and match.score >= cfg.threshold:
        rep = match.representative
        if cfg.update_method == METHOD_INTERSECTION:
            rep.profile = update_intersection(rep.profile, profile)
        else:
            rep.profile = update_union(rep.profile, profile)
        rep.member_count += 1
        decision = Decision(
            kind=DECISION_ASSIGNED, label=rep.label, score=match.score, breakdown=match.breakdown
        )
        store.journal.append(JournalEntry(profile.sample_id, decision.render(), decision.score))
        if rep.profile.is_empty():
            store.journal.append(JournalEntry(profile.sample_id, f"EMPTIED:{rep.label}", decision.score))
        return decision

    label = store.next_label()
    store.representatives.append(
        FamilyRepresentative(label=label, profile=profile, category=category, member_count=1)
    )
    score = match.score if match is not None else 0.0
    breakdown = match.breakdown if match is not None else None
    decision = Decision(kind=DECISION_NEW_CLUSTER, label=label, score=score, breakdown=breakdown)
    store.journal.append(JournalEntry(profile.sample_id, decision.render(), decision.score))
    return decision


def save_store(store: ProfileStore) -> bytes:
    lines = []
    for rep in store.representatives:
        encoded = encode_profile(rep.profile).decode("ascii")
        lines.append(f"{rep.label}|{rep.category.render()}|{rep.member_count}|{encoded}")
    lines.extend(entry.line() for entry in store.journal)
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def load_store(data: bytes) -> ProfileStore:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptStore(f"store is not valid UTF-8: {exc}") from None
    store = ProfileStore()
    seen_labels: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split("|")
        if len(fields) == 4:
            label, category_text, count_text, encoded = fields
            if label in seen_labels:
                raise CorruptStore(f"line {line_no}: duplicate label {label!r}")
            try:
                category = parse_category(category_text)
                member_count = int(count_text)
                profile = decode_profile(encoded.encode("ascii"))
            except (ValueError, CorruptProfile) as exc:
                raise CorruptStore(f"line {line_no}: {exc}") from None
            if category.is_benign:
                raise CorruptStore(f"line {line_no}: representative cannot be benign")
            if member_count < 1:
                raise CorruptStore(f"line {line_no}: member count {member_count} < 1")
            seen_labels.add(label)
            store.representatives.append(
                FamilyRepresentative(
                    label=label, profile=profile, category=category, member_count=member_count
                )
            )
        elif len(fields) == 3:
            sample_id, decision, score_text = fields
            try:
                score = float(score_text)
            except ValueError as exc:
                raise CorruptStore(f"line {line_no}: {exc}") from None
            store.journal.append(JournalEntry(sample_id, decision, score))
        else:
            raise CorruptStore(f"line {line_no}: expected 3 or 4 fields, got {len(fields)}")
    return store
