"""Shared builders and independent oracles for the test suite.

The oracles here are deliberately written from their textbook
definitions (full-matrix edit distance, pairwise rank counting) so they
share no code with the implementations they check.
"""

from __future__ import annotations

import random

from malprofiler import BehaviorProfile


def make_profile(
    sample_id: str = "p",
    ss: bool = False,
    cs: bool = False,
    sis: tuple[str, ...] = (),
    url: str | None = None,
    cipher: str | None = None,
    encoding: str | None = None,
) -> BehaviorProfile:
    entries: dict[str, dict[str, dict[str, str]]] = {}
    if ss:
        entries.setdefault("Telephony", {})["SendingSMS"] = {"Premium-rate SMS": "900001"}
    if cs:
        entries.setdefault("Phone", {})["Calling"] = {"Premium-rate number": "900002"}
    if sis:
        entries.setdefault("Network", {})["SendingSensitiveInfo"] = {t: f"v-{t}" for t in sis}
    cds: dict[str, str] = {}
    if url is not None:
        cds["Destination URL"] = url
    if cipher is not None:
        cds["Cipher algorithm"] = cipher
    if encoding is not None:
        cds["Encoding algorithm"] = encoding
    if cds:
        entries.setdefault("Network", {})["ConvertingData"] = cds
    return BehaviorProfile(sample_id=sample_id, entries=entries)


def entry_set(profile: BehaviorProfile) -> set[tuple[str, str, str, str]]:
    """Flatten a profile to (object, operation, target, attribute) tuples."""
    return {
        (obj, operation, target, attribute)
        for obj, ops in profile.entries.items()
        for operation, targets in ops.items()
        for target, attribute in targets.items()
    }


def random_profile(rng: random.Random, sample_id: str = "r") -> BehaviorProfile:
    pool = [f"t{i:02d}" for i in range(12)]
    sis = tuple(rng.sample(pool, rng.randint(0, 6)))
    return make_profile(
        sample_id=sample_id,
        ss=rng.random() < 0.5,
        cs=rng.random() < 0.5,
        sis=sis,
        url=rng.choice((None, "a.example.test", "b.example.test")),
        cipher=rng.choice((None, "DES", "AES")),
        encoding=rng.choice((None, "gzip")),
    )


def jaccard_oracle(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 0.0
    union = list(a)
    for item in b:
        if item not in union:
            union.append(item)
    inter = sum(1 for item in a if item in b)
    return inter / len(union)


def edit_distance_oracle(a: str, b: str) -> int:
    rows = len(a) + 1
    cols = len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[rows - 1][cols - 1]


def url_similarity_oracle(a: str, b: str) -> float:
    a = a.split("://", 1)[1] if "://" in a else a
    b = b.split("://", 1)[1] if "://" in b else b
    la, lb = a.split("."), b.split(".")
    common = 0
    while common < min(len(la), len(lb)) and la[common] == lb[common]:
        common += 1
    ra = ".".join(la[common:])
    rb = ".".join(lb[common:])
    if not ra and not rb:
        return 1.0
    return 1.0 - edit_distance_oracle(ra, rb) / max(len(ra), len(rb))


def auc_oracle(pairs: list[tuple[float, bool]]) -> float:
    """Mann-Whitney statistic: P(pos > neg) + 0.5 P(pos == neg)."""
    pos = [score for score, is_pos in pairs if is_pos]
    neg = [score for score, is_pos in pairs if not is_pos]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))
