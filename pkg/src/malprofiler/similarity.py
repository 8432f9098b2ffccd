"""Weighted four-factor similarity between behavior profiles.

The total score is a weighted sum of four per-factor similarities:

    total = w_ss * SS + w_cs * CS + w_sis * SIS + w_cds * CDS

SS and CS are binary and reward *shared access only*: two profiles that
both lack the behavior score 0 for that factor, so an empty profile is
similar to nothing.  SIS is the Jaccard index over leaked target names.
CDS averages three component scores: destination-URL similarity, exact
cipher-algorithm match and exact encoding match; a component missing
from either profile contributes 0.

URL similarity strips the scheme, removes the longest common dot-label
prefix and compares the residual strings by normalized edit distance,
e.g. A.B.C.D vs A.B.E.F leaves residuals "C.D" / "E.F" and scores
1 - 2/3.  Two URLs with no residual after the common prefix score 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .categories import CODE_CDS, CODE_CS, CODE_SIS, CODE_SS, BehaviorCategory
from .profiles import (
    TARGET_CIPHER,
    TARGET_DEST_URL,
    TARGET_ENCODING,
    BehaviorProfile,
)
from .rules import (
    FACTOR_CALLING,
    FACTOR_CONVERTING_DATA,
    FACTOR_SENDING_SMS,
    FACTOR_SENSITIVE_INFO,
)

WEIGHT_TOLERANCE = 1e-9


class InvalidWeights(Exception):
    pass


class EmptyUrl(Exception):
    pass


@dataclass(frozen=True)
class SimilarityWeights:
    w_ss: float
    w_cs: float
    w_sis: float
    w_cds: float

    def __post_init__(self) -> None:
        values = (self.w_ss, self.w_cs, self.w_sis, self.w_cds)
        if any(w < 0 for w in values):
            raise InvalidWeights(f"negative weight in {values}")
        if abs(sum(values) - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidWeights(f"weights {values} sum to {sum(values)}, expected 1")

    def for_code(self, code: str) -> float:
        return {
            CODE_SS: self.w_ss,
            CODE_CS: self.w_cs,
            CODE_SIS: self.w_sis,
            CODE_CDS: self.w_cds,
        }[code]

    def category_mass(self, category: BehaviorCategory) -> float:
        """Weight a profile of this category can maximally accumulate."""
        return sum(self.for_code(code) for code in category.factors)


DEFAULT_WEIGHTS = SimilarityWeights(0.33, 0.33, 0.21, 0.13)


@dataclass(frozen=True)
class SimilarityBreakdown:
    ss: float
    cs: float
    sis: float
    cds: float
    total: float


def _has(profile: BehaviorProfile, operation: str) -> bool:
    return bool(profile.targets(operation))


def sim_ss(a: BehaviorProfile, b: BehaviorProfile) -> float:
    """1 when both profiles sent premium-rate SMS, else 0."""
    return 1.0 if _has(a, FACTOR_SENDING_SMS) and _has(b, FACTOR_SENDING_SMS) else 0.0


def sim_cs(a: BehaviorProfile, b: BehaviorProfile) -> float:
    """1 when both profiles placed premium-rate calls, else 0."""
    return 1.0 if _has(a, FACTOR_CALLING) and _has(b, FACTOR_CALLING) else 0.0


def sim_sis(a: BehaviorProfile, b: BehaviorProfile) -> float:
    """Jaccard index over leaked-target names; 0 when both sets are empty."""
    ta = a.targets(FACTOR_SENSITIVE_INFO)
    tb = b.targets(FACTOR_SENSITIVE_INFO)
    if not ta and not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[len(b)]


def _strip_scheme(url: str) -> str:
    head, sep, tail = url.partition("://")
    return tail if sep else url


def url_similarity(a: str, b: str) -> float:
    """Edit-distance similarity of the residuals after the common dot-label prefix."""
    if not a or not b:
        raise EmptyUrl("cannot compare empty URL")
    a, b = _strip_scheme(a), _strip_scheme(b)
    if not a or not b:
        raise EmptyUrl("URL is only a scheme")
    la, lb = a.split("."), b.split(".")
    common = 0
    for xa, xb in zip(la, lb):
        if xa != xb:
            break
        common += 1
    ra = ".".join(la[common:])
    rb = ".".join(lb[common:])
    if not ra and not rb:
        return 1.0
    return 1.0 - _levenshtein(ra, rb) / max(len(ra), len(rb))


def sim_cds(a: BehaviorProfile, b: BehaviorProfile) -> float:
    """Mean of URL, cipher and encoding component scores."""
    url_a = a.attribute(FACTOR_CONVERTING_DATA, TARGET_DEST_URL)
    url_b = b.attribute(FACTOR_CONVERTING_DATA, TARGET_DEST_URL)
    url_score = url_similarity(url_a, url_b) if url_a and url_b else 0.0

    cipher_a = a.attribute(FACTOR_CONVERTING_DATA, TARGET_CIPHER)
    cipher_b = b.attribute(FACTOR_CONVERTING_DATA, TARGET_CIPHER)
    cipher_score = 1.0 if cipher_a is not None and cipher_a == cipher_b else 0.0

    enc_a = a.attribute(FACTOR_CONVERTING_DATA, TARGET_ENCODING)
    enc_b = b.attribute(FACTOR_CONVERTING_DATA, TARGET_ENCODING)
    enc_score = 1.0 if enc_a is not None and enc_a == enc_b else 0.0

    return (url_score + cipher_score + enc_score) / 3.0


def total_similarity(
    a: BehaviorProfile,
    b: BehaviorProfile,
    weights: SimilarityWeights = DEFAULT_WEIGHTS,
) -> SimilarityBreakdown:
    ss = sim_ss(a, b)
    cs = sim_cs(a, b)
    sis = sim_sis(a, b)
    cds = sim_cds(a, b)
    total = weights.w_ss * ss + weights.w_cs * cs + weights.w_sis * sis + weights.w_cds * cds
    return SimilarityBreakdown(ss=ss, cs=cs, sis=sis, cds=cds, total=total)
