"""Behavior-pattern categories.

A profile's category is the set of behavior factors it exhibits, coded
SS (premium SMS), CS (premium calls), SIS (sensitive-information
leakage), CDS (data conversion before transmission).  The fifteen
non-empty factor subsets are the malicious behavior patterns; a profile
whose factors are empty, or CDS alone, is treated as benign because
converting data is not by itself a malicious act.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .profiles import BehaviorProfile
from .rules import (
    FACTOR_CALLING,
    FACTOR_CONVERTING_DATA,
    FACTOR_SENDING_SMS,
    FACTOR_SENSITIVE_INFO,
)

CODE_SS = "SS"
CODE_CS = "CS"
CODE_SIS = "SIS"
CODE_CDS = "CDS"
FACTOR_ORDER = (CODE_SS, CODE_CS, CODE_SIS, CODE_CDS)

CODE_FOR_OPERATION = {
    FACTOR_SENDING_SMS: CODE_SS,
    FACTOR_CALLING: CODE_CS,
    FACTOR_SENSITIVE_INFO: CODE_SIS,
    FACTOR_CONVERTING_DATA: CODE_CDS,
}
OPERATION_FOR_CODE = {code: op for op, code in CODE_FOR_OPERATION.items()}

BENIGN_LABEL = "BENIGN"


@dataclass(frozen=True)
class BehaviorCategory:
    factors: frozenset[str]

    @property
    def is_benign(self) -> bool:
        return not (self.factors - {CODE_CDS})

    def render(self) -> str:
        if self.is_benign:
            return BENIGN_LABEL
        return "+".join(code for code in FACTOR_ORDER if code in self.factors)


def parse_category(text: str) -> BehaviorCategory:
    if text == BENIGN_LABEL:
        return BehaviorCategory(frozenset())
    codes = text.split("+")
    if not codes or any(code not in FACTOR_ORDER for code in codes) or len(set(codes)) != len(codes):
        raise ValueError(f"bad category string {text!r}")
    return BehaviorCategory(frozenset(codes))


def categorize(profile: BehaviorProfile) -> BehaviorCategory:
    return BehaviorCategory(frozenset(CODE_FOR_OPERATION[op] for op in profile.operations()))


def enumerate_categories() -> list[BehaviorCategory]:
    """All fifteen malicious factor subsets, then the benign category.

    Subsets are ordered by size and then by factor position, so the
    listing starts SS, CS, SIS, CDS, SS+CS, ... and ends with the
    four-factor set followed by BENIGN (the empty set).
    """
    cats = [
        BehaviorCategory(frozenset(combo))
        for size in range(1, len(FACTOR_ORDER) + 1)
        for combo in combinations(FACTOR_ORDER, size)
    ]
    cats.append(BehaviorCategory(frozenset()))
    return cats
