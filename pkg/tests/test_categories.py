"""Behavior categories: enumeration, rendering and the benign rule."""

from __future__ import annotations

import pytest

from helpers import make_profile
from malprofiler.categories import (
    BehaviorCategory,
    categorize,
    enumerate_categories,
    parse_category,
)


def test_enumeration_has_fifteen_patterns_plus_benign():
    cats = enumerate_categories()
    assert len(cats) == 16
    patterns = [c for c in cats if c.factors]
    assert len(patterns) == 15
    assert len({c.factors for c in patterns}) == 15
    assert cats[-1].factors == frozenset()
    # singletons first, in fixed factor order; the CDS singleton is the
    # one pattern the benign rule folds into BENIGN
    assert [c.render() for c in cats[:3]] == ["SS", "CS", "SIS"]
    assert cats[3].factors == frozenset({"CDS"}) and cats[3].is_benign
    assert cats[-2].render() == "SS+CS+SIS+CDS"


def test_cds_only_category_is_not_malicious():
    # the four singleton subsets: only the pure conversion one counts benign
    assert BehaviorCategory(frozenset({"CDS"})).is_benign
    assert not BehaviorCategory(frozenset({"SS"})).is_benign
    assert not BehaviorCategory(frozenset({"CS"})).is_benign
    assert not BehaviorCategory(frozenset({"SIS"})).is_benign
    assert not BehaviorCategory(frozenset({"SIS", "CDS"})).is_benign
    assert BehaviorCategory(frozenset()).is_benign


def test_render_uses_fixed_factor_order():
    cat = BehaviorCategory(frozenset({"CDS", "SS", "SIS"}))
    assert cat.render() == "SS+SIS+CDS"
    assert BehaviorCategory(frozenset({"CDS"})).render() == "BENIGN"
    assert BehaviorCategory(frozenset()).render() == "BENIGN"


def test_render_parse_roundtrip_for_malicious_categories():
    for cat in enumerate_categories():
        if cat.is_benign:
            continue
        assert parse_category(cat.render()) == cat


def test_parse_benign_label():
    assert parse_category("BENIGN") == BehaviorCategory(frozenset())


@pytest.mark.parametrize("text", ["", "XX", "SS+XX", "SS+SS", "ss"])
def test_parse_rejects_bad_strings(text):
    with pytest.raises(ValueError):
        parse_category(text)


def test_categorize_profiles():
    assert categorize(make_profile()).is_benign
    assert categorize(make_profile(url="x.test", encoding="gzip")).is_benign
    assert categorize(make_profile(ss=True)).factors == frozenset({"SS"})
    assert categorize(make_profile(cs=True, sis=("IMEI",))).factors == frozenset({"CS", "SIS"})
    full = make_profile(ss=True, cs=True, sis=("IMEI",), url="x.test", cipher="DES", encoding="gzip")
    assert categorize(full).factors == frozenset({"SS", "CS", "SIS", "CDS"})
