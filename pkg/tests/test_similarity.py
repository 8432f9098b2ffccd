"""Four-factor similarity: unit cases plus oracle property loops."""

from __future__ import annotations

import random
import string

import pytest

from helpers import jaccard_oracle, make_profile, random_profile, url_similarity_oracle
from malprofiler.categories import BehaviorCategory
from malprofiler.similarity import (
    DEFAULT_WEIGHTS,
    EmptyUrl,
    InvalidWeights,
    SimilarityWeights,
    sim_cds,
    sim_cs,
    sim_sis,
    sim_ss,
    total_similarity,
    url_similarity,
)

TARGET_POOL = [f"t{i:02d}" for i in range(30)]


# --- weights ---------------------------------------------------------------

def test_default_weights():
    assert (DEFAULT_WEIGHTS.w_ss, DEFAULT_WEIGHTS.w_cs) == (0.33, 0.33)
    assert (DEFAULT_WEIGHTS.w_sis, DEFAULT_WEIGHTS.w_cds) == (0.21, 0.13)


@pytest.mark.parametrize(
    "weights",
    [(-0.1, 0.5, 0.3, 0.3), (0.3, 0.3, 0.3, 0.3), (0.25, 0.25, 0.25, 0.2)],
)
def test_bad_weights_rejected(weights):
    with pytest.raises(InvalidWeights):
        SimilarityWeights(*weights)


def test_weight_sum_tolerance():
    # rounding noise below 1e-9 is accepted
    SimilarityWeights(0.25, 0.25, 0.25, 0.25 + 4e-10)


def test_category_mass_sums_member_weights():
    w = SimilarityWeights(0.4, 0.3, 0.2, 0.1)
    assert w.category_mass(BehaviorCategory(frozenset({"SS"}))) == pytest.approx(0.4)
    assert w.category_mass(BehaviorCategory(frozenset({"SIS", "CDS"}))) == pytest.approx(0.3)
    assert w.category_mass(BehaviorCategory(frozenset({"SS", "CS", "SIS", "CDS"}))) == pytest.approx(1.0)
    assert w.category_mass(BehaviorCategory(frozenset())) == 0.0


# --- binary factors ----------------------------------------------------------

def test_ss_and_cs_reward_shared_access_only():
    sms = make_profile(ss=True)
    call = make_profile(cs=True)
    plain = make_profile()
    assert sim_ss(sms, sms) == 1.0
    assert sim_ss(sms, plain) == 0.0
    assert sim_ss(plain, plain) == 0.0   # both absent is not a match
    assert sim_cs(call, call) == 1.0
    assert sim_cs(call, plain) == 0.0
    assert sim_cs(plain, plain) == 0.0


def test_ss_ignores_attribute_values():
    a = make_profile(ss=True)
    b = make_profile(ss=True)
    b.entries["Telephony"]["SendingSMS"]["Premium-rate SMS"] = "different number"
    assert sim_ss(a, b) == 1.0


# --- sensitive-information Jaccard ---------------------------------------------

def test_sis_unit_cases():
    assert sim_sis(make_profile(sis=("a", "b")), make_profile(sis=("a", "b"))) == 1.0
    assert sim_sis(make_profile(sis=("a",)), make_profile(sis=("b",))) == 0.0
    assert sim_sis(make_profile(sis=("a", "b")), make_profile(sis=("b", "c"))) == pytest.approx(1 / 3)
    assert sim_sis(make_profile(), make_profile()) == 0.0
    assert sim_sis(make_profile(sis=("a",)), make_profile()) == 0.0


def test_sis_matches_bruteforce_jaccard():
    rng = random.Random(314)
    for _ in range(300):
        a = set(rng.sample(TARGET_POOL, rng.randint(0, 20)))
        b = set(rng.sample(TARGET_POOL, rng.randint(0, 20)))
        got = sim_sis(make_profile(sis=tuple(a)), make_profile(sis=tuple(b)))
        assert got == pytest.approx(jaccard_oracle(a, b), abs=1e-9)


# --- URL similarity -------------------------------------------------------------

def test_url_prefix_rule_worked_example():
    assert url_similarity("A.B.C.D", "A.B.E.F") == pytest.approx(1 / 3)


def test_url_identical_and_prefix_only():
    assert url_similarity("ads.server.test", "ads.server.test") == 1.0
    # one side consumed entirely by the common prefix
    assert url_similarity("a.b", "a.b.c") == pytest.approx(0.0)


def test_url_scheme_is_stripped():
    assert url_similarity("http://cdn.a.test", "cdn.a.test") == 1.0
    assert url_similarity("https://cdn.a.test", "http://cdn.a.test") == 1.0


def test_url_empty_rejected():
    with pytest.raises(EmptyUrl):
        url_similarity("", "a.test")
    with pytest.raises(EmptyUrl):
        url_similarity("a.test", "http://")


def random_url(rng: random.Random) -> str:
    labels = [
        "".join(rng.choice(string.ascii_lowercase + "0123456789") for _ in range(rng.randint(1, 12)))
        for _ in range(rng.randint(1, 6))
    ]
    scheme = rng.choice(("", "http://", "https://"))
    return scheme + ".".join(labels)


def test_url_similarity_matches_composed_oracle():
    rng = random.Random(2718)
    for _ in range(300):
        a = random_url(rng)
        b = random_url(rng)
        if rng.random() < 0.3:
            # force a shared label prefix to exercise the removal rule
            b = a.split("://")[-1].rsplit(".", 1)[0] + "." + b.split("://")[-1]
        got = url_similarity(a, b)
        assert got == pytest.approx(url_similarity_oracle(a, b), abs=1e-9)
        assert 0.0 <= got <= 1.0
        assert url_similarity(b, a) == pytest.approx(got, abs=1e-9)


# --- data-conversion mean ---------------------------------------------------------

def test_cds_component_mean():
    full = dict(url="sync.a.test", cipher="DES", encoding="gzip")
    assert sim_cds(make_profile(**full), make_profile(**full)) == 1.0
    other_cipher = make_profile(url="sync.a.test", cipher="AES", encoding="gzip")
    assert sim_cds(make_profile(**full), other_cipher) == pytest.approx(2 / 3)
    no_cipher = make_profile(url="sync.a.test", encoding="gzip")
    assert sim_cds(no_cipher, no_cipher) == pytest.approx(2 / 3)
    url_only = make_profile(url="sync.a.test")
    assert sim_cds(url_only, url_only) == pytest.approx(1 / 3)
    one_sided_encoding = make_profile(url="sync.a.test", cipher="DES")
    assert sim_cds(make_profile(**full), one_sided_encoding) == pytest.approx(2 / 3)
    assert sim_cds(make_profile(), make_profile()) == 0.0


def test_cds_url_component_uses_url_similarity():
    a = make_profile(url="x.A.B.C.D")
    b = make_profile(url="x.A.B.E.F")
    expected = url_similarity("x.A.B.C.D", "x.A.B.E.F") / 3
    assert sim_cds(a, b) == pytest.approx(expected)


# --- weighted total ----------------------------------------------------------------

def test_total_is_the_weighted_sum():
    a = make_profile(ss=True, cs=True, sis=("a", "b"), url="s.test", cipher="DES", encoding="gzip")
    b = make_profile(ss=True, cs=True, sis=("b", "c"), url="s.test", cipher="DES", encoding="gzip")
    breakdown = total_similarity(a, b)
    expected = 0.33 * 1 + 0.33 * 1 + 0.21 * (1 / 3) + 0.13 * 1
    assert breakdown.ss == 1.0 and breakdown.cs == 1.0
    assert breakdown.sis == pytest.approx(1 / 3)
    assert breakdown.cds == 1.0
    assert breakdown.total == pytest.approx(expected, abs=1e-9)


def test_total_respects_custom_weights():
    a = make_profile(sis=("a",), url="s.test")
    b = make_profile(sis=("a",), url="s.test")
    breakdown = total_similarity(a, b, SimilarityWeights(0.1, 0.1, 0.6, 0.2))
    assert breakdown.total == pytest.approx(0.6 * 1 + 0.2 * (1 / 3), abs=1e-9)


def test_total_symmetry_over_random_profiles():
    rng = random.Random(13)
    for _ in range(100):
        a = random_profile(rng)
        b = random_profile(rng)
        assert total_similarity(a, b) == total_similarity(b, a)
