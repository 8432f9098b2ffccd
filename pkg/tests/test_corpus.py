"""Synthetic corpus generation: validation, determinism, label truth."""

from __future__ import annotations

import random

import pytest

from malprofiler.categories import CODE_FOR_OPERATION
from malprofiler.corpus import (
    FILLER_SYSCALLS,
    CdsProfile,
    CorpusSpec,
    FamilyTemplate,
    InvalidSpec,
    LabeledCorpus,
    default_paper_spec,
    filler_record,
    generate_corpus,
    load_corpus,
    paper_templates,
    validate_spec,
    write_corpus,
)
from malprofiler.logmodel import parse_log_file, serialize_log
from malprofiler.profiles import build_profile
from malprofiler.rules import iter_findings, load_default_rules


def leaf(name: str = "Fam", **kwargs) -> FamilyTemplate:
    defaults = dict(factors=frozenset({"SIS"}), sis_targets=("IMEI",), noise=(("read", 1, 3),))
    defaults.update(kwargs)
    return FamilyTemplate(name=name, **defaults)


@pytest.fixture(scope="module")
def paper_corpus():
    return generate_corpus(default_paper_spec())


# --- spec validation -----------------------------------------------------------

def test_validate_spec_rejects_bad_templates():
    bad = [
        leaf(sis_targets=()),                                            # SIS without targets
        leaf(factors=frozenset({"SIS", "CDS"})),                         # CDS without profile
        leaf(factors=frozenset({"SIS"}), cds=CdsProfile(url="x.test")),  # profile without CDS
        leaf(sis_targets=("IMEI", "No Such Target")),
        leaf(factors=frozenset({"SIS", "CDS"}), cds=CdsProfile(url="x.test", cipher="ROT13")),
        leaf(factors=frozenset({"SIS", "CDS"}), cds=CdsProfile(url="x.test", encoding="brotli")),
        leaf(factors=frozenset({"SIS", "CDS"}), cds=CdsProfile(url="")),
        leaf(noise=(("forkbomb", 1, 2),)),
        leaf(noise=(("read", 5, 2),)),
    ]
    for template in bad:
        with pytest.raises(InvalidSpec):
            validate_spec(CorpusSpec(templates=((template, 3),), benign_count=0))


def test_validate_spec_rejects_bad_structure():
    ok = leaf()
    with pytest.raises(InvalidSpec):
        validate_spec(CorpusSpec(templates=((ok, 0),), benign_count=0))
    with pytest.raises(InvalidSpec):
        validate_spec(CorpusSpec(templates=((ok, 1), (ok, 1)), benign_count=0))
    with pytest.raises(InvalidSpec):
        validate_spec(CorpusSpec(templates=((ok, 1),), benign_count=-1))


def test_validate_variant_mixes():
    a = leaf("Fam/a")
    b = leaf("Fam/b", factors=frozenset({"SS", "SIS"}))
    good = FamilyTemplate(
        name="Fam", factors=frozenset({"SS", "SIS"}), variant_mix=((a, 0.5), (b, 0.5))
    )
    validate_spec(CorpusSpec(templates=((good, 4),), benign_count=0))

    bad_probs = FamilyTemplate(
        name="Fam", factors=frozenset({"SS", "SIS"}), variant_mix=((a, 0.5), (b, 0.4))
    )
    with pytest.raises(InvalidSpec):
        validate_spec(CorpusSpec(templates=((bad_probs, 4),), benign_count=0))

    bad_union = FamilyTemplate(
        name="Fam", factors=frozenset({"SS"}), variant_mix=((a, 0.5), (b, 0.5))
    )
    with pytest.raises(InvalidSpec):
        validate_spec(CorpusSpec(templates=((bad_union, 4),), benign_count=0))

    nested = FamilyTemplate(
        name="Outer", factors=frozenset({"SS", "SIS"}), variant_mix=((good, 1.0),)
    )
    with pytest.raises(InvalidSpec):
        validate_spec(CorpusSpec(templates=((nested, 4),), benign_count=0))


# --- filler vocabulary -----------------------------------------------------------

def test_filler_records_never_match_any_default_rule():
    ruleset = load_default_rules()
    rng = random.Random(11)
    for name in FILLER_SYSCALLS:
        for _ in range(200):
            line = filler_record(name, rng)
            log = parse_log_file(f"@id f\n{line}\n".encode())
            assert list(iter_findings(ruleset, log)) == []


def test_filler_rejects_unknown_syscall():
    with pytest.raises(InvalidSpec):
        filler_record("ptrace", random.Random(0))


# --- generation -------------------------------------------------------------------

def test_variant_quota_is_exact():
    a = leaf("Fam/a")
    b = leaf("Fam/b", factors=frozenset({"SS", "SIS"}))
    family = FamilyTemplate(
        name="Fam", factors=frozenset({"SS", "SIS"}), variant_mix=((a, 0.5), (b, 0.5))
    )
    corpus = generate_corpus(CorpusSpec(templates=((family, 8),), benign_count=0, seed=3))
    truths = list(corpus.factor_truth)
    assert truths.count(frozenset({"SIS"})) == 4
    assert truths.count(frozenset({"SS", "SIS"})) == 4
    # interleaved, not blocked
    assert truths[0] != truths[1]


def test_generation_is_deterministic_and_job_invariant():
    spec = CorpusSpec(templates=((leaf(), 5),), benign_count=20, seed=42)
    one = generate_corpus(spec)
    two = generate_corpus(spec)
    parallel = generate_corpus(spec, jobs=4)
    for other in (two, parallel):
        assert [log.sample_id for log, _ in other.samples] == [log.sample_id for log, _ in one.samples]
        assert [serialize_log(log) for log, _ in other.samples] == [
            serialize_log(log) for log, _ in one.samples
        ]
    different = generate_corpus(CorpusSpec(templates=((leaf(), 5),), benign_count=20, seed=43))
    assert [log.sample_id for log, _ in different.samples] != [log.sample_id for log, _ in one.samples]


def test_paper_spec_counts(paper_corpus):
    labels = [label for _, label in paper_corpus.samples]
    assert labels.count("AdWo") == 50
    assert labels.count("AirPush") == 8
    assert labels.count("FakeBattScar") == 6
    assert labels.count("Boxer") == 5
    assert labels.count("GinMaster") == 12
    assert labels.count("BENIGN") == 1100
    assert len(paper_corpus.samples) == 1181
    assert paper_corpus.family_labels() == ["AdWo", "AirPush", "Boxer", "FakeBattScar", "GinMaster"]


def test_sample_ids_unique_and_short(paper_corpus):
    ids = [log.sample_id for log, _ in paper_corpus.samples]
    assert len(set(ids)) == len(ids)
    assert all(len(i) == 16 and set(i) <= set("0123456789abcdef") for i in ids)


def test_benign_codec_quota(paper_corpus):
    benign_truths = [
        truth
        for truth, (_, label) in zip(paper_corpus.factor_truth, paper_corpus.samples)
        if label == "BENIGN"
    ]
    assert benign_truths.count(frozenset({"CDS"})) == 55  # 5% of 1100
    assert benign_truths.count(frozenset()) == 1045


def test_profiles_realize_the_declared_factors(paper_corpus):
    ruleset = load_default_rules()
    for truth, (log, _) in zip(paper_corpus.factor_truth, paper_corpus.samples):
        profile = build_profile(log, ruleset)
        got = frozenset(CODE_FOR_OPERATION[op] for op in profile.operations())
        assert got == truth


def test_boxer_connection_error_drops_sms():
    with_sms = dict(paper_templates())
    without_sms = dict(paper_templates(boxer_connection_error=True))
    boxer_on = [t for t in with_sms if t.name == "Boxer"][0]
    boxer_off = [t for t in without_sms if t.name == "Boxer"][0]
    assert boxer_on.factors == frozenset({"SS", "SIS"})
    assert boxer_off.factors == frozenset({"SIS"})
    corpus = generate_corpus(
        CorpusSpec(templates=((boxer_off, 5),), benign_count=0, seed=7)
    )
    ruleset = load_default_rules()
    for log, _ in corpus.samples:
        assert build_profile(log, ruleset).targets("SendingSMS") == frozenset()


# --- disk layout --------------------------------------------------------------------

def test_write_and_load_roundtrip(tmp_path):
    spec = CorpusSpec(templates=((leaf(), 4),), benign_count=6, seed=9)
    corpus = generate_corpus(spec)
    write_corpus(corpus, tmp_path)
    assert (tmp_path / "labels.txt").exists()
    again = load_corpus(tmp_path)
    assert [(log.sample_id, label) for log, label in again.samples] == [
        (log.sample_id, label) for log, label in corpus.samples
    ]
    assert [serialize_log(log) for log, _ in again.samples] == [
        serialize_log(log) for log, _ in corpus.samples
    ]


def test_load_rejects_manifest_mismatch(tmp_path):
    spec = CorpusSpec(templates=((leaf(), 4),), benign_count=0, seed=9)
    corpus = generate_corpus(spec)
    write_corpus(corpus, tmp_path)
    first_id = corpus.samples[0][0].sample_id
    second_id = corpus.samples[1][0].sample_id
    # a log whose declared id disagrees with its manifest entry
    (tmp_path / f"{first_id}.log").write_bytes((tmp_path / f"{second_id}.log").read_bytes())
    with pytest.raises(ValueError):
        load_corpus(tmp_path)


def test_load_missing_log_file(tmp_path):
    (tmp_path / "labels.txt").write_text("deadbeefdeadbeef|Fam\n")
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path)


def test_load_rejects_bad_manifest_line(tmp_path):
    (tmp_path / "labels.txt").write_text("not-a-pair\n")
    with pytest.raises(ValueError):
        load_corpus(tmp_path)


def test_duplicate_sample_ids_rejected():
    corpus = generate_corpus(CorpusSpec(templates=((leaf(), 3),), benign_count=0, seed=1))
    doubled = corpus.samples + corpus.samples[:1]
    with pytest.raises(ValueError):
        LabeledCorpus(samples=doubled)
