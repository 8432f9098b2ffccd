"""Deterministic synthetic corpus generation.

Each family template fixes a behavior-factor set, the sensitive targets
it leaks, an optional transmission profile (destination URL, cipher,
encoding) and a syscall noise mix.  Samples are synthesized from
per-sample random substreams seeded by (corpus seed, family, index), so
output is byte-identical for a given spec regardless of worker count or
generation order.  Templates with a variant mix split their sample
budget by largest-remainder quota and interleave the variants, so a
50/50 mix over eight samples yields exactly four of each.

Filler records deliberately avoid every pattern in the default rule
set; the only findings a sample produces are the ones its template
injects.  Benign samples are filler-only except for a small quota that
also transmits gzip-compressed data, which still categorizes benign.
"""

from __future__ import annotations

import hashlib
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .categories import BENIGN_LABEL, CODE_CDS, CODE_CS, CODE_SIS, CODE_SS
from .logmodel import IntegratedSystemLog, parse_log_file, parse_log_path, serialize_log

LABELS_FILENAME = "labels.txt"

CIPHERS = ("DES", "AES", "Blowfish")


class InvalidSpec(Exception):
    pass


@dataclass(frozen=True)
class CdsProfile:
    url: str
    cipher: str | None = None
    encoding: str | None = None


@dataclass(frozen=True)
class FamilyTemplate:
    name: str
    factors: frozenset[str]
    sis_targets: tuple[str, ...] = ()
    cds: CdsProfile | None = None
    noise: tuple[tuple[str, int, int], ...] = ()
    variant_mix: tuple[tuple["FamilyTemplate", float], ...] = ()


@dataclass(frozen=True)
class CorpusSpec:
    templates: tuple[tuple[FamilyTemplate, int], ...]
    benign_count: int
    seed: int = 0


@dataclass
class LabeledCorpus:
    samples: list[tuple[IntegratedSystemLog, str]]
    # factor set each sample was synthesized with; empty for loaded corpora
    factor_truth: tuple[frozenset[str], ...] = ()

    def __post_init__(self) -> None:
        ids = [log.sample_id for log, _ in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample ids in corpus")

    def family_labels(self) -> list[str]:
        return sorted({label for _, label in self.samples if label != BENIGN_LABEL})


# ---------------------------------------------------------------------------
# record vocabulary

_FILLER_OPEN_PATHS = (
    "/system/fonts/Roboto-Regular.ttf",
    "/system/framework/framework.jar",
    "/data/local/tmp/cache.bin",
    "/dev/urandom",
    "/system/lib/libc.so",
)


def _digits(rng: random.Random, n: int) -> str:
    return "".join(str(rng.randrange(10)) for _ in range(n))


def _hexdigits(rng: random.Random, n: int) -> str:
    return "".join(rng.choice("0123456789abcdef") for _ in range(n))


def filler_record(name: str, rng: random.Random) -> str:
    if name == "read":
        return f"S|read|{rng.randint(3, 64)}|{rng.choice((512, 1024, 2048, 4096))}"
    if name == "write":
        return f"S|write|{rng.randint(3, 64)}|{rng.choice((128, 256, 512))}"
    if name == "close":
        return f"S|close|{rng.randint(3, 64)}"
    if name == "open":
        return f"S|open|{rng.choice(_FILLER_OPEN_PATHS)}|O_RDONLY"
    if name == "recvmsg":
        return f"S|recvmsg|{rng.randint(3, 64)}|MSG_DONTWAIT"
    raise InvalidSpec(f"no filler recipe for syscall {name!r}")


FILLER_SYSCALLS = ("read", "write", "close", "open", "recvmsg")

# MAP payload key and value recipe for every event-routed sensitive target
_SIS_EVENT_FIELDS = {
    "IMEI": ("imei", lambda rng: _digits(rng, 15)),
    "IMSI": ("imsi", lambda rng: "310" + _digits(rng, 12)),
    "MCC": ("mcc", lambda rng: rng.choice(("310", "234", "450"))),
    "MNC": ("mnc", lambda rng: rng.choice(("260", "410", "005"))),
    "Android Id": ("android_id", lambda rng: _hexdigits(rng, 16)),
    "Device ID": ("device_id", lambda rng: _hexdigits(rng, 12)),
    "OS version": ("osversion", lambda rng: rng.choice(("8", "10", "12"))),
    "SDK version": ("sdk_version", lambda rng: rng.choice(("26", "29", "31"))),
    "Device type": ("device_type", lambda rng: "Android"),
    "Device model": ("model", lambda rng: rng.choice(("GT-I9100", "Nexus One", "Droid X"))),
    "Network type": ("network", lambda rng: rng.choice(("WIFI", "MOBILE"))),
    "Network operator": ("networkOperator", lambda rng: "310260"),
    "SIM operator": ("sim_operator", lambda rng: "310260"),
    "Carrier": ("carrier", lambda rng: rng.choice(("T-Mobile", "Vodafone", "Verizon"))),
    "Location": ("longitude", lambda rng: f"{rng.uniform(-180.0, 180.0):.4f}"),
    "Country code": ("country_code", lambda rng: rng.choice(("en", "de", "ru"))),
    "Language": ("language", lambda rng: rng.choice(("en", "es", "zh"))),
    "Phone number": ("phone_number", lambda rng: "1555" + _digits(rng, 7)),
    "SIM number": ("sim_serial", lambda rng: "8901" + _digits(rng, 15)),
}

# file-system probes for the remaining sensitive targets
_SIS_SYSCALL_RECORDS = {
    "CPU spec": "S|open|/proc/cpuinfo|O_RDONLY",
    "Storage access": "S|open|/sdcard/DCIM/.thumbnails/index|O_RDONLY",
    "Media file": "S|stat64|/system/app/MediaProvider.apk",
    "Contact information": "S|access|/system/app/Contacts.apk|F_OK",
}


def _validate_leaf(template: FamilyTemplate) -> None:
    if template.variant_mix:
        raise InvalidSpec(f"{template.name}: nested variant mixes are not supported")
    if (CODE_SIS in template.factors) != bool(template.sis_targets):
        raise InvalidSpec(f"{template.name}: SIS factor and sis_targets must agree")
    if (CODE_CDS in template.factors) != (template.cds is not None):
        raise InvalidSpec(f"{template.name}: CDS factor and cds profile must agree")
    for target in template.sis_targets:
        if target not in _SIS_EVENT_FIELDS and target not in _SIS_SYSCALL_RECORDS:
            raise InvalidSpec(f"{template.name}: no recipe for sensitive target {target!r}")
    if template.cds is not None:
        if not template.cds.url:
            raise InvalidSpec(f"{template.name}: cds profile needs a destination URL")
        if template.cds.cipher is not None and template.cds.cipher not in CIPHERS:
            raise InvalidSpec(f"{template.name}: unknown cipher {template.cds.cipher!r}")
        if template.cds.encoding not in (None, "gzip"):
            raise InvalidSpec(f"{template.name}: unknown encoding {template.cds.encoding!r}")
    for name, lo, hi in template.noise:
        if name not in FILLER_SYSCALLS or lo < 0 or hi < lo:
            raise InvalidSpec(f"{template.name}: bad noise entry {(name, lo, hi)}")


def validate_spec(spec: CorpusSpec) -> None:
    if spec.benign_count < 0:
        raise InvalidSpec("benign_count must be >= 0")
    names = set()
    for template, count in spec.templates:
        if count <= 0:
            raise InvalidSpec(f"{template.name}: sample count must be positive")
        if template.name in names:
            raise InvalidSpec(f"duplicate template name {template.name!r}")
        names.add(template.name)
        _validate_template(template)


def _validate_template(template: FamilyTemplate) -> None:
    if not template.variant_mix:
        _validate_leaf(template)
        return
    total = sum(prob for _, prob in template.variant_mix)
    if any(prob < 0 for _, prob in template.variant_mix) or abs(total - 1.0) > 1e-9:
        raise InvalidSpec(f"{template.name}: variant probabilities must be >= 0 and sum to 1")
    union: frozenset[str] = frozenset()
    for leaf, _ in template.variant_mix:
        _validate_leaf(leaf)
        union |= leaf.factors
    if union != template.factors:
        raise InvalidSpec(f"{template.name}: factors must be the union of variant factors")


def _variant_quotas(template: FamilyTemplate, count: int) -> list[int]:
    """Largest-remainder apportionment of count over the variant mix."""
    shares = [prob * count for _, prob in template.variant_mix]
    quotas = [int(share) for share in shares]
    remainder = count - sum(quotas)
    order = sorted(range(len(shares)), key=lambda i: (quotas[i] - shares[i], i))
    for i in order[:remainder]:
        quotas[i] += 1
    return quotas


def _variant_sequence(template: FamilyTemplate, count: int) -> list[FamilyTemplate]:
    if not template.variant_mix:
        return [template] * count
    quotas = _variant_quotas(template, count)
    remaining = list(quotas)
    sequence: list[FamilyTemplate] = []
    while len(sequence) < count:
        for i, (leaf, _) in enumerate(template.variant_mix):
            if remaining[i] > 0 and len(sequence) < count:
                sequence.append(leaf)
                remaining[i] -= 1
    return sequence


def _synthesize(
    leaf: FamilyTemplate, family: str, index: int, seed: int
) -> IntegratedSystemLog:
    rng = random.Random(f"{seed}/{family}/{index}")
    slug = family.lower().replace(" ", "-")
    lines = [f"S|open|/data/app/{slug}.sample{index:04d}/base.apk|O_RDONLY"]
    for name, lo, hi in leaf.noise:
        for _ in range(rng.randint(lo, hi)):
            lines.append(filler_record(name, rng))
    if CODE_SS in leaf.factors:
        lines.append(f"E|SMS|number=90{_digits(rng, 4)};text=You have won")
    if CODE_CS in leaf.factors:
        lines.append(f"E|CALL|number=90{_digits(rng, 4)}")
    for target in leaf.sis_targets:
        if target in _SIS_EVENT_FIELDS:
            key, value_fn = _SIS_EVENT_FIELDS[target]
            lines.append(f"E|MAP|{key}={value_fn(rng)}")
        else:
            lines.append(_SIS_SYSCALL_RECORDS[target])
    if leaf.cds is not None:
        lines.append(f"E|NET_OPEN|desthost={leaf.cds.url};destport=80")
        if leaf.cds.encoding is not None:
            lines.append(f"E|NET_SEND|desthost={leaf.cds.url};headers=Content-Encoding: {leaf.cds.encoding}")
        if leaf.cds.cipher is not None:
            lines.append(f"E|NET_SEND|desthost={leaf.cds.url};payload=CryptoUsage: {leaf.cds.cipher}")
    rng.shuffle(lines)
    body = "\n".join(lines)
    sample_id = hashlib.sha256(body.encode("utf-8")).hexdigest()[:16]
    return parse_log_file(f"@id {sample_id}\n{body}\n".encode("utf-8"))


def generate_corpus(spec: CorpusSpec, jobs: int = 1) -> LabeledCorpus:
    """Synthesize the corpus a spec describes; deterministic in the seed."""
    validate_spec(spec)
    tasks: list[tuple[FamilyTemplate, str, str, int]] = []
    for template, count in spec.templates:
        for index, leaf in enumerate(_variant_sequence(template, count)):
            tasks.append((leaf, template.name, template.name, index))
    benign = benign_template()
    for index, leaf in enumerate(_variant_sequence(benign, spec.benign_count)):
        tasks.append((leaf, BENIGN_LABEL, benign.name, index))

    def run(task):
        leaf, label, family, index = task
        return _synthesize(leaf, family, index, spec.seed), label

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(task) for task in tasks]
    return LabeledCorpus(
        samples=results,
        factor_truth=tuple(task[0].factors for task in tasks),
    )


# ---------------------------------------------------------------------------
# the desk-scale corpus: five families in the published proportions at 1/8
# scale, read-heavy adware, an SMS family with a half-silent variant mix, a
# frequency-skewed battery scam, an SMS family whose sending is suppressible,
# and an identifier stealer, against a large filler-only benign population.

_COMMON_NOISE = (("read", 20, 60), ("write", 10, 30), ("open", 5, 15), ("close", 5, 15), ("recvmsg", 0, 8))


def _airpush_variants() -> tuple[tuple[FamilyTemplate, float], ...]:
    targets = ("IMEI", "OS version", "Location", "Carrier")
    noisy = FamilyTemplate(
        name="AirPush/sms",
        factors=frozenset({CODE_SS, CODE_SIS}),
        sis_targets=targets,
        noise=_COMMON_NOISE,
    )
    quiet = FamilyTemplate(
        name="AirPush/quiet",
        factors=frozenset({CODE_SIS}),
        sis_targets=targets,
        noise=_COMMON_NOISE,
    )
    return ((noisy, 0.5), (quiet, 0.5))


def benign_template() -> FamilyTemplate:
    plain = FamilyTemplate(name="Benign/plain", factors=frozenset(), noise=_COMMON_NOISE)
    codec = FamilyTemplate(
        name="Benign/codec",
        factors=frozenset({CODE_CDS}),
        cds=CdsProfile(url="cdn.appcloud.test", encoding="gzip"),
        noise=_COMMON_NOISE,
    )
    return FamilyTemplate(
        name="Benign",
        factors=frozenset({CODE_CDS}),
        variant_mix=((plain, 0.95), (codec, 0.05)),
    )


def paper_templates(boxer_connection_error: bool = False) -> tuple[tuple[FamilyTemplate, int], ...]:
    adwo = FamilyTemplate(
        name="AdWo",
        factors=frozenset({CODE_SIS, CODE_CDS}),
        sis_targets=("Android Id", "Device ID", "OS version", "Device model"),
        cds=CdsProfile(url="ads.adwo.test", encoding="gzip"),
        noise=(("read", 150, 200), ("write", 10, 30), ("open", 5, 15), ("close", 5, 15), ("recvmsg", 5, 15)),
    )
    airpush = FamilyTemplate(
        name="AirPush",
        factors=frozenset({CODE_SS, CODE_SIS}),
        variant_mix=_airpush_variants(),
    )
    fakebatt = FamilyTemplate(
        name="FakeBattScar",
        factors=frozenset({CODE_SIS, CODE_CDS}),
        sis_targets=("Device model", "Carrier", "MCC", "MNC"),
        cds=CdsProfile(url="stats.fakebatt.test", encoding="gzip"),
        noise=(("read", 30, 60), ("write", 10, 30), ("open", 900, 1100), ("close", 900, 1100)),
    )
    boxer_factors = frozenset({CODE_SIS}) if boxer_connection_error else frozenset({CODE_SS, CODE_SIS})
    boxer = FamilyTemplate(
        name="Boxer",
        factors=boxer_factors,
        sis_targets=("IMEI", "IMSI", "Country code", "Language"),
        noise=_COMMON_NOISE,
    )
    ginmaster = FamilyTemplate(
        name="GinMaster",
        factors=frozenset({CODE_SIS, CODE_CDS}),
        sis_targets=("IMEI", "IMSI", "SIM number", "Phone number", "Network type"),
        cds=CdsProfile(url="sync.ginmaster.test", cipher="DES", encoding="gzip"),
        noise=_COMMON_NOISE,
    )
    return ((adwo, 50), (airpush, 8), (fakebatt, 6), (boxer, 5), (ginmaster, 12))


def default_paper_spec(boxer_connection_error: bool = False, seed: int = 7) -> CorpusSpec:
    return CorpusSpec(
        templates=paper_templates(boxer_connection_error),
        benign_count=1100,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# disk layout: one <sample_id>.log per sample plus a labels.txt manifest of
# <sample_id>|<label> lines in corpus order.

def write_corpus(corpus: LabeledCorpus, outdir) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for log, label in corpus.samples:
        (outdir / f"{log.sample_id}.log").write_bytes(serialize_log(log))
        manifest.append(f"{log.sample_id}|{label}")
    (outdir / LABELS_FILENAME).write_text("\n".join(manifest) + "\n", encoding="utf-8")


def load_corpus(directory) -> LabeledCorpus:
    manifest = (directory / LABELS_FILENAME).read_text(encoding="utf-8")
    samples = []
    for line in manifest.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        sample_id, sep, label = stripped.partition("|")
        if not sep or not sample_id or not label:
            raise ValueError(f"bad manifest line {stripped!r}")
        log = parse_log_path(directory / f"{sample_id}.log")
        if log.sample_id != sample_id:
            raise ValueError(f"manifest id {sample_id!r} does not match log id {log.sample_id!r}")
        samples.append((log, label))
    return LabeledCorpus(samples=samples)
