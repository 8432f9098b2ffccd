"""Behavior profiling, categorization and malware family classification
for integrated sandbox system-call logs."""

from .categories import BehaviorCategory, categorize, enumerate_categories
from .classify import ClassifierConfig, Decision, ProfileStore, classify, load_store, save_store
from .corpus import CorpusSpec, FamilyTemplate, LabeledCorpus, default_paper_spec, generate_corpus
from .logmodel import (
    IntegratedSystemLog,
    merge_logs,
    parse_log_file,
    parse_log_path,
    serialize_log,
)
from .profiles import BehaviorProfile, build_profile, decode_profile, encode_profile
from .rules import ParsingRule, RuleSet, load_default_rules, load_rules, match_record
from .similarity import (
    DEFAULT_WEIGHTS,
    SimilarityBreakdown,
    SimilarityWeights,
    sim_cds,
    sim_cs,
    sim_sis,
    sim_ss,
    total_similarity,
    url_similarity,
)

__version__ = "0.1.0"
