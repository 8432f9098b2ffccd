"""Cross-validated evaluation of the profiler pipeline.

Per fold, the training split streams through the classifier into a
fresh store; clusters are aligned to ground-truth labels by majority
vote over their training members.  Test samples are then scored against
the trained store without mutating it: a benign-categorized sample
predicts BENIGN, one whose best same-category representative clears the
threshold predicts that cluster's aligned label, anything else predicts
NOVEL.  Hits are pooled over all folds, so overall accuracy is total
hits divided by corpus size.  Per-label AUC is one-vs-rest over the
pooled ranking scores; the malware-detection score of a sample is its
best representative similarity (0 when benign-categorized).

Cluster counts come from one additional full-corpus training pass,
counting clusters by the majority truth label of their members.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .categories import BENIGN_LABEL, categorize
from .classify import ClassifierConfig, ProfileStore, best_match, classify
from .corpus import LabeledCorpus
from .profiles import BehaviorProfile, build_profile
from .rules import RuleSet, load_default_rules
from .similarity import SimilarityWeights

NOVEL_LABEL = "NOVEL"

DEFAULT_WEIGHT_SCHEDULE = (
    (0.25, 0.25, 0.25, 0.25),
    (0.27, 0.27, 0.24, 0.22),
    (0.29, 0.29, 0.23, 0.19),
    (0.31, 0.31, 0.22, 0.16),
    (0.33, 0.33, 0.21, 0.13),
    (0.35, 0.35, 0.20, 0.10),
)


class InsufficientSamples(Exception):
    def __init__(self, label: str, count: int, k: int):
        super().__init__(f"label {label!r} has {count} samples, needs at least {k} for {k}-fold")
        self.label = label
        self.count = count
        self.k = k


class DegenerateLabels(Exception):
    pass


def kfold_indices(labels: list[str], k: int = 5, seed: int = 0) -> list[tuple[list[int], list[int]]]:
    """Stratified k-fold split over sample indices, deterministic in seed."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    groups: dict[str, list[int]] = {}
    for index, label in enumerate(labels):
        groups.setdefault(label, []).append(index)
    rng = random.Random(seed)
    test_folds: list[list[int]] = [[] for _ in range(k)]
    for label in sorted(groups):
        members = groups[label]
        if len(members) < k:
            raise InsufficientSamples(label, len(members), k)
        shuffled = rng.sample(members, len(members))
        for fold in range(k):
            lo = fold * len(shuffled) // k
            hi = (fold + 1) * len(shuffled) // k
            test_folds[fold].extend(shuffled[lo:hi])
    folds = []
    for fold in range(k):
        test = sorted(test_folds[fold])
        test_set = set(test)
        train = [i for i in range(len(labels)) if i not in test_set]
        folds.append((train, test))
    return folds


# ---------------------------------------------------------------------------
# ROC

def roc_curve(scores: list[tuple[float, bool]]) -> tuple[list[float], list[float]]:
    """(fpr, tpr) points sweeping the threshold from high to low, ties grouped."""
    positives = sum(1 for _, is_pos in scores if is_pos)
    negatives = len(scores) - positives
    if positives == 0 or negatives == 0:
        raise DegenerateLabels(f"need both classes, got {positives} positive / {negatives} negative")
    fpr = [0.0]
    tpr = [0.0]
    tp = fp = 0
    ranked = sorted(scores, key=lambda pair: -pair[0])
    i = 0
    while i < len(ranked):
        j = i
        while j < len(ranked) and ranked[j][0] == ranked[i][0]:
            if ranked[j][1]:
                tp += 1
            else:
                fp += 1
            j += 1
        fpr.append(fp / negatives)
        tpr.append(tp / positives)
        i = j
    return fpr, tpr


def roc_auc(scores: list[tuple[float, bool]]) -> float:
    """Trapezoidal area under the ROC curve."""
    fpr, tpr = roc_curve(scores)
    area = 0.0
    for i in range(1, len(fpr)):
        area += (fpr[i] - fpr[i - 1]) * (tpr[i] + tpr[i - 1]) / 2.0
    return area


# ---------------------------------------------------------------------------
# report assembly

@dataclass
class EvaluationReport:
    family_labels: list[str]
    per_label_accuracy: dict[str, float]
    overall_accuracy: float
    per_label_auc: dict[str, float]
    detection_auc: float
    macro_auc: float
    confusion: dict[str, dict[str, int]]
    cluster_counts: tuple[int, int]
    family_clusters: dict[str, int]
    total_samples: int
    per_label_curves: dict[str, tuple[list[float], list[float]]] = field(default_factory=dict)
    detection_curve: tuple[list[float], list[float]] | None = None


def pool_metrics(
    predictions: list[tuple[str, str, dict[str, float], float]],
    families: list[str],
    cluster_counts: tuple[int, int],
    family_clusters: dict[str, int],
) -> EvaluationReport:
    """Build a report from pooled (truth, predicted, label scores, detection score) rows."""
    label_space = families + [BENIGN_LABEL]
    hits = {label: 0 for label in label_space}
    counts = {label: 0 for label in label_space}
    confusion: dict[str, dict[str, int]] = {label: {} for label in label_space}
    for truth, predicted, _, _ in predictions:
        counts[truth] += 1
        confusion[truth][predicted] = confusion[truth].get(predicted, 0) + 1
        if truth == predicted:
            hits[truth] += 1
    per_label_accuracy = {
        label: hits[label] / counts[label] for label in label_space if counts[label]
    }
    overall = sum(hits.values()) / len(predictions)

    per_label_auc: dict[str, float] = {}
    per_label_curves: dict[str, tuple[list[float], list[float]]] = {}
    for label in label_space:
        if not counts[label] or counts[label] == len(predictions):
            continue
        pairs = [(scores[label], truth == label) for truth, _, scores, _ in predictions]
        per_label_curves[label] = roc_curve(pairs)
        per_label_auc[label] = roc_auc(pairs)
    detection_pairs = [(det, truth != BENIGN_LABEL) for truth, _, _, det in predictions]
    if any(is_pos for _, is_pos in detection_pairs) and not all(is_pos for _, is_pos in detection_pairs):
        detection_curve = roc_curve(detection_pairs)
        detection_auc = roc_auc(detection_pairs)
    else:
        detection_curve = None
        detection_auc = 0.0
    family_aucs = [per_label_auc[f] for f in families if f in per_label_auc]
    macro_auc = sum(family_aucs) / len(family_aucs) if family_aucs else 0.0

    return EvaluationReport(
        family_labels=list(families),
        per_label_accuracy=per_label_accuracy,
        overall_accuracy=overall,
        per_label_auc=per_label_auc,
        detection_auc=detection_auc,
        macro_auc=macro_auc,
        confusion=confusion,
        cluster_counts=cluster_counts,
        family_clusters=family_clusters,
        total_samples=len(predictions),
        per_label_curves=per_label_curves,
        detection_curve=detection_curve,
    )


# ---------------------------------------------------------------------------
# profiler evaluation

@dataclass(frozen=True)
class ProfiledSample:
    profile: BehaviorProfile
    label: str


def profile_corpus(corpus: LabeledCorpus, ruleset: RuleSet | None = None, jobs: int = 1) -> list[ProfiledSample]:
    ruleset = ruleset or load_default_rules()
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            profiles = list(pool.map(lambda pair: build_profile(pair[0], ruleset), corpus.samples))
        return [ProfiledSample(profile, label) for profile, (_, label) in zip(profiles, corpus.samples)]
    return [ProfiledSample(build_profile(log, ruleset), label) for log, label in corpus.samples]


def _train_store(samples: list[ProfiledSample], indices: list[int], cfg: ClassifierConfig):
    """Stream a training split through the classifier; returns (store, alignment)."""
    store = ProfileStore()
    membership: dict[str, dict[str, int]] = {}
    for i in indices:
        sample = samples[i]
        decision = classify(sample.profile, store, cfg)
        if decision.label is not None:
            votes = membership.setdefault(decision.label, {})
            votes[sample.label] = votes.get(sample.label, 0) + 1
    aligned = {}
    for cluster, votes in membership.items():
        aligned[cluster] = max(sorted(votes), key=lambda lbl: votes[lbl])
    return store, aligned


def _score_sample(
    sample: ProfiledSample,
    store: ProfileStore,
    aligned: dict[str, str],
    cfg: ClassifierConfig,
    families: list[str],
) -> tuple[str, str, dict[str, float], float]:
    category = categorize(sample.profile)
    scores = {label: 0.0 for label in families}
    if category.is_benign:
        scores[BENIGN_LABEL] = 1.0
        return sample.label, BENIGN_LABEL, scores, 0.0
    overall = best_match(sample.profile, category, store.representatives, cfg.weights)
    detection = overall.score if overall is not None else 0.0
    if overall is not None and overall.score >= cfg.threshold:
        predicted = aligned.get(overall.representative.label, NOVEL_LABEL)
    else:
        predicted = NOVEL_LABEL
    for family in families:
        reps = [r for r in store.representatives if aligned.get(r.label) == family]
        match = best_match(sample.profile, category, reps, cfg.weights)
        scores[family] = match.score if match is not None else 0.0
    scores[BENIGN_LABEL] = 1.0 - detection
    return sample.label, predicted, scores, detection


def _cluster_census(samples: list[ProfiledSample], cfg: ClassifierConfig, families: list[str]):
    store, aligned = _train_store(samples, list(range(len(samples))), cfg)
    labels = [rep.label for rep in store.representatives]
    malware = sum(1 for lbl in labels if aligned.get(lbl, NOVEL_LABEL) != BENIGN_LABEL)
    benign = sum(1 for lbl in labels if aligned.get(lbl) == BENIGN_LABEL)
    family_clusters = {
        family: sum(1 for lbl in labels if aligned.get(lbl) == family) for family in families
    }
    return (malware, benign), family_clusters


def evaluate_profiled(
    samples: list[ProfiledSample],
    cfg: ClassifierConfig | None = None,
    k: int = 5,
    seed: int = 0,
) -> EvaluationReport:
    cfg = cfg or ClassifierConfig()
    families = sorted({s.label for s in samples if s.label != BENIGN_LABEL})
    predictions = []
    for train_idx, test_idx in kfold_indices([s.label for s in samples], k, seed):
        store, aligned = _train_store(samples, train_idx, cfg)
        for i in test_idx:
            predictions.append(_score_sample(samples[i], store, aligned, cfg, families))
    cluster_counts, family_clusters = _cluster_census(samples, cfg, families)
    return pool_metrics(predictions, families, cluster_counts, family_clusters)


def run_evaluation(
    corpus: LabeledCorpus,
    cfg: ClassifierConfig | None = None,
    k: int = 5,
    seed: int = 0,
    ruleset: RuleSet | None = None,
    jobs: int = 1,
) -> EvaluationReport:
    return evaluate_profiled(profile_corpus(corpus, ruleset, jobs=jobs), cfg, k, seed)


# ---------------------------------------------------------------------------
# weight sweep

@dataclass(frozen=True)
class SweepRow:
    index: int
    weights: tuple[float, float, float, float]
    malware_clusters: int
    benign_clusters: int
    accuracy: float
    stop: bool = False


def tune_weights(
    corpus: LabeledCorpus,
    schedule: tuple[tuple[float, float, float, float], ...] = DEFAULT_WEIGHT_SCHEDULE,
    cfg: ClassifierConfig | None = None,
    k: int = 5,
    seed: int = 0,
    ruleset: RuleSet | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """One evaluation per schedule row; the first accuracy downturn is the stop row."""
    base = cfg or ClassifierConfig()
    samples = profile_corpus(corpus, ruleset, jobs=jobs)
    rows: list[SweepRow] = []
    for index, weights in enumerate(schedule, start=1):
        row_cfg = ClassifierConfig(
            threshold=base.threshold,
            weights=SimilarityWeights(*weights),
            update_method=base.update_method,
        )
        report = evaluate_profiled(samples, row_cfg, k, seed)
        rows.append(
            SweepRow(
                index=index,
                weights=weights,
                malware_clusters=report.cluster_counts[0],
                benign_clusters=report.cluster_counts[1],
                accuracy=report.overall_accuracy,
            )
        )
    for i in range(1, len(rows)):
        if rows[i].accuracy < rows[i - 1].accuracy:
            rows[i] = SweepRow(
                index=rows[i].index,
                weights=rows[i].weights,
                malware_clusters=rows[i].malware_clusters,
                benign_clusters=rows[i].benign_clusters,
                accuracy=rows[i].accuracy,
                stop=True,
            )
            break
    return rows


# ---------------------------------------------------------------------------
# rendering, shared by the evaluator and the baseline

def render_report_machine(report: EvaluationReport) -> str:
    lines = []
    for label in report.family_labels + [BENIGN_LABEL]:
        accuracy = report.per_label_accuracy.get(label, 0.0)
        auc = report.per_label_auc.get(label, 0.0)
        lines.append(f"{label}|{accuracy:.4f}|{auc:.4f}")
    lines.append(f"OVERALL|{report.overall_accuracy:.4f}|{report.detection_auc:.4f}")
    lines.append(f"CLUSTERS|{report.cluster_counts[0]}|{report.cluster_counts[1]}")
    return "\n".join(lines) + "\n"


def render_report_human(report: EvaluationReport) -> str:
    width = max(len("OVERALL"), *(len(lbl) for lbl in report.family_labels + [BENIGN_LABEL]))
    lines = [f"{'label':<{width}}  accuracy  auc     clusters"]
    for label in report.family_labels + [BENIGN_LABEL]:
        accuracy = report.per_label_accuracy.get(label, 0.0)
        auc = report.per_label_auc.get(label, 0.0)
        clusters = report.family_clusters.get(label, "")
        lines.append(f"{label:<{width}}  {accuracy:>8.4f}  {auc:.4f}  {clusters}")
    lines.append(
        f"{'OVERALL':<{width}}  {report.overall_accuracy:>8.4f}  {report.detection_auc:.4f}"
    )
    lines.append(
        f"clusters: {report.cluster_counts[0]} malware, {report.cluster_counts[1]} benign"
        f" over {report.total_samples} samples"
    )
    pred_labels = sorted({p for row in report.confusion.values() for p in row})
    if pred_labels:
        lines.append("")
        lines.append("confusion (rows: truth, columns: predicted)")
        header = " " * width + "  " + "  ".join(f"{p:>12}" for p in pred_labels)
        lines.append(header)
        for truth in report.family_labels + [BENIGN_LABEL]:
            row = report.confusion.get(truth, {})
            cells = "  ".join(f"{row.get(p, 0):>12}" for p in pred_labels)
            lines.append(f"{truth:<{width}}  {cells}")
    return "\n".join(lines) + "\n"


def render_sweep_machine(rows: list[SweepRow]) -> str:
    lines = []
    for row in rows:
        weights = ",".join(f"{w:.2f}" for w in row.weights)
        stop = "STOP" if row.stop else ""
        lines.append(
            f"{row.index}|{weights}|{row.malware_clusters}|{row.benign_clusters}"
            f"|{row.accuracy:.4f}|{stop}"
        )
    return "\n".join(lines) + "\n"


def render_sweep_human(rows: list[SweepRow]) -> str:
    lines = ["row  weights (SS,CS,SIS,CDS)   malware  benign  accuracy"]
    for row in rows:
        weights = ", ".join(f"{w:.2f}" for w in row.weights)
        marker = "  <- accuracy tendency changed" if row.stop else ""
        lines.append(
            f"{row.index:>3}  {weights:<24}  {row.malware_clusters:>7}  {row.benign_clusters:>6}"
            f"  {row.accuracy:>8.4f}{marker}"
        )
    return "\n".join(lines) + "\n"
