"""Syscall-frequency clustering baseline.

Samples are embedded as raw syscall-name count vectors (sandbox events
are ignored) and clustered with k-means: k-means++ seeding from a given
RNG seed, then Lloyd iterations until the assignment reaches a fixpoint
or max_iter.  Clusters are mapped to ground-truth labels by majority
vote over the training members; a test sample predicts the label of its
nearest centroid, and its per-label ranking score is the negated
distance to the nearest centroid aligned to that label.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .categories import BENIGN_LABEL
from .corpus import LabeledCorpus
from .logmodel import IntegratedSystemLog

_NO_SCORE = -1.0e18  # ranking score when no cluster aligned to the label


class InvalidK(Exception):
    def __init__(self, k: int, n: int):
        super().__init__(f"cannot form {k} clusters from {n} vectors")
        self.k = k
        self.n = n


@dataclass(frozen=True)
class SyscallFrequencyVector:
    sample_id: str
    counts: dict[str, int]


def build_frequency_vector(log: IntegratedSystemLog, normalize: bool = False) -> SyscallFrequencyVector:
    counts = Counter(record.name for record in log.records)
    if normalize and counts:
        total = sum(counts.values())
        return SyscallFrequencyVector(log.sample_id, {k: v / total for k, v in counts.items()})
    return SyscallFrequencyVector(log.sample_id, dict(counts))


def syscall_dimensions(vectors: list[SyscallFrequencyVector]) -> tuple[str, ...]:
    names: set[str] = set()
    for vector in vectors:
        names.update(vector.counts)
    return tuple(sorted(names))


def embed(vectors: list[SyscallFrequencyVector], dims: tuple[str, ...]) -> np.ndarray:
    points = np.zeros((len(vectors), len(dims)), dtype=float)
    index = {name: j for j, name in enumerate(dims)}
    for i, vector in enumerate(vectors):
        for name, count in vector.counts.items():
            j = index.get(name)
            if j is not None:
                points[i, j] = count
    return points


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = _squared_distances(points, np.asarray(centroids)).min(axis=1)
        total = d2.sum()
        if total <= 0.0:
            choice = rng.integers(n)  # all points equal the chosen centroids
        else:
            choice = rng.choice(n, p=d2 / total)
        centroids.append(points[choice])
    return np.asarray(centroids, dtype=float)


def lloyd(
    points: np.ndarray, k: int, seed: int, max_iter: int = 100
) -> tuple[np.ndarray, np.ndarray, float, tuple[float, ...]]:
    """Run k-means; returns (labels, centroids, inertia, inertia history)."""
    n = points.shape[0]
    if k < 1 or k > n:
        raise InvalidK(k, n)
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(points, k, rng)
    labels = np.full(n, -1)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _squared_distances(points, centroids)
        new_labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        for j in range(k):
            members = points[new_labels == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                # reseed an empty cluster with the worst-fit point
                worst = int(d2[np.arange(n), new_labels].argmax())
                centroids[j] = points[worst]
                new_labels[worst] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    inertia = float(_squared_distances(points, centroids)[np.arange(n), labels].sum())
    return labels, centroids, inertia, tuple(history)


@dataclass
class KMeansResult:
    assignments: dict[str, int]
    centroids: np.ndarray
    inertia: float
    history: tuple[float, ...]


def kmeans(
    vectors: list[SyscallFrequencyVector], k: int, seed: int = 0, max_iter: int = 100
) -> KMeansResult:
    dims = syscall_dimensions(vectors)
    points = embed(vectors, dims)
    labels, centroids, inertia, history = lloyd(points, k, seed, max_iter)
    assignments = {vector.sample_id: int(labels[i]) for i, vector in enumerate(vectors)}
    return KMeansResult(assignments=assignments, centroids=centroids, inertia=inertia, history=history)


def align_clusters(labels: np.ndarray, truths: list[str], k: int) -> dict[int, str]:
    """Majority truth label per cluster, ties to the smallest label."""
    members: dict[int, Counter] = {j: Counter() for j in range(k)}
    for cluster, truth in zip(labels, truths):
        members[int(cluster)][truth] += 1
    aligned = {}
    for cluster, counter in members.items():
        if counter:
            best = max(sorted(counter), key=lambda lbl: counter[lbl])
            aligned[cluster] = best
    return aligned


def evaluate_baseline(
    corpus: LabeledCorpus,
    k: int | None = None,
    seed: int = 0,
    folds: int = 5,
    max_iter: int = 100,
):
    """Cross-validated baseline run, reported in the evaluator's schema."""
    from .evaluation import EvaluationReport, kfold_indices, pool_metrics

    families = corpus.family_labels()
    if k is None:
        k = len(families) + 1
    vectors = [build_frequency_vector(log) for log, _ in corpus.samples]
    truths = [label for _, label in corpus.samples]
    dims = syscall_dimensions(vectors)
    points = embed(vectors, dims)
    if k < 1 or k > len(vectors):
        raise InvalidK(k, len(vectors))

    label_space = families + [BENIGN_LABEL]
    predictions: list[tuple[str, str, dict[str, float], float]] = []
    for train_idx, test_idx in kfold_indices(truths, folds, seed):
        labels, centroids, _, _ = lloyd(points[train_idx], k, seed, max_iter)
        aligned = align_clusters(labels, [truths[i] for i in train_idx], k)
        centroid_labels = [aligned.get(j) for j in range(k)]
        d2 = _squared_distances(points[test_idx], centroids)
        for row, i in enumerate(test_idx):
            nearest = int(d2[row].argmin())
            predicted = centroid_labels[nearest] or BENIGN_LABEL
            scores = {}
            for label in label_space:
                owned = [j for j in range(k) if centroid_labels[j] == label]
                scores[label] = -float(d2[row, owned].min()) if owned else _NO_SCORE
            malware_cols = [j for j in range(k) if centroid_labels[j] not in (None, BENIGN_LABEL)]
            detection = -float(d2[row, malware_cols].min()) if malware_cols else _NO_SCORE
            predictions.append((truths[i], predicted, scores, detection))

    # cluster census over a full-corpus fit
    full_labels, _, _, _ = lloyd(points, k, seed, max_iter)
    aligned = align_clusters(full_labels, truths, k)
    used = sorted(set(int(c) for c in full_labels))
    malware_clusters = sum(1 for j in used if aligned.get(j) not in (None, BENIGN_LABEL))
    benign_clusters = sum(1 for j in used if aligned.get(j) == BENIGN_LABEL)
    family_clusters = {
        family: sum(1 for j in used if aligned.get(j) == family) for family in families
    }
    return pool_metrics(
        predictions,
        families,
        cluster_counts=(malware_clusters, benign_clusters),
        family_clusters=family_clusters,
    )
