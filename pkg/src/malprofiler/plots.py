"""Report figures rendered to files next to the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .categories import BENIGN_LABEL
from .evaluation import EvaluationReport, SweepRow

_FIG_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def _styled_figure():
    with plt.rc_context(_FIG_STYLE):
        return plt.subplots()


def save_roc_curves(report: EvaluationReport, path) -> None:
    fig, ax = _styled_figure()
    if report.detection_curve is not None:
        fpr, tpr = report.detection_curve
        ax.plot(fpr, tpr, label=f"malware vs benign (AUC {report.detection_auc:.3f})", lw=2)
    for label in report.family_labels:
        curve = report.per_label_curves.get(label)
        if curve is None:
            continue
        ax.plot(curve[0], curve[1], label=f"{label} (AUC {report.per_label_auc[label]:.3f})", lw=1)
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("ROC, pooled over folds")
    ax.legend(loc="lower right", fontsize=7)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def save_accuracy_bars(report: EvaluationReport, path) -> None:
    labels = report.family_labels + [BENIGN_LABEL]
    values = [report.per_label_accuracy.get(label, 0.0) for label in labels]
    fig, ax = _styled_figure()
    ax.bar(range(len(labels)), values, color="steelblue")
    ax.axhline(report.overall_accuracy, ls="--", c="darkorange",
               label=f"overall {report.overall_accuracy:.3f}")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("classification accuracy")
    ax.set_title("Per-label accuracy, pooled over folds")
    ax.legend(loc="lower right", fontsize=7)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def save_weight_sweep(rows: list[SweepRow], path) -> None:
    xs = [row.index for row in rows]
    fig, ax = _styled_figure()
    ax.plot(xs, [row.accuracy for row in rows], marker="o", label="accuracy", c="steelblue")
    ax.set_ylim(0, 1.05)
    ax.set_xticks(xs)
    ax.set_xticklabels(["/".join(f"{w:.2f}" for w in row.weights) for row in rows],
                       rotation=30, ha="right", fontsize=6)
    ax.set_ylabel("overall accuracy")
    twin = ax.twinx()
    twin.plot(xs, [row.malware_clusters for row in rows], marker="s", c="darkorange",
              label="malware clusters")
    twin.plot(xs, [row.benign_clusters for row in rows], marker="^", c="seagreen",
              label="benign clusters")
    twin.set_ylabel("cluster count")
    twin.grid(False)
    stop = [row.index for row in rows if row.stop]
    for x in stop:
        ax.axvline(x, ls=":", c="crimson", lw=1)
    handles1, labels1 = ax.get_legend_handles_labels()
    handles2, labels2 = twin.get_legend_handles_labels()
    ax.legend(handles1 + handles2, labels1 + labels2, loc="lower left", fontsize=7)
    ax.set_title("Weight schedule sweep")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
