"""Command line interface.

Subcommands: profile, classify, evaluate, tune, generate, baseline.
Distinct exit codes: 2 missing input file, 3 bad rule file, 4 malformed
log, 5 corrupt store or profile, 6 bad configuration, 1 failed
acceptance gate.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluation as eval_mod
from .baseline import InvalidK, evaluate_baseline
from .categories import BENIGN_LABEL
from .classify import (
    METHOD_INTERSECTION,
    METHOD_UNION,
    ClassifierConfig,
    CorruptStore,
    ProfileStore,
    classify,
    load_store,
    save_store,
)
from .logmodel import LogError, parse_log_path
from .profiles import CorruptProfile, build_profile, canonical_text, render_pretty
from .rules import RuleError, load_default_rules, load_rules
from .similarity import InvalidWeights, SimilarityWeights

EXIT_GATE = 1
EXIT_MISSING_FILE = 2
EXIT_BAD_RULES = 3
EXIT_BAD_LOG = 4
EXIT_BAD_STORE = 5
EXIT_BAD_CONFIG = 6

FORMAT_HUMAN = "human"
FORMAT_MACHINE = "machine"

GATE_OVERALL = 0.98
GATE_FAMILY = 1.0
GATE_BENIGN = 0.95


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rules", type=Path, help="rule file (default: bundled rules)")
    parser.add_argument("--format", choices=(FORMAT_HUMAN, FORMAT_MACHINE), default=FORMAT_HUMAN)


def _add_classifier_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--weights", help="four comma-separated factor weights summing to 1")
    parser.add_argument("--threshold", type=float, default=0.85)
    parser.add_argument(
        "--method", choices=(METHOD_INTERSECTION, METHOD_UNION), default=METHOD_INTERSECTION
    )


def _add_corpus_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--corpus", type=Path, help="directory with logs and labels.txt")
    source.add_argument(
        "--paper-spec", action="store_true",
        help="use the built-in five-family corpus (default when --corpus is absent)",
    )
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", type=Path, help="directory for report files and figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="malprofiler",
        description="Behavior profiling and malware family classification for sandbox logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="print the behavior profile of a log")
    p.add_argument("log", type=Path)
    _add_common(p)

    p = sub.add_parser("classify", help="classify logs against a profile store")
    p.add_argument("logs", type=Path, nargs="+")
    _add_common(p)
    _add_classifier_config(p)
    p.add_argument("--store", type=Path, required=True,
                   help="store file; created when missing, updated in place")

    p = sub.add_parser("evaluate", help="cross-validated evaluation of the profiler")
    _add_common(p)
    _add_classifier_config(p)
    _add_corpus_source(p)
    p.add_argument("--gate", action="store_true",
                   help="exit nonzero unless the accuracy targets hold")

    p = sub.add_parser("tune", help="evaluate a schedule of weight settings")
    _add_common(p)
    _add_classifier_config(p)
    _add_corpus_source(p)

    p = sub.add_parser("generate", help="write a synthetic corpus to a directory")
    p.add_argument("--paper-spec", action="store_true",
                   help="use the built-in five-family corpus (the default)")
    p.add_argument("--boxer-connection-error", action="store_true",
                   help="suppress the SMS leg of the Boxer template")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=(FORMAT_HUMAN, FORMAT_MACHINE), default=FORMAT_HUMAN)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("baseline", help="syscall-frequency clustering baseline")
    p.add_argument("--k", type=int, help="cluster count (default: families + 1)")
    _add_common(p)
    _add_corpus_source(p)

    return parser


def _load_ruleset(args):
    if getattr(args, "rules", None) is not None:
        return load_rules(args.rules.read_bytes())
    return load_default_rules()


def _classifier_config(args) -> ClassifierConfig:
    weights = SimilarityWeights(*_parse_weights(args.weights)) if args.weights else None
    kwargs = {"threshold": args.threshold, "update_method": args.method}
    if weights is not None:
        kwargs["weights"] = weights
    return ClassifierConfig(**kwargs)


def _parse_weights(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise InvalidWeights(f"expected 4 comma-separated weights, got {len(parts)}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise InvalidWeights(str(exc)) from None


def _load_corpus(args) -> corpus_mod.LabeledCorpus:
    if args.corpus is not None:
        return corpus_mod.load_corpus(args.corpus)
    spec = corpus_mod.default_paper_spec(seed=args.seed)
    return corpus_mod.generate_corpus(spec, jobs=args.jobs)


def cmd_profile(args) -> int:
    ruleset = _load_ruleset(args)
    profile = build_profile(parse_log_path(args.log), ruleset)
    if args.format == FORMAT_MACHINE:
        print(canonical_text(profile))
    else:
        print(render_pretty(profile))
    return 0


def cmd_classify(args) -> int:
    ruleset = _load_ruleset(args)
    cfg = _classifier_config(args)
    store = load_store(args.store.read_bytes()) if args.store.exists() else ProfileStore()
    decisions = []
    for log_path in args.logs:
        profile = build_profile(parse_log_path(log_path), ruleset)
        decision = classify(profile, store, cfg)
        decisions.append((profile.sample_id, decision))
    args.store.write_bytes(save_store(store))
    for sample_id, decision in decisions:
        if args.format == FORMAT_MACHINE:
            print(f"{sample_id}|{decision.render()}|{decision.score:.6f}")
        else:
            print(f"{sample_id}: {decision.render()} (score {decision.score:.6f})")
    return 0


def _emit_report(report, args, sweep_rows=None) -> None:
    machine = eval_mod.render_report_machine(report)
    human = eval_mod.render_report_human(report)
    print(machine if args.format == FORMAT_MACHINE else human, end="")
    if args.out is None:
        return
    from . import plots

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "report.psv").write_text(machine, encoding="utf-8")
    (args.out / "report.txt").write_text(human, encoding="utf-8")
    plots.save_roc_curves(report, args.out / "roc_curves.png")
    plots.save_accuracy_bars(report, args.out / "accuracy_by_label.png")


def _check_gate(report) -> list[str]:
    failures = []
    if report.overall_accuracy < GATE_OVERALL:
        failures.append(f"overall accuracy {report.overall_accuracy:.4f} < {GATE_OVERALL}")
    for family in report.family_labels:
        accuracy = report.per_label_accuracy.get(family, 0.0)
        if accuracy < GATE_FAMILY:
            failures.append(f"{family} accuracy {accuracy:.4f} < {GATE_FAMILY}")
    benign = report.per_label_accuracy.get(BENIGN_LABEL)
    if benign is not None and benign < GATE_BENIGN:
        failures.append(f"benign accuracy {benign:.4f} < {GATE_BENIGN}")
    return failures


def cmd_evaluate(args) -> int:
    ruleset = _load_ruleset(args)
    cfg = _classifier_config(args)
    corpus = _load_corpus(args)
    report = eval_mod.run_evaluation(
        corpus, cfg, k=args.folds, seed=args.seed, ruleset=ruleset, jobs=args.jobs
    )
    _emit_report(report, args)
    if args.gate:
        failures = _check_gate(report)
        for failure in failures:
            print(f"GATE FAIL: {failure}", file=sys.stderr)
        return EXIT_GATE if failures else 0
    return 0


def cmd_tune(args) -> int:
    ruleset = _load_ruleset(args)
    cfg = _classifier_config(args)
    corpus = _load_corpus(args)
    rows = eval_mod.tune_weights(
        corpus, cfg=cfg, k=args.folds, seed=args.seed, ruleset=ruleset, jobs=args.jobs
    )
    machine = eval_mod.render_sweep_machine(rows)
    human = eval_mod.render_sweep_human(rows)
    print(machine if args.format == FORMAT_MACHINE else human, end="")
    if args.out is not None:
        from . import plots

        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "sweep.psv").write_text(machine, encoding="utf-8")
        (args.out / "sweep.txt").write_text(human, encoding="utf-8")
        plots.save_weight_sweep(rows, args.out / "weight_sweep.png")
    return 0


def cmd_generate(args) -> int:
    spec = corpus_mod.default_paper_spec(
        boxer_connection_error=args.boxer_connection_error, seed=args.seed
    )
    corpus = corpus_mod.generate_corpus(spec, jobs=args.jobs)
    corpus_mod.write_corpus(corpus, args.out)
    if args.format == FORMAT_MACHINE:
        for log, label in corpus.samples:
            print(f"{log.sample_id}|{label}")
    else:
        malware = sum(1 for _, label in corpus.samples if label != BENIGN_LABEL)
        benign = len(corpus.samples) - malware
        print(f"wrote {malware} malware and {benign} benign samples to {args.out}")
    return 0


def cmd_baseline(args) -> int:
    corpus = _load_corpus(args)
    report = evaluate_baseline(corpus, k=args.k, seed=args.seed, folds=args.folds)
    _emit_report(report, args)
    return 0


_COMMANDS = {
    "profile": cmd_profile,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "tune": cmd_tune,
    "generate": cmd_generate,
    "baseline": cmd_baseline,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except RuleError as exc:
        print(f"error: bad rule file: {exc}", file=sys.stderr)
        return EXIT_BAD_RULES
    except LogError as exc:
        print(f"error: bad log: {exc}", file=sys.stderr)
        return EXIT_BAD_LOG
    except (CorruptStore, CorruptProfile) as exc:
        print(f"error: corrupt data: {exc}", file=sys.stderr)
        return EXIT_BAD_STORE
    except (InvalidWeights, InvalidK, corpus_mod.InvalidSpec,
            eval_mod.InsufficientSamples, eval_mod.DegenerateLabels, ValueError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
