"""Command-line entry point wiring the pipeline modules together.

Configuration comes from per-subcommand flags plus an optional ``--config``
file of ``key=value`` lines (``#`` starts a comment).  Keys are long option
names with dashes or underscores; flags given on the command line win.

Randomness flows from the single ``--seed`` flag.  Subcommands hand the
seed to their sub-configs, which derive purpose-specific streams, and the
train/test partition uses ``derive_seed(seed, "cli-split")`` so changing
an unrelated knob never reshuffles the split.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from .agreement import (
    AnnotationSet,
    LabelEvent,
    adjudicate,
    annotation_sets_from_log,
    cohens_kappa,
    confusion_matrix,
    read_label_log,
    write_label_log,
)
from .baselines import (
    ForestConfig,
    fit_tfidf,
    maxent_label,
    predict_forest,
    predict_svm,
    train_forest,
    train_maxent,
    train_svm,
    transform_matrix,
)
from .classifier import (
    MODES,
    ModelConfig,
    TrainedModel,
    gradient_check,
    load_model,
    mse_curve,
    predict,
    save_model,
    sweep_splits,
    train_classifier,
)
from .corpus import (
    LabeledRecord,
    SplitSpec,
    StopwordList,
    clean_and_tokenize,
    default_stopwords,
    ingest_records,
    load_stopwords,
    split_corpus,
    write_records_jsonl,
)
from .embeddings import (
    EmbedTrainConfig,
    build_vocab,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .errors import ParseError, RadtextError, ValidationError
from .metrics import EvalReport, comparison_table, evaluate
from .seeding import derive_seed
from .service import AnnotationState, run_service
from .synth import SynthConfig, generate_corpus, write_corpus_jsonl, write_label_csv
from .trends import radical_timeline, render_timeline


@dataclass
class PipelineConfig:
    """Validated path and seed plumbing shared by the subcommands."""

    corpus: Path | None = None
    labels: Path | None = None
    stopwords: Path | None = None
    out_dir: Path | None = None
    embed: EmbedTrainConfig | None = None
    model: ModelConfig | None = None
    synth: SynthConfig | None = None
    mode: str = "two_class_threshold"
    seed: int = 0

    def __post_init__(self):
        for name in ("corpus", "labels", "stopwords"):
            path = getattr(self, name)
            if path is not None:
                path = Path(path)
                setattr(self, name, path)
                if not path.exists():
                    raise ValidationError(f"{name} path {path} does not exist")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)
            self.out_dir.mkdir(parents=True, exist_ok=True)


@dataclass(frozen=True)
class _Pred:
    record_id: str
    label: str


# ---------------------------------------------------------------- helpers


def _require_exists(path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{what} path {path} does not exist")
    return path


def _stopwords_from(path) -> StopwordList:
    if path is None:
        return default_stopwords()
    return load_stopwords(path)


def _read_records(path):
    records, _ = ingest_records(_require_exists(path, "records"), "jsonl")
    return records


def _load_labeled(
    records_path, labels_path, annotator: str | None
) -> tuple[list[LabeledRecord], str]:
    """Pair the record file with one annotator's labels, in file order."""
    records = _read_records(records_path)
    sets = annotation_sets_from_log(
        read_label_log(_require_exists(labels_path, "labels"))
    )
    if annotator is None:
        if len(sets) != 1:
            raise ValidationError(
                f"label file has annotators {sorted(sets)}; pass --annotator"
            )
        annotator = next(iter(sets))
    if annotator not in sets:
        raise ValidationError(
            f"annotator {annotator!r} not in label file (has {sorted(sets)})"
        )
    labels = sets[annotator].labels
    known = {rec.id for rec in records}
    orphans = sorted(set(labels) - known)
    if orphans:
        raise ValidationError(
            f"labels reference {len(orphans)} unknown record(s), first {orphans[0]!r}"
        )
    labeled = [
        LabeledRecord(record=rec, label=labels[rec.id], annotator_id=annotator)
        for rec in records
        if rec.id in labels
    ]
    if not labeled:
        raise ValidationError("no record carries a label from this annotator")
    return labeled, annotator


def _pairs(items: list[LabeledRecord], stopwords: StopwordList):
    """(TokenSequence, label) pairs; records cleaned to nothing are dropped."""
    out = []
    for item in items:
        seq = clean_and_tokenize(item.record, stopwords)
        if seq.tokens:
            out.append((seq, item.label))
    return out


def _filter_mode(labeled: list[LabeledRecord], mode: str) -> list[LabeledRecord]:
    if mode == "two_class_threshold":
        return [item for item in labeled if item.label in ("R", "NR")]
    return labeled


def _split(labeled, fraction: float, seed: int):
    spec = SplitSpec(fraction, seed=derive_seed(seed, "cli-split"), stratified=True)
    return split_corpus(labeled, spec)


def _annotation_set_from_file(path, which: str) -> AnnotationSet | None:
    """One annotator's labels from a log file; None means 'two sets inside'."""
    sets = annotation_sets_from_log(read_label_log(_require_exists(path, which)))
    if len(sets) == 1:
        return sets[next(iter(sets))]
    return None


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_eval_report(report: EvalReport, path: Path) -> None:
    lines = ["field,class,value"]
    for cls in report.classes:
        lines.append("precision,%s,%.6f" % (cls, report.precision[cls]))
        lines.append("recall,%s,%.6f" % (cls, report.recall[cls]))
        lines.append("f1,%s,%.6f" % (cls, report.f1[cls]))
        lines.append("support,%s,%d" % (cls, report.support[cls]))
    lines.append("macro_precision,,%.6f" % report.macro_precision)
    lines.append("macro_recall,,%.6f" % report.macro_recall)
    lines.append("macro_f1,,%.6f" % report.macro_f1)
    lines.append("accuracy,,%.6f" % report.accuracy)
    lines.append("n,,%d" % report.n)
    lines.append("positive_class,,%s" % report.positive_class)
    _write_text(path, "\n".join(lines) + "\n")


def _write_predictions(preds, path: Path) -> None:
    lines = ["record_id,label,score"]
    for p in preds:
        score = getattr(p, "score", None)
        lines.append(
            "%s,%s,%s" % (p.record_id, p.label, "" if score is None else "%.17g" % score)
        )
    _write_text(path, "\n".join(lines) + "\n")


def _evaluate_lstm(model: TrainedModel, items, stopwords) -> EvalReport:
    preds, truth = [], []
    for item in items:
        seq = clean_and_tokenize(item.record, stopwords)
        if not seq.tokens:
            continue
        preds.append(predict(model, seq))
        truth.append(item)
    return evaluate(preds, truth)


def _ids_subset(labeled: list[LabeledRecord], ids_path) -> list[LabeledRecord]:
    wanted = [
        line.strip()
        for line in Path(_require_exists(ids_path, "ids")).read_text("utf-8").splitlines()
        if line.strip()
    ]
    have = {item.record.id for item in labeled}
    missing = sorted(set(wanted) - have)
    if missing:
        raise ValidationError(
            f"ids file lists {len(missing)} unlabeled record(s), first {missing[0]!r}"
        )
    keep = set(wanted)
    return [item for item in labeled if item.record.id in keep]


# ------------------------------------------------------------- subcommands


def _cmd_ingest(args) -> int:
    config = PipelineConfig(out_dir=args.out)
    records, report = ingest_records(_require_exists(args.input, "input"), args.format)
    out_path = config.out_dir / "records.jsonl"
    write_records_jsonl(records, out_path)
    print(f"ingest: kept {report.kept}, dropped {report.dropped} -> {out_path}")
    return 0


def _cmd_clean(args) -> int:
    config = PipelineConfig(
        corpus=args.records, stopwords=args.stopwords, out_dir=args.out
    )
    stopwords = _stopwords_from(config.stopwords)
    records = _read_records(config.corpus)
    lines = ["record_id,tokens"]
    empty = 0
    for rec in records:
        seq = clean_and_tokenize(rec, stopwords)
        empty += not seq.tokens
        lines.append("%s,%s" % (rec.id, " ".join(seq.tokens)))
    out_path = config.out_dir / "tokens.csv"
    _write_text(out_path, "\n".join(lines) + "\n")
    print(f"clean: {len(records)} records, {empty} empty after cleaning -> {out_path}")
    return 0


def _cmd_kappa(args) -> int:
    set_a = _annotation_set_from_file(args.labels_a, "labels-a")
    set_b = _annotation_set_from_file(args.labels_b, "labels-b")
    if set_a is None or set_b is None:
        # a single two-annotator log may be passed as both files
        if Path(args.labels_a) == Path(args.labels_b):
            sets = annotation_sets_from_log(read_label_log(args.labels_a))
            if len(sets) == 2:
                set_a, set_b = (sets[k] for k in sorted(sets))
        if set_a is None or set_b is None:
            raise ValidationError(
                "each label file must hold exactly one annotator "
                "(or pass one two-annotator log as both files)"
            )
    report = cohens_kappa(confusion_matrix(set_a, set_b))
    print(
        "kappa=%.4f (p_o=%.4f, p_e=%.4f, n=%d)"
        % (report.kappa, report.p_o, report.p_e, report.n)
    )
    if args.out is not None:
        config = PipelineConfig(out_dir=args.out)
        out_path = config.out_dir / "kappa.csv"
        _write_text(
            out_path,
            "kappa,p_o,p_e,n\n%.6f,%.6f,%.6f,%d\n"
            % (report.kappa, report.p_o, report.p_e, report.n),
        )
    return 0


def _cmd_adjudicate(args) -> int:
    config = PipelineConfig(corpus=args.records, out_dir=args.out)
    records = {rec.id: rec for rec in _read_records(config.corpus)}
    sets = annotation_sets_from_log(
        read_label_log(_require_exists(args.labels, "labels"))
    )
    if len(sets) != 2:
        raise ValidationError(
            f"adjudication needs exactly two annotators, log has {sorted(sets)}"
        )
    set_a, set_b = (sets[k] for k in sorted(sets))
    gold, report = adjudicate(
        set_a, set_b, records, policy=args.policy, prefer=args.prefer
    )
    events = [
        LabelEvent(
            record_id=item.record.id, annotator_id="gold", label=item.label, timestamp=""
        )
        for item in gold
    ]
    out_path = config.out_dir / "gold_labels.csv"
    write_label_log(events, out_path)
    print(
        f"adjudicate: {report.agreements} agreements, "
        f"{report.disagreements} disagreements, {len(gold)} gold -> {out_path}"
    )
    return 0


def _cmd_synth(args) -> int:
    synth_config = SynthConfig(
        n_records=args.n,
        mean_length=args.mean_length,
        injection_rate=args.injection_rate,
        proportions=_parse_proportions(args.proportions),
        seed=args.seed,
        disagreement_rate=args.disagreement_rate,
    )
    config = PipelineConfig(out_dir=args.out, synth=synth_config, seed=args.seed)
    corpus = generate_corpus(synth_config)
    records_path = config.out_dir / "synth_records.jsonl"
    labels_path = config.out_dir / "synth_labels.csv"
    write_corpus_jsonl(corpus, records_path)
    write_label_csv(corpus, labels_path, synth_config)
    counts = {}
    for item in corpus:
        counts[item.label] = counts.get(item.label, 0) + 1
    tally = " ".join(f"{k}={counts.get(k, 0)}" for k in ("R", "NR", "I"))
    print(f"synth: {len(corpus)} records ({tally}) -> {records_path}, {labels_path}")
    return 0


def _cmd_train(args) -> int:
    embed_config = EmbedTrainConfig(
        dimension=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.embed_epochs,
        alpha=args.alpha,
        seed=args.seed,
    )
    model_config = ModelConfig(
        hidden=args.hidden,
        max_len=args.max_len,
        epochs=args.epochs,
        learning_rate=args.lr,
        clip=args.clip,
        seed=args.seed,
        mode=args.mode,
    )
    config = PipelineConfig(
        corpus=args.records,
        labels=args.labels,
        stopwords=args.stopwords,
        out_dir=args.out,
        embed=embed_config,
        model=model_config,
        mode=args.mode,
        seed=args.seed,
    )
    labeled, _ = _load_labeled(config.corpus, config.labels, args.annotator)
    labeled = _filter_mode(labeled, config.mode)
    train_set, test_set = _split(labeled, args.train_fraction, config.seed)
    stopwords = _stopwords_from(config.stopwords)
    train_pairs = _pairs(train_set, stopwords)
    vocab = build_vocab([seq for seq, _ in train_pairs], min_count=args.min_count)
    emb = train_embeddings([seq for seq, _ in train_pairs], vocab, embed_config)
    model = train_classifier(train_pairs, emb, vocab, model_config)

    save_embeddings(emb, vocab, config.out_dir / "embeddings.txt")
    save_model(model, config.out_dir / "model.txt")
    _write_text(
        config.out_dir / "train_ids.txt",
        "".join(item.record.id + "\n" for item in train_set),
    )
    _write_text(
        config.out_dir / "test_ids.txt",
        "".join(item.record.id + "\n" for item in test_set),
    )
    print(
        f"train: {len(train_set)} train / {len(test_set)} test, "
        f"final epoch loss {model.loss_history[-1]:.4f} -> {config.out_dir / 'model.txt'}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    config = PipelineConfig(
        corpus=args.records,
        labels=args.labels,
        stopwords=args.stopwords,
        out_dir=args.out,
    )
    emb, vocab = load_embeddings(_require_exists(args.embeddings, "embeddings"))
    model = load_model(_require_exists(args.model, "model"), emb, vocab)
    labeled, _ = _load_labeled(config.corpus, config.labels, args.annotator)
    labeled = _filter_mode(labeled, model.config.mode)
    if args.ids is not None:
        labeled = _ids_subset(labeled, args.ids)
    stopwords = _stopwords_from(config.stopwords)
    preds, truth = [], []
    for item in labeled:
        seq = clean_and_tokenize(item.record, stopwords)
        if not seq.tokens:
            continue
        preds.append(predict(model, seq))
        truth.append(item)
    report = evaluate(preds, truth)
    _write_eval_report(report, config.out_dir / "eval_report.csv")
    _write_predictions(preds, config.out_dir / "predictions.csv")
    print(
        "evaluate: n=%d accuracy=%.4f precision=%.4f recall=%.4f f1=%.4f -> %s"
        % (
            report.n,
            report.accuracy,
            report.headline_precision,
            report.headline_recall,
            report.headline_f1,
            config.out_dir / "eval_report.csv",
        )
    )
    return 0


def _baseline_reports(
    train_pairs, test_pairs, mode: str, seed: int, args
) -> dict[str, EvalReport]:
    """Train TF-IDF baselines on one split; SVM only runs two-class."""
    train_seqs = [seq for seq, _ in train_pairs]
    y_train = [lab for _, lab in train_pairs]
    vocab = build_vocab(train_seqs, min_count=args.min_count)
    vec = fit_tfidf(train_seqs, vocab, sublinear_tf=args.sublinear)
    x_train = transform_matrix(vec, train_seqs)
    x_test = transform_matrix(vec, [seq for seq, _ in test_pairs])
    truth = [
        LabeledRecord(record=_StubRecord(seq.source_record_id), label=lab, annotator_id="cli")
        for seq, lab in test_pairs
    ]

    reports: dict[str, EvalReport] = {}
    maxent = train_maxent(
        x_train, y_train, epochs=args.maxent_epochs, lr=args.maxent_lr, seed=seed
    )
    preds = [
        _Pred(seq.source_record_id, maxent_label(maxent, x_test[i]))
        for i, (seq, _) in enumerate(test_pairs)
    ]
    reports["maxent"] = evaluate(preds, truth)

    forest = train_forest(
        x_train,
        y_train,
        ForestConfig(n_trees=args.trees, max_depth=args.depth, seed=seed),
    )
    preds = [
        _Pred(seq.source_record_id, predict_forest(forest, x_test[i])[0])
        for i, (seq, _) in enumerate(test_pairs)
    ]
    reports["random_forest"] = evaluate(preds, truth)

    if mode == "two_class_threshold":
        svm = train_svm(
            x_train, y_train, lam=args.svm_lambda, epochs=args.svm_epochs, seed=seed
        )
        preds = [
            _Pred(seq.source_record_id, predict_svm(svm, x_test[i])[0])
            for i, (seq, _) in enumerate(test_pairs)
        ]
        reports["svm"] = evaluate(preds, truth)
    return reports


class _StubRecord:
    """Carries just the id; evaluate() never touches other record fields."""

    __slots__ = ("id",)

    def __init__(self, id):
        self.id = id


def _cmd_baselines(args) -> int:
    config = PipelineConfig(
        corpus=args.records,
        labels=args.labels,
        stopwords=args.stopwords,
        out_dir=args.out,
        mode=args.mode,
        seed=args.seed,
    )
    labeled, _ = _load_labeled(config.corpus, config.labels, args.annotator)
    labeled = _filter_mode(labeled, config.mode)
    train_set, test_set = _split(labeled, args.train_fraction, config.seed)
    stopwords = _stopwords_from(config.stopwords)
    reports = _baseline_reports(
        _pairs(train_set, stopwords),
        _pairs(test_set, stopwords),
        config.mode,
        config.seed,
        args,
    )
    table = comparison_table(reports)
    out_path = config.out_dir / "baselines.csv"
    _write_text(out_path, table.to_csv())
    summary = " ".join(
        "%s=%.4f" % (name, reports[name].accuracy) for name in sorted(reports)
    )
    print(f"baselines: accuracy {summary} -> {out_path}")
    return 0


def _cmd_compare(args) -> int:
    # the four-way table is the two-class experiment by construction
    config = PipelineConfig(
        corpus=args.records,
        labels=args.labels,
        stopwords=args.stopwords,
        out_dir=args.out,
        seed=args.seed,
    )
    labeled = _filter_mode(
        _load_labeled(config.corpus, config.labels, args.annotator)[0],
        "two_class_threshold",
    )
    train_set, test_set = _split(labeled, args.train_fraction, config.seed)
    stopwords = _stopwords_from(config.stopwords)
    train_pairs = _pairs(train_set, stopwords)
    test_pairs = _pairs(test_set, stopwords)

    reports = _baseline_reports(
        train_pairs, test_pairs, "two_class_threshold", config.seed, args
    )
    vocab = build_vocab([seq for seq, _ in train_pairs], min_count=args.min_count)
    emb = train_embeddings(
        [seq for seq, _ in train_pairs],
        vocab,
        EmbedTrainConfig(
            dimension=args.dim,
            window=args.window,
            negatives=args.negatives,
            epochs=args.embed_epochs,
            alpha=args.alpha,
            seed=config.seed,
        ),
    )
    model = train_classifier(
        train_pairs,
        emb,
        vocab,
        ModelConfig(
            hidden=args.hidden,
            max_len=args.max_len,
            epochs=args.epochs,
            learning_rate=args.lr,
            clip=args.clip,
            seed=config.seed,
            mode="two_class_threshold",
        ),
    )
    reports["lstm"] = _evaluate_lstm(model, test_set, stopwords)

    table = comparison_table(reports)
    csv_path = config.out_dir / "comparison.csv"
    _write_text(csv_path, table.to_csv())
    _write_text(config.out_dir / "comparison.txt", table.to_text())
    best = table.rows[0]
    print(
        "compare: %d models, best %s (precision %.2f) -> %s"
        % (len(table.rows), best.name, 100 * best.precision, csv_path)
    )
    return 0


def _cmd_sweep(args) -> int:
    model_config = ModelConfig(
        hidden=args.hidden,
        max_len=args.max_len,
        epochs=args.epochs,
        learning_rate=args.lr,
        clip=args.clip,
        seed=args.seed,
        mode=args.mode,
    )
    config = PipelineConfig(
        corpus=args.records,
        labels=args.labels,
        stopwords=args.stopwords,
        out_dir=args.out,
        model=model_config,
        mode=args.mode,
        seed=args.seed,
    )
    ratios = _parse_ratios(args.ratios)
    labeled, _ = _load_labeled(config.corpus, config.labels, args.annotator)
    labeled = _filter_mode(labeled, config.mode)
    stopwords = _stopwords_from(config.stopwords)
    # embeddings come from the full corpus; the sweep varies only the split
    all_pairs = _pairs(labeled, stopwords)
    vocab = build_vocab([seq for seq, _ in all_pairs], min_count=args.min_count)
    emb = train_embeddings(
        [seq for seq, _ in all_pairs],
        vocab,
        EmbedTrainConfig(
            dimension=args.dim,
            window=args.window,
            negatives=args.negatives,
            epochs=args.embed_epochs,
            alpha=args.alpha,
            seed=config.seed,
        ),
    )
    points = sweep_splits(labeled, ratios, emb, vocab, model_config, stopwords)
    lines = ["ratio,accuracy,n_train,n_test,warning"]
    for p in points:
        lines.append(
            "%.6f,%s,%d,%d,%s"
            % (
                p.ratio,
                "" if p.accuracy is None else "%.6f" % p.accuracy,
                p.n_train,
                p.n_test,
                p.warning or "",
            )
        )
    out_path = config.out_dir / "sweep.csv"
    _write_text(out_path, "\n".join(lines) + "\n")
    print(f"sweep: {len(points)} ratios -> {out_path}")
    return 0


def _cmd_msecurve(args) -> int:
    config = PipelineConfig(
        corpus=args.records,
        labels=args.labels,
        stopwords=args.stopwords,
        out_dir=args.out,
    )
    emb, vocab = load_embeddings(_require_exists(args.embeddings, "embeddings"))
    model = load_model(_require_exists(args.model, "model"), emb, vocab)
    labeled, _ = _load_labeled(config.corpus, config.labels, args.annotator)
    labeled = _filter_mode(labeled, "two_class_threshold")
    if args.ids is not None:
        labeled = _ids_subset(labeled, args.ids)
    rows = mse_curve(model, _pairs(labeled, _stopwords_from(config.stopwords)))
    lines = ["record_id,score,squared_error"]
    for rid, score, err in rows:
        lines.append("%s,%.17g,%.17g" % (rid, score, err))
    out_path = config.out_dir / "mse_curve.csv"
    _write_text(out_path, "\n".join(lines) + "\n")
    mean = sum(r[2] for r in rows) / len(rows) if rows else 0.0
    print(f"msecurve: {len(rows)} records, mean squared error {mean:.4f} -> {out_path}")
    return 0


def _cmd_trends(args) -> int:
    config = PipelineConfig(
        corpus=args.records, labels=args.labels, out_dir=args.out
    )
    labeled, _ = _load_labeled(config.corpus, config.labels, args.annotator)
    points = radical_timeline(labeled)
    csv_path = config.out_dir / "timeline.csv"
    svg_path = config.out_dir / "timeline.svg"
    warning = render_timeline(points, csv_path, svg_path)
    if warning is not None:
        print(f"trends: {warning}")
        return 0
    total = sum(p.radical_count for p in points)
    print(f"trends: {len(points)} points, {total} radical records -> {csv_path}, {svg_path}")
    return 0


def _cmd_gradcheck(args) -> int:
    config = PipelineConfig(out_dir=args.out) if args.out is not None else None
    model_config = ModelConfig(hidden=args.hidden, mode=args.mode)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise ValidationError("--seeds must list at least one integer")
    lines = []
    worst = 0.0
    for seed in seeds:
        err = gradient_check(model_config, seed=seed, epsilon=args.epsilon)
        worst = max(worst, err)
        lines.append("seed=%d max_rel_err=%.17g" % (seed, err))
    passed = worst < args.tolerance
    lines.append(
        "overall=%.17g tolerance=%.17g %s"
        % (worst, args.tolerance, "PASS" if passed else "FAIL")
    )
    if config is not None:
        _write_text(config.out_dir / "gradcheck.txt", "\n".join(lines) + "\n")
    print(
        "gradcheck: %d seeds, worst %.3g (tolerance %.3g) %s"
        % (len(seeds), worst, args.tolerance, "PASS" if passed else "FAIL")
    )
    if not passed:
        print(
            "gradcheck: analytic gradients diverge from central differences",
            file=sys.stderr,
        )
        return 1
    return 0


def _cmd_serve(args) -> int:
    records = _read_records(args.records)
    state = AnnotationState(records, args.log, seed=args.seed)
    static_dir = None
    if args.static is not None:
        static_dir = _require_exists(args.static, "static")
    print(
        f"serve: {len(records)} records, log {args.log}, "
        f"http://{args.host}:{args.port}/ (Ctrl-C stops)"
    )
    try:
        run_service(state, host=args.host, port=args.port, static_dir=static_dir)
    except KeyboardInterrupt:
        pass
    return 0


# ------------------------------------------------------------------ parser


def _parse_proportions(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise ValidationError("--proportions needs three comma-separated numbers")
    return tuple(float(p) for p in parts)


def _parse_ratios(text: str) -> list[float]:
    ratios = [float(p) for p in text.split(",") if p.strip()]
    if not ratios:
        raise ValidationError("--ratios must list at least one number")
    return ratios


def _add_out(sub, required=True, default="out"):
    sub.add_argument("--out", default=default if required else None, help="output directory")


def _add_labeled_inputs(sub):
    sub.add_argument("--records", required=True, help="records JSONL file")
    sub.add_argument("--labels", required=True, help="label log CSV")
    sub.add_argument("--annotator", default=None, help="annotator id to read labels from")
    sub.add_argument("--stopwords", default=None, help="stopword file (default built-in)")


def _add_embed_flags(sub):
    sub.add_argument("--dim", type=int, default=32)
    sub.add_argument("--window", type=int, default=4)
    sub.add_argument("--negatives", type=int, default=5)
    sub.add_argument("--embed-epochs", type=int, default=5)
    sub.add_argument("--alpha", type=float, default=0.025)
    sub.add_argument("--min-count", type=int, default=1)


def _add_model_flags(sub):
    sub.add_argument("--hidden", type=int, default=32)
    sub.add_argument("--max-len", type=int, default=200)
    sub.add_argument("--epochs", type=int, default=20)
    sub.add_argument("--lr", type=float, default=0.5)
    sub.add_argument("--clip", type=float, default=5.0)


def _add_baseline_flags(sub):
    sub.add_argument("--sublinear", action="store_true", help="1+log term frequency")
    sub.add_argument("--maxent-epochs", type=int, default=100)
    sub.add_argument("--maxent-lr", type=float, default=0.1)
    sub.add_argument("--svm-lambda", type=float, default=1e-3)
    sub.add_argument("--svm-epochs", type=int, default=100)
    sub.add_argument("--trees", type=int, default=50)
    sub.add_argument("--depth", type=int, default=10)
    if not any(a.dest == "min_count" for a in sub._actions):
        sub.add_argument("--min-count", type=int, default=1)


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--config", default=None, help="key=value config file; flags win")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="radtext",
        description="Radical-text detection pipeline: corpus, agreement, "
        "embeddings, LSTM classifier, baselines, trends, annotation service.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def sub(name, help, fn):
        sp = subs.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        _add_common(sp)
        registry[name] = sp
        return sp

    sp = sub("ingest", "read raw records, drop empty bodies", _cmd_ingest)
    sp.add_argument("--input", required=True)
    sp.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    _add_out(sp)

    sp = sub("clean", "tokenize records with stopword removal", _cmd_clean)
    sp.add_argument("--records", required=True)
    sp.add_argument("--stopwords", default=None)
    _add_out(sp)

    sp = sub("kappa", "inter-annotator agreement between two label files", _cmd_kappa)
    sp.add_argument("--labels-a", required=True)
    sp.add_argument("--labels-b", required=True)
    _add_out(sp, required=False)

    sp = sub("adjudicate", "merge two annotators into gold labels", _cmd_adjudicate)
    sp.add_argument("--records", required=True)
    sp.add_argument("--labels", required=True, help="two-annotator label log")
    sp.add_argument(
        "--policy",
        choices=("drop_disagreements", "prefer_annotator"),
        default="drop_disagreements",
    )
    sp.add_argument("--prefer", default=None, help="annotator id for prefer_annotator")
    _add_out(sp)

    sp = sub("synth", "generate a synthetic labeled corpus", _cmd_synth)
    sp.add_argument("--n", type=int, default=300)
    sp.add_argument("--mean-length", type=int, default=60)
    sp.add_argument("--injection-rate", type=float, default=0.2)
    sp.add_argument("--proportions", default="0.4,0.4,0.2")
    sp.add_argument("--disagreement-rate", type=float, default=0.1)
    _add_out(sp)

    sp = sub("train", "train embeddings plus the LSTM classifier", _cmd_train)
    _add_labeled_inputs(sp)
    sp.add_argument("--train-fraction", type=float, default=0.8)
    sp.add_argument("--mode", choices=MODES, default="two_class_threshold")
    _add_embed_flags(sp)
    _add_model_flags(sp)
    _add_out(sp)

    sp = sub("baselines", "train TF-IDF baselines on one split", _cmd_baselines)
    _add_labeled_inputs(sp)
    sp.add_argument("--train-fraction", type=float, default=0.8)
    sp.add_argument("--mode", choices=MODES, default="two_class_threshold")
    _add_baseline_flags(sp)
    _add_out(sp)

    sp = sub("evaluate", "score a saved model against labels", _cmd_evaluate)
    _add_labeled_inputs(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--ids", default=None, help="file of record ids to evaluate")
    _add_out(sp)

    sp = sub("compare", "four-way model comparison table", _cmd_compare)
    _add_labeled_inputs(sp)
    sp.add_argument("--train-fraction", type=float, default=0.8)
    _add_embed_flags(sp)
    _add_model_flags(sp)
    _add_baseline_flags(sp)
    _add_out(sp)

    sp = sub("sweep", "accuracy across train/test ratios", _cmd_sweep)
    _add_labeled_inputs(sp)
    sp.add_argument("--ratios", default="0.5,0.6,0.7,0.8,0.9")
    sp.add_argument("--mode", choices=MODES, default="two_class_threshold")
    _add_embed_flags(sp)
    _add_model_flags(sp)
    _add_out(sp)

    sp = sub("msecurve", "per-record squared error of a 2-class model", _cmd_msecurve)
    _add_labeled_inputs(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--ids", default=None)
    _add_out(sp)

    sp = sub("trends", "radical counts per source and year", _cmd_trends)
    sp.add_argument("--records", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--annotator", default=None)
    _add_out(sp)

    sp = sub("gradcheck", "compare analytic LSTM gradients to finite differences", _cmd_gradcheck)
    sp.add_argument("--hidden", type=int, default=4)
    sp.add_argument("--mode", choices=MODES, default="two_class_threshold")
    sp.add_argument("--seeds", default="7", help="comma-separated seeds")
    sp.add_argument("--epsilon", type=float, default=1e-5)
    sp.add_argument("--tolerance", type=float, default=1e-4)
    _add_out(sp, required=False)

    sp = sub("serve", "run the annotation service", _cmd_serve)
    sp.add_argument("--records", required=True)
    sp.add_argument("--log", required=True, help="append-only label log path")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8731)
    sp.add_argument("--static", default=None, help="directory with the console UI")

    return parser, registry


def _read_config_file(path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    with open(_require_exists(path, "config"), encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected key=value", line=lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ParseError("empty key", line=lineno)
            pairs[key] = value
    return pairs


_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _config_argv(sub: argparse.ArgumentParser, pairs: dict[str, str]) -> list[str]:
    """Turn config pairs into flags, validated against the subcommand."""
    by_dest = {}
    for action in sub._actions:
        if action.dest in ("help", "config", "fn") or not action.option_strings:
            continue
        by_dest[action.dest] = action
    argv: list[str] = []
    for key, value in pairs.items():
        dest = key.replace("-", "_")
        if dest not in by_dest:
            raise ValidationError(f"unknown config key {key!r} for this subcommand")
        action = by_dest[dest]
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            low = value.lower()
            if low in _TRUE:
                argv.append(flag)
            elif low not in _FALSE:
                raise ValidationError(f"config key {key!r} needs a boolean, got {value!r}")
        else:
            argv.extend([flag, value])
    return argv


def run_command(argv: list[str]) -> int:
    parser, registry = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config is not None:
            extra = _config_argv(registry[args.command], _read_config_file(args.config))
            # config flags go first so explicit flags override them
            args = parser.parse_args([args.command, *extra, *argv[1:]])
    except SystemExit as exc:
        return int(exc.code or 0)
    except RadtextError as exc:
        print(f"radtext: error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except RadtextError as exc:
        print(f"radtext {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"radtext {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> None:
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
