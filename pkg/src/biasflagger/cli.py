"""Command-line orchestration of the pipeline: ingest, build-dataset, train,
evaluate, flag, serve, export-labels.

Config is a flat key=value text file; the BIAS_FLAGGER_HOME environment
variable sets the default data directory.
"""

from __future__ import annotations

import argparse
import json
import os
import pickle
import sys
from pathlib import Path

from . import dataset as ds
from . import evaluation as ev
from .corpus import corpus_stats, ingest_annotations, ingest_documents
from .features import FeaturizerConfig
from .labeling import ALL_TASKS, GENERAL_TASK, BiasType, write_labeled
from .lexicon import default_lexicon, load_lexicon
from .model import Hyperparams, load_model, save_model, score_examples, train, train_baseline
from .service import QueueStore, export_labels, flag_document, serve

DEFAULT_HOME = "~/.biasflagger"


def load_config(path: str | None) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment."""
    if not path:
        return {}
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def home_dir(args) -> Path:
    home = args.home or os.environ.get("BIAS_FLAGGER_HOME") or DEFAULT_HOME
    path = Path(home).expanduser()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _lexicon(args):
    if getattr(args, "lexicon", None):
        with open(args.lexicon, encoding="utf-8") as fh:
            return load_lexicon(fh)
    return default_lexicon()


def _featurizer(cfg: dict[str, str]) -> FeaturizerConfig:
    kwargs = {}
    for key in ("n_buckets", "word_ngram_max", "char_ngram_min", "char_ngram_max",
                "embed_dim", "hash_seed"):
        if key in cfg:
            kwargs[key] = int(cfg[key])
    return FeaturizerConfig(**kwargs)


def _hyperparams(args, cfg: dict[str, str]) -> Hyperparams:
    lr = float(cfg.get("learning_rate", 1e-3))
    if cfg.get("preset") == "paper":
        lr = 4e-5
    return Hyperparams(
        epochs=int(cfg.get("epochs", 10)),
        learning_rate=lr,
        batch_size=int(cfg.get("batch_size", 32)),
        threshold=float(cfg.get("threshold", 0.5)),
        seed=args.seed,
    )


def _load_corpus(args):
    with open(args.annotations, encoding="utf-8") as fh:
        quotes = ingest_annotations(fh)
    with open(args.documents, encoding="utf-8") as fh:
        pages = ingest_documents(fh)
    return ds.assemble_corpus(quotes, pages, _lexicon(args)), quotes, pages


HIGH_RECALL_THRESHOLD = 0.3  # wide-net preset; false positives go to review


def _threshold(args) -> float:
    return HIGH_RECALL_THRESHOLD if getattr(args, "high_recall", False) else args.threshold


def cmd_ingest(args) -> int:
    corpus, quotes, pages = _load_corpus(args)
    out = home_dir(args) / "corpus.pickle"
    with out.open("wb") as fh:
        pickle.dump(corpus, fh)
    stats = corpus_stats(pages, quotes, corpus.xn)
    print(json.dumps({
        "files": stats.n_files, "pages": stats.n_pages,
        "annotated": stats.n_annotated, "annotated_positive": stats.n_annotated_pos,
        "annotated_negative": stats.n_annotated_neg, "extracted_negative": stats.n_extracted_neg,
        "corpus": str(out),
    }, indent=2))
    return 0


def _read_corpus(args) -> ds.LabeledCorpus:
    path = home_dir(args) / "corpus.pickle"
    if not path.exists():
        raise SystemExit(f"no ingested corpus at {path}; run 'ingest' first")
    with path.open("rb") as fh:
        return pickle.load(fh)


def _make_dataset(corpus, task: str, variation: ds.VariationKind) -> ds.Dataset:
    if task == GENERAL_TASK:
        return ds.mtl_dataset(corpus, variation)
    return ds.task_dataset(BiasType(task), corpus, variation)


def cmd_build_dataset(args) -> int:
    corpus = _read_corpus(args)
    variation = ds.VariationKind(args.variation)
    data = _make_dataset(corpus, args.task, variation)
    folds = ds.stratified_kfold(data, K=args.folds, seed=args.seed)
    base = home_dir(args) / f"dataset_{args.task}_{variation.value}"
    with open(f"{base}.jsonl", "w", encoding="utf-8") as fh:
        write_labeled((ex.example for ex in data.examples), fh)
    with open(f"{base}.folds.jsonl", "w", encoding="utf-8") as fh:
        ds.write_folds(folds, fh)
    with open(f"{base}.pickle", "wb") as fh:
        pickle.dump((data, folds), fh)
    print(json.dumps({
        "task": args.task, "variation": variation.value,
        "examples": len(data.examples), "positives": len(data.positives()),
        "files": [f"{base}.jsonl", f"{base}.folds.jsonl"],
    }, indent=2))
    return 0


def _read_dataset(args, task: str, variation: ds.VariationKind):
    base = home_dir(args) / f"dataset_{task}_{variation.value}.pickle"
    if not base.exists():
        raise SystemExit(f"no dataset at {base}; run 'build-dataset' first")
    with base.open("rb") as fh:
        return pickle.load(fh)


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    variation = ds.VariationKind(args.variation)
    task = args.task if args.arch == "binary" else GENERAL_TASK
    data, folds = _read_dataset(args, task, variation)
    if folds.K != args.folds:
        raise SystemExit(
            f"dataset was built with {folds.K} folds; rerun 'build-dataset' for --folds {args.folds}"
        )
    arch = "mtl" if args.arch == "mtl" else f"binary-{args.task}"
    hp = _hyperparams(args, cfg)
    fconfig = _featurizer(cfg)
    if args.arch == "baseline":
        runs = train_baseline(data, folds, hp, fconfig)
        arch = "baseline"
    else:
        runs = train(data, folds, arch, hp, fconfig)
    out_dir = home_dir(args) / "models"
    out_dir.mkdir(exist_ok=True)
    paths = []
    for run in runs:
        path = out_dir / f"{arch}_{task}_{variation.value}_fold{run.fold}.bfm"
        with path.open("wb") as fh:
            save_model(run.model, fh)
        paths.append(str(path))
        last = run.history.records[-1]
        print(f"fold {run.fold}: train_loss={last.train_loss:.4f} "
              f"val_loss={'-' if last.val_loss is None else f'{last.val_loss:.4f}'}")
    print(json.dumps({"models": paths}, indent=2))
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    variation = ds.VariationKind(args.variation)
    task = args.task if args.arch == "binary" else GENERAL_TASK
    data, folds = _read_dataset(args, task, variation)
    arch = "baseline" if args.arch == "baseline" else ("mtl" if args.arch == "mtl" else f"binary-{args.task}")
    model_dir = home_dir(args) / "models"
    records, curves = [], {}
    for fold in range(folds.K):
        path = model_dir / f"{arch}_{task}_{variation.value}_fold{fold}.bfm"
        if not path.exists():
            raise SystemExit(f"missing model {path}; run 'train' first")
        with path.open("rb") as fh:
            model = load_model(fh)
        _, _, test = ds.fold_split(data, folds, fold)
        eval_task = args.task
        labels = [ex.task_label(eval_task) for ex in test]
        scores = score_examples(model, test, eval_task)
        preds = [int(s > float(cfg.get("threshold", 0.5))) for s in scores]
        rec = ev.metrics(ev.confusion(labels, preds), task=eval_task,
                         method=arch, variation=variation.value, fold=fold)
        curve, auc = ev.roc_auc(labels, scores)
        records.append(ev.MetricsRecord(**{**rec.__dict__, "auc": auc}))
        curves[f"{eval_task}_{arch}_{variation.value}_fold{fold}"] = curve
    agg = ev.aggregate_folds(records)
    dest = args.out or (home_dir(args) / "reports")
    written = ev.emit_report([agg], curves, dest)
    for name in ev.METRIC_NAMES:
        if name in agg.stats:
            mean, std, _ = agg.stats[name]
            print(f"{name}: mean={mean:.4f} std={'-' if std is None else f'{std:.4f}'}")
    print(json.dumps({"reports": [str(p) for p in written]}, indent=2))
    return 0


def cmd_flag(args) -> int:
    with open(args.model, "rb") as fh:
        model = load_model(fh)
    with open(args.documents, encoding="utf-8") as fh:
        pages = ingest_documents(fh)
    flags = flag_document(model, pages, _lexicon(args), threshold=_threshold(args))
    store = QueueStore(home_dir(args) / "queue")
    stored = store.add_flags(flags)
    store.close()
    print(json.dumps({"flagged": len(stored)}, indent=2))
    return 0


def cmd_serve(args) -> int:
    with open(args.model, "rb") as fh:
        model = load_model(fh)
    host, _, port = args.addr.rpartition(":")
    store = QueueStore(home_dir(args) / "queue")
    server = serve(
        store, model, _lexicon(args),
        addr=(host or "127.0.0.1", int(port)),
        threshold=_threshold(args),
        token=args.token,
        static_dir=args.static_dir,
    )
    print(f"listening on {server.server_address[0]}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        store.close()
    return 0


def cmd_export_labels(args) -> int:
    store = QueueStore(home_dir(args) / "queue")
    text = export_labels(store)
    store.close()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biasflagger")
    parser.add_argument("--home", help="data directory (default: $BIAS_FLAGGER_HOME)")
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest annotations and documents")
    p.add_argument("--annotations", required=True)
    p.add_argument("--documents", required=True)
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-dataset", help="assemble a task dataset and folds")
    p.add_argument("--variation", choices=[v.value for v in ds.VariationKind], default="an")
    p.add_argument("--task", choices=list(ALL_TASKS), default=GENERAL_TASK)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train per-fold models")
    p.add_argument("--arch", choices=["binary", "mtl", "baseline"], default="binary")
    p.add_argument("--task", choices=list(ALL_TASKS), default=GENERAL_TASK)
    p.add_argument("--variation", choices=[v.value for v in ds.VariationKind], default="an")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate trained models on test folds")
    p.add_argument("--arch", choices=["binary", "mtl", "baseline"], default="binary")
    p.add_argument("--task", choices=list(ALL_TASKS), default=GENERAL_TASK)
    p.add_argument("--variation", choices=[v.value for v in ds.VariationKind], default="an")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("flag", help="flag sentences in new documents")
    p.add_argument("--model", required=True)
    p.add_argument("--documents", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--high-recall", action="store_true",
                   help=f"use the wide-net threshold {HIGH_RECALL_THRESHOLD}")
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_flag)

    p = sub.add_parser("serve", help="run the review service")
    p.add_argument("--model", required=True)
    p.add_argument("--addr", default="127.0.0.1:8377")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--high-recall", action="store_true",
                   help=f"use the wide-net threshold {HIGH_RECALL_THRESHOLD}")
    p.add_argument("--token", help="static bearer token")
    p.add_argument("--static-dir", help="directory of UI assets to serve at /")
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-labels", help="export reviewed flags as labeled data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_labels)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
