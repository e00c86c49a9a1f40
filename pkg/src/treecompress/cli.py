"""Command-line entry point.

Subcommands: align, train, gridsearch, eval, compress, gradcheck.
Exit codes: 0 success, 1 operational failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import metrics
from .encoding import (
    NodeEncoder,
    build_vocab,
    load_embeddings,
    random_embeddings,
)
from .labeling import NotASubsequenceError, align_compression, apply_mask
from .model import BINARY, VECTORIAL, predict_mask
from .ptb import (
    CorpusRecord,
    PtbError,
    leaf_tokens,
    load_corpus,
    parse_bracketed,
    serialize_bracketed,
    write_corpus,
)
from .training import (
    DivergedLossError,
    FingerprintMismatchError,
    TrainingConfig,
    TrainingError,
    backward,
    check_fingerprint,
    evaluate_examples,
    finite_difference_grads,
    grid_search,
    history_csv,
    load_checkpoint,
    prepare_examples,
    save_checkpoint,
    train,
    unfold,
)
from .synthetic import random_parse_tree

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

TRAINING_KEYS = {
    "hidden_size": int,
    "head": str,
    "learning_rate": float,
    "l2": float,
    "max_epochs": int,
    "patience": int,
    "batch_size": int,
    "seed": int,
    "threshold": float,
    "forget_bias": float,
    "embedding_dim": int,
}


def read_config_file(path) -> dict:
    """Flat ``key = value`` config file; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


def resolve_training_config(args) -> TrainingConfig:
    """File values first, then command-line flags override."""
    values: dict = {}
    if getattr(args, "config", None):
        raw = read_config_file(args.config)
        for key, sval in raw.items():
            if key in TRAINING_KEYS:
                values[key] = TRAINING_KEYS[key](sval)
    for key in TRAINING_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return TrainingConfig(**values)


def build_encoder(records, args, config: TrainingConfig) -> NodeEncoder:
    vocab = build_vocab(records)
    if getattr(args, "embeddings", None):
        table = load_embeddings(args.embeddings, vocab)
    else:
        dim = config.embedding_dim or max(len(vocab.pos_tags), 1)
        table = random_embeddings(vocab, dim, config.seed)
    return NodeEncoder(vocab, table)


def write_run_outputs(out_dir: Path, config: TrainingConfig, args_echo: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    echo = {"config": asdict(config), **args_echo}
    lines = [f"{k} = {v}" for k, v in sorted(_flatten(echo).items())]
    (out_dir / "config.echo").write_text("\n".join(lines) + "\n")


def _flatten(obj, prefix=""):
    flat = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def cmd_align(args) -> int:
    records = load_corpus(args.input)
    out, rejects = [], []
    for r in records:
        if r.keep_mask is not None:
            out.append(r)
            continue
        try:
            mask = align_compression(r.source_tokens, r.compressed_tokens)
        except NotASubsequenceError as e:
            if args.strict:
                print(f"error: record {r.id}: {e}", file=sys.stderr)
                return EXIT_USAGE
            rejects.append(r)
            continue
        out.append(
            CorpusRecord(
                id=r.id, tree_text=r.tree_text, keep_mask=mask, annotator=r.annotator
            )
        )
    write_corpus(out, args.output)
    if args.rejects and rejects:
        write_corpus(rejects, args.rejects)
    print(f"aligned {len(out)} record(s), {len(rejects)} rejected")
    return EXIT_OK


def _load_splits(args):
    for path in (args.train, args.val):
        if not Path(path).exists():
            print(f"error: corpus file not found: {path}", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
    return load_corpus(args.train), load_corpus(args.val)


def _finish_run(out_dir, params, config, encoder, history, val_report):
    (out_dir / "history.csv").write_text(history_csv(history))
    save_checkpoint(
        out_dir / "checkpoint.bin", params, config, encoder.vocab, encoder.table
    )
    _write_report(out_dir, val_report, config.hidden_size)


def _write_report(out_dir, report, hidden_size, corpus_name="validation"):
    (out_dir / "report.json").write_text(report.to_json() + "\n")
    row = {
        "corpus": corpus_name,
        "hidden_size": hidden_size,
        "accuracy": report.accuracy,
        "compression_rate": report.compression_rate,
        "gold_compression_rate": report.gold_compression_rate,
        "f1": report.f1,
        "t": report.t,
    }
    (out_dir / "report.txt").write_text(metrics.format_report_table([row]))
    (out_dir / "histogram.csv").write_text(metrics.histogram_csv(report.histogram()))


def cmd_train(args) -> int:
    config = resolve_training_config(args)
    train_recs, val_recs = _load_splits(args)
    encoder = build_encoder(train_recs + val_recs, args, config)
    out_dir = Path(args.out)
    write_run_outputs(out_dir, config, {"train": args.train, "val": args.val})
    params, history = train(train_recs, val_recs, encoder, config)
    report = evaluate_examples(
        prepare_examples(val_recs, encoder),
        params,
        threshold=config.threshold,
        table=encoder.table if config.head == VECTORIAL else None,
    )
    _finish_run(out_dir, params, config, encoder, history, report)
    print(
        f"trained d_h={config.hidden_size}: val accuracy {report.accuracy:.4f}, "
        f"compression {report.compression_rate:.4f}, t {report.t:.4f}"
    )
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    config = resolve_training_config(args)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    train_recs, val_recs = _load_splits(args)
    encoder = build_encoder(train_recs + val_recs, args, config)
    out_dir = Path(args.out)
    write_run_outputs(
        out_dir, config, {"train": args.train, "val": args.val, "sizes": sizes}
    )
    rows, best_size, best_params = grid_search(
        train_recs, val_recs, encoder, config, sizes
    )
    for row in rows:
        row["corpus"] = "validation" + (" *" if row["hidden_size"] == best_size else "")
    (out_dir / "gridsearch.txt").write_text(
        metrics.format_report_table(rows, title="Grid search (* marks best)")
    )
    (out_dir / "gridsearch.json").write_text(json.dumps(rows, indent=2) + "\n")
    best_config = TrainingConfig(**{**asdict(config), "hidden_size": best_size})
    save_checkpoint(
        out_dir / "checkpoint.bin", best_params, best_config, encoder.vocab,
        encoder.table,
    )
    print(f"best hidden size: {best_size}")
    return EXIT_OK


def cmd_eval(args) -> int:
    params, config, vocab, table = load_checkpoint(args.checkpoint)
    records = load_corpus(args.corpus)
    corpus_vocab = build_vocab(records)
    try:
        if not check_fingerprint(corpus_vocab, vocab.fingerprint(), strict=args.strict):
            print(
                "warning: corpus vocabulary differs from checkpoint vocabulary",
                file=sys.stderr,
            )
    except FingerprintMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    encoder = NodeEncoder(vocab, table)
    out_dir = Path(args.out)
    write_run_outputs(out_dir, config, {"corpus": args.corpus})

    if args.seeds and args.seeds > 1:
        if not (args.train and args.val):
            print(
                "error: --seeds needs --train and --val corpora for re-training",
                file=sys.stderr,
            )
            return EXIT_USAGE
        train_recs, val_recs = load_corpus(args.train), load_corpus(args.val)
        reports = []
        for k in range(args.seeds):
            cfg = TrainingConfig(**{**asdict(config), "seed": config.seed + k})
            run_params, _ = train(train_recs, val_recs, encoder, cfg)
            reports.append(_eval_on(records, encoder, run_params, cfg))
        report = _mean_report(reports)
    else:
        report = _eval_on(records, encoder, params, config)
    _write_report(out_dir, report, config.hidden_size, corpus_name=Path(args.corpus).stem)
    print(
        f"accuracy {report.accuracy:.4f}, compression {report.compression_rate:.4f} "
        f"(gold {report.gold_compression_rate:.4f}), f1 {report.f1:.4f}, "
        f"t {report.t:.4f}"
    )
    return EXIT_OK


def _eval_on(records, encoder, params, config):
    return evaluate_examples(
        prepare_examples(records, encoder),
        params,
        threshold=config.threshold,
        table=encoder.table if config.head == VECTORIAL else None,
    )


def _mean_report(reports):
    n = len(reports)
    per_sentence = [
        sum(r.per_sentence_accuracies[i] for r in reports) / n
        for i in range(len(reports[0].per_sentence_accuracies))
    ]
    acc = sum(r.accuracy for r in reports) / n
    comp = sum(r.compression_rate for r in reports) / n
    return metrics.MetricsReport(
        accuracy=acc,
        compression_rate=comp,
        gold_compression_rate=sum(r.gold_compression_rate for r in reports) / n,
        f1=sum(r.f1 for r in reports) / n,
        t=metrics.tradeoff_t(acc, comp) if comp > 0 else 0.0,
        per_sentence_accuracies=per_sentence,
    )


def cmd_compress(args) -> int:
    params, config, vocab, table = load_checkpoint(args.checkpoint)
    encoder = NodeEncoder(vocab, table)
    lines = (
        sys.stdin.read().splitlines()
        if args.input == "-"
        else Path(args.input).read_text(encoding="utf-8").splitlines()
    )
    failures = 0
    successes = 0
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            tree = parse_bracketed(line)
        except PtbError as e:
            print(f"line {lineno}: parse error: {e}", file=sys.stderr)
            failures += 1
            continue
        if len(tree) == 1:
            print(
                f"line {lineno}: degenerate single-node tree", file=sys.stderr
            )
        encodings = encoder.encode_tree(tree)
        mask = predict_mask(
            tree,
            encodings,
            params,
            threshold=config.threshold,
            table=table if params.head.kind == VECTORIAL else None,
        )
        kept = [w for w, b in zip(leaf_tokens(tree), mask) if b]
        print(" ".join(kept))
        if args.tree:
            print(serialize_bracketed(apply_mask(tree, mask)))
        successes += 1
    if failures:
        print(f"{failures} input line(s) failed to parse", file=sys.stderr)
    return EXIT_FAILURE if failures and not successes else EXIT_OK


def cmd_gradcheck(args) -> int:
    from .encoding import build_vocab as bv

    rng = np.random.default_rng(args.seed)
    worst: dict[str, float] = {}
    for k in range(args.trees):
        head = BINARY if k % 2 == 0 else VECTORIAL
        lam = 0.0 if k % 4 < 2 else 1e-4
        tree = random_parse_tree(rng, max_depth=4, max_children=3)
        vocab = bv([tree])
        table = random_embeddings(vocab, 4, args.seed)
        encoder = NodeEncoder(vocab, table)
        from .model import init_parameters

        params = init_parameters(
            encoder.d_in,
            args.hidden_size,
            head,
            d_out=table.dimension,
            seed=int(rng.integers(1 << 31)),
        )
        mask = [int(rng.integers(2)) for _ in tree.leaves()]
        X = encoder.encode_tree(tree)
        states = unfold(tree, X, params)
        analytic = backward(tree, X, states, mask, params, table, lam)
        if args.corrupt:
            analytic["cell.w.r"] = analytic["cell.w.r"] + 0.5
        numeric = finite_difference_grads(tree, X, mask, params, table, lam)
        for name in analytic:
            num = np.max(np.abs(analytic[name] - numeric[name]))
            den = max(
                np.max(np.abs(analytic[name])), np.max(np.abs(numeric[name])), 1e-8
            )
            err = num / den
            worst[name] = max(worst.get(name, 0.0), err)
    ok = True
    for name in sorted(worst):
        status = "ok" if worst[name] < 1e-4 else "FAIL"
        if status == "FAIL":
            ok = False
        print(f"{name}: max relative error {worst[name]:.3e} [{status}]")
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecompress",
        description="Extractive sentence compression over constituency parse trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="convert compressed-token records to keep masks")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--rejects", help="file for non-subsequence records")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_align)

    def add_training_flags(p):
        p.add_argument("--train", required=True)
        p.add_argument("--val", required=True)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--embeddings", help="plain-text embedding file")
        p.add_argument("--hidden-size", dest="hidden_size", type=int)
        p.add_argument("--head", choices=[BINARY, VECTORIAL])
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--l2", type=float)
        p.add_argument("--max-epochs", dest="max_epochs", type=int)
        p.add_argument("--patience", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--forget-bias", dest="forget_bias", type=float)
        p.add_argument("--embedding-dim", dest="embedding_dim", type=int)

    p = sub.add_parser("train", help="train one model")
    add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gridsearch", help="train over a set of hidden sizes")
    add_training_flags(p)
    p.add_argument("--sizes", required=True, help="comma-separated hidden sizes")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, help="average this many re-trainings")
    p.add_argument("--train")
    p.add_argument("--val")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compress", help="compress bracketed trees")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("input", help="file of bracketed trees, or '-' for stdin")
    p.add_argument("--tree", action="store_true", help="also print pruned trees")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--hidden-size", dest="hidden_size", type=int, default=4)
    p.add_argument("--trees", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_FAILURE
    except (TrainingError, DivergedLossError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
