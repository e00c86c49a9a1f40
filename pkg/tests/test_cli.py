import json

import numpy as np
import pytest

from treecompress.cli import main
from treecompress.ptb import CorpusRecord, load_corpus, write_corpus
from treecompress.synthetic import keep_rule_corpus

from conftest import GOLDEN_COMPRESSED, GOLDEN_MASK, GOLDEN_TEXT


@pytest.fixture
def corpus(tmp_path):
    rng = np.random.default_rng(0)
    records = keep_rule_corpus(rng, 8)
    path = tmp_path / "train.jsonl"
    write_corpus(records, path)
    return path


def run(args):
    return main([str(a) for a in args])


def test_align_golden_example(tmp_path):
    src = tmp_path / "raw.jsonl"
    out = tmp_path / "aligned.jsonl"
    write_corpus(
        [
            CorpusRecord(
                id="golden", tree_text=GOLDEN_TEXT, compressed_tokens=GOLDEN_COMPRESSED
            )
        ],
        src,
    )
    assert run(["align", "--input", src, "--output", out]) == 0
    [rec] = load_corpus(out)
    assert rec.keep_mask == GOLDEN_MASK


def test_align_passthrough_and_rejects(tmp_path):
    src = tmp_path / "raw.jsonl"
    out = tmp_path / "aligned.jsonl"
    rejects = tmp_path / "rejects.jsonl"
    write_corpus(
        [
            CorpusRecord(id="ok", tree_text="(A (B x) (C y))", keep_mask=[1, 0]),
            CorpusRecord(
                id="bad", tree_text="(A (B x) (C y))", compressed_tokens=["y", "x"]
            ),
        ],
        src,
    )
    assert run(["align", "--input", src, "--output", out, "--rejects", rejects]) == 0
    assert [r.id for r in load_corpus(out)] == ["ok"]
    assert [r.id for r in load_corpus(rejects)] == ["bad"]


def test_align_strict_exit_2(tmp_path):
    src = tmp_path / "raw.jsonl"
    write_corpus(
        [
            CorpusRecord(
                id="bad", tree_text="(A (B x) (C y))", compressed_tokens=["y", "x"]
            )
        ],
        src,
    )
    assert run(["align", "--input", src, "--output", src, "--strict"]) == 2


def test_train_writes_outputs(tmp_path, corpus):
    out = tmp_path / "run"
    code = run(
        [
            "train", "--train", corpus, "--val", corpus, "--out", out,
            "--hidden-size", 6, "--max-epochs", 3, "--seed", 1,
        ]
    )
    assert code == 0
    for name in (
        "config.echo", "checkpoint.bin", "history.csv",
        "report.json", "report.txt", "histogram.csv",
    ):
        assert (out / name).exists(), name
    history = (out / "history.csv").read_text().splitlines()
    assert history[0] == "epoch,train_loss,val_accuracy,val_compression,val_t"
    assert len(history) == 4


def test_train_missing_corpus_exit_2(tmp_path, corpus, capsys):
    code = run(
        [
            "train", "--train", corpus, "--val", tmp_path / "missing.jsonl",
            "--out", tmp_path / "o",
        ]
    )
    assert code == 2
    assert "missing.jsonl" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path, corpus):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("hidden_size = 4\nmax_epochs = 2\nseed = 9\n")
    out = tmp_path / "run"
    code = run(
        [
            "train", "--train", corpus, "--val", corpus, "--out", out,
            "--config", cfg, "--hidden-size", 5,
        ]
    )
    assert code == 0
    echo = (out / "config.echo").read_text()
    assert "config.hidden_size = 5" in echo  # flag wins
    assert "config.max_epochs = 2" in echo  # file value kept


def test_train_is_reproducible(tmp_path, corpus):
    args = [
        "train", "--train", corpus, "--val", corpus,
        "--hidden-size", 5, "--max-epochs", 3, "--seed", 7,
    ]
    assert run(args + ["--out", tmp_path / "a"]) == 0
    assert run(args + ["--out", tmp_path / "b"]) == 0
    assert (tmp_path / "a/history.csv").read_text() == (
        tmp_path / "b/history.csv"
    ).read_text()
    assert (tmp_path / "a/checkpoint.bin").read_bytes() == (
        tmp_path / "b/checkpoint.bin"
    ).read_bytes()


def test_gridsearch(tmp_path, corpus):
    out = tmp_path / "grid"
    code = run(
        [
            "gridsearch", "--train", corpus, "--val", corpus, "--out", out,
            "--sizes", "4,6", "--max-epochs", 2, "--seed", 1,
        ]
    )
    assert code == 0
    rows = json.loads((out / "gridsearch.json").read_text())
    assert [r["hidden_size"] for r in rows] == [4, 6]
    assert sum("*" in r["corpus"] for r in rows) == 1
    assert (out / "checkpoint.bin").exists()


def _train_checkpoint(tmp_path, corpus):
    out = tmp_path / "run"
    assert (
        run(
            [
                "train", "--train", corpus, "--val", corpus, "--out", out,
                "--hidden-size", 6, "--max-epochs", 3, "--seed", 1,
            ]
        )
        == 0
    )
    return out / "checkpoint.bin"


def test_eval(tmp_path, corpus):
    ckpt = _train_checkpoint(tmp_path, corpus)
    out = tmp_path / "eval"
    assert run(["eval", "--checkpoint", ckpt, "--corpus", corpus, "--out", out]) == 0
    report = json.loads((out / "report.json").read_text())
    assert {"accuracy", "compression_rate", "gold_compression_rate", "f1", "t"} <= set(
        report
    )
    hist = (out / "histogram.csv").read_text().strip().splitlines()[1:]
    counts = [int(line.split(",")[1]) for line in hist]
    assert sum(counts) == len(load_corpus(corpus))


def test_eval_fingerprint_warning(tmp_path, corpus, capsys):
    ckpt = _train_checkpoint(tmp_path, corpus)
    other = tmp_path / "other.jsonl"
    write_corpus(
        [CorpusRecord(id="n", tree_text="(S (NP newword))", keep_mask=[1])], other
    )
    out = tmp_path / "eval2"
    # vocabulary differs: warning without --strict, failure with it
    assert run(["eval", "--checkpoint", ckpt, "--corpus", other, "--out", out]) == 0
    assert "vocabulary" in capsys.readouterr().err
    assert (
        run(
            [
                "eval", "--checkpoint", ckpt, "--corpus", other, "--out", out,
                "--strict",
            ]
        )
        == 1
    )


def test_compress(tmp_path, corpus):
    ckpt = _train_checkpoint(tmp_path, corpus)
    trees = tmp_path / "trees.txt"
    records = load_corpus(corpus)
    trees.write_text(records[0].tree_text + "\n(oops\n")
    code = run(["compress", "--checkpoint", ckpt, trees, "--tree"])
    assert code == 0  # one success, one parse failure


def test_compress_all_fail(tmp_path, corpus):
    ckpt = _train_checkpoint(tmp_path, corpus)
    trees = tmp_path / "trees.txt"
    trees.write_text("(broken\n")
    assert run(["compress", "--checkpoint", ckpt, trees]) == 1


def test_gradcheck_default_passes(capsys):
    assert run(["gradcheck", "--trees", "4", "--hidden-size", "3"]) == 0
    assert "max relative error" in capsys.readouterr().out


def test_gradcheck_corrupted_fails():
    assert run(["gradcheck", "--trees", "2", "--hidden-size", "3", "--corrupt"]) == 1


def test_gradcheck_deterministic(capsys):
    run(["gradcheck", "--trees", "2", "--seed", "5"])
    first = capsys.readouterr().out
    run(["gradcheck", "--trees", "2", "--seed", "5"])
    assert capsys.readouterr().out == first


def test_usage_error_exit_2():
    assert run(["train"]) == 2
    assert run(["no-such-command"]) == 2
