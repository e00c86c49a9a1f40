"""Losses, backpropagation through the tree structure, Adam, the training
loop with early stopping on the hybrid metric t, grid search over hidden
sizes, and checkpoint persistence.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from . import metrics
from .encoding import EmbeddingTable, NodeEncoder, Vocabulary
from .labeling import gold_mask
from .model import (
    BINARY,
    GATES,
    VECTORIAL,
    ModelParameters,
    NodeStates,
    binary_head,
    init_parameters,
    null_vector,
    predict_mask,
    unfold,
    vectorial_head,
)
from .ptb import CorpusRecord, leaf_tokens
from .tree import Tree

BCE_CLAMP = 1e-12


class TrainingError(ValueError):
    pass


class LengthMismatchError(TrainingError):
    pass


class ShapeMismatchError(TrainingError):
    pass


class StaleStatesError(TrainingError):
    pass


class EmptySplitError(TrainingError):
    pass


class DivergedLossError(TrainingError):
    pass


class CheckpointError(ValueError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class CorruptFileError(CheckpointError):
    pass


class FingerprintMismatchError(CheckpointError):
    pass


def bce_loss(probs, targets) -> float:
    """Mean binary cross entropy over leaves, probabilities clamped."""
    probs = np.asarray(probs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if probs.shape != targets.shape:
        raise LengthMismatchError(
            f"probs {probs.shape} vs targets {targets.shape}"
        )
    p = np.clip(probs, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(targets * np.log(p) + (1 - targets) * np.log(1 - p)))


def mse_loss(outputs, targets) -> float:
    """Mean squared error over leaves and coordinates."""
    outputs = np.asarray(outputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if outputs.shape != targets.shape:
        raise ShapeMismatchError(
            f"outputs {outputs.shape} vs targets {targets.shape}"
        )
    return float(np.mean((outputs - targets) ** 2))


def l2_penalty(params: ModelParameters, lam: float) -> float:
    """lambda * sum of squared entries of every weight matrix (biases excluded)."""
    if lam == 0.0:
        return 0.0
    total = 0.0
    for name, tensor in params.tensors():
        if tensor.ndim == 2:
            total += float(np.sum(tensor * tensor))
    return lam * total


def vectorial_targets(
    t: Tree, mask, table: EmbeddingTable
) -> np.ndarray:
    """Per-leaf regression targets: the word's embedding if kept, all-ones if deleted."""
    leaves = t.leaves()
    tgt = np.empty((len(leaves), table.dimension))
    for k, u in enumerate(leaves):
        tgt[k] = table.lookup(t.labels[u]) if mask[k] else null_vector(table.dimension)
    return tgt


def tree_loss(
    t: Tree,
    encodings: np.ndarray,
    mask,
    params: ModelParameters,
    table: EmbeddingTable | None = None,
    lam: float = 0.0,
    states: NodeStates | None = None,
) -> float:
    """Head loss of one tree plus the L2 penalty."""
    if states is None:
        states = unfold(t, encodings, params)
    leaves = t.leaves()
    if len(mask) != len(leaves):
        raise LengthMismatchError("mask length != leaf count")
    if params.head.kind == BINARY:
        probs = [binary_head(states.h[u], states.c[u], params.head) for u in leaves]
        loss = bce_loss(probs, list(mask))
    else:
        outs = np.stack(
            [vectorial_head(states.h[u], states.c[u], params.head) for u in leaves]
        )
        loss = mse_loss(outs, vectorial_targets(t, mask, table))
    return loss + l2_penalty(params, lam)


def zero_grads(params: ModelParameters) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(tensor) for name, tensor in params.tensors()}


def backward(
    t: Tree,
    encodings: np.ndarray,
    states: NodeStates,
    mask,
    params: ModelParameters,
    table: EmbeddingTable | None = None,
    lam: float = 0.0,
) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of (tree loss + L2) w.r.t. every tensor.

    Traversal is reverse pre-order, so every node is processed after all of
    its children; each node's incoming (dh, dc) is its own head term (at
    leaves) plus the accumulated contributions of all children through the
    U matrices and the forget-gate memory path. Gradients sum over nodes
    because the weights are shared.
    """
    if states.params_version != params.version:
        raise StaleStatesError(
            "forward cache was computed with different parameter values"
        )
    cell, head = params.cell, params.head
    n = len(t)
    leaves = t.leaves()
    if len(mask) != len(leaves):
        raise LengthMismatchError("mask length != leaf count")
    n_leaves = len(leaves)
    grads = zero_grads(params)
    dh = np.zeros((n, cell.d_h))
    dc = np.zeros((n, cell.d_h))

    # Head terms seed the leaf accumulators.
    if head.kind == BINARY:
        for k, u in enumerate(leaves):
            p = binary_head(states.h[u], states.c[u], head)
            pc = min(max(p, BCE_CLAMP), 1.0 - BCE_CLAMP)
            # d(mean BCE)/dz for z the pre-sigmoid head activation; the
            # clamp only matters at saturated probabilities.
            dz = np.array([(pc - mask[k]) * (p * (1 - p)) / (pc * (1 - pc)) / n_leaves])
            grads["head.wh"] += np.outer(dz, states.h[u])
            grads["head.wc"] += np.outer(dz, states.c[u])
            grads["head.b"] += dz
            dh[u] += head.wh.T @ dz
            dc[u] += head.wc.T @ dz
    else:
        targets = vectorial_targets(t, mask, table)
        denom = n_leaves * head.d_out
        for k, u in enumerate(leaves):
            out = vectorial_head(states.h[u], states.c[u], head)
            dout = 2.0 * (out - targets[k]) / denom
            grads["head.wh"] += np.outer(dout, states.h[u])
            grads["head.wc"] += np.outer(dout, states.c[u])
            grads["head.b"] += dout
            dh[u] += head.wh.T @ dout
            dc[u] += head.wc.T @ dout

    zero = np.zeros(cell.d_h)
    for u in reversed(t.topdown_order()):
        pa = t.parents[u]
        h_pa = states.h[pa] if pa is not None else zero
        c_pa = states.c[pa] if pa is not None else zero
        r, i, o, f = states.r[u], states.i[u], states.o[u], states.f[u]
        tanh_c = np.tanh(states.c[u])
        do = dh[u] * tanh_c
        dcu = dc[u] + dh[u] * o * (1.0 - tanh_c * tanh_c)
        di = dcu * r
        dr = dcu * i
        df = dcu * c_pa
        da = {
            "r": dr * (1.0 - r * r),
            "i": di * i * (1.0 - i),
            "o": do * o * (1.0 - o),
            "f": df * f * (1.0 - f),
        }
        x = encodings[u]
        for g in GATES:
            grads[f"cell.w.{g}"] += np.outer(da[g], x)
            grads[f"cell.u.{g}"] += np.outer(da[g], h_pa)
            grads[f"cell.b.{g}"] += da[g]
        if pa is not None:
            dc[pa] += dcu * f
            for g in GATES:
                dh[pa] += cell.u[g].T @ da[g]

    if lam != 0.0:
        for name, tensor in params.tensors():
            if tensor.ndim == 2:
                grads[name] += 2.0 * lam * tensor
    return grads


def finite_difference_grads(
    t: Tree,
    encodings: np.ndarray,
    mask,
    params: ModelParameters,
    table: EmbeddingTable | None = None,
    lam: float = 0.0,
    step: float = 1e-5,
) -> dict[str, np.ndarray]:
    """Central-difference gradients of the same loss; the independent check
    against :func:`backward`."""
    out = {}
    for name, tensor in params.tensors():
        g = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = tensor[idx]
            tensor[idx] = orig + step
            lo_hi = tree_loss(t, encodings, mask, params, table, lam)
            tensor[idx] = orig - step
            lo_lo = tree_loss(t, encodings, mask, params, table, lam)
            tensor[idx] = orig
            g[idx] = (lo_hi - lo_lo) / (2.0 * step)
        out[name] = g
    return out


@dataclass
class Adam:
    """Bias-corrected Adam over the model's named tensors."""

    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: ModelParameters, grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        t = self.step_count
        for name, tensor in params.tensors():
            g = grads[name]
            if g.shape != tensor.shape:
                raise ShapeMismatchError(f"gradient shape mismatch at {name}")
            if name not in self.m:
                self.m[name] = np.zeros_like(tensor)
                self.v[name] = np.zeros_like(tensor)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**t)
            v_hat = self.v[name] / (1 - self.beta2**t)
            tensor -= self.alpha * m_hat / (np.sqrt(v_hat) + self.eps)
        params.version += 1


@dataclass
class TrainingConfig:
    hidden_size: int = 200
    head: str = BINARY
    learning_rate: float = 1e-3
    l2: float = 1e-4
    max_epochs: int = 300
    patience: int = 15
    batch_size: int = 16
    seed: int = 0
    threshold: float = 0.5
    forget_bias: float = 1.0
    embedding_dim: int | None = None

    def __post_init__(self):
        if self.hidden_size < 1:
            raise TrainingError("hidden_size must be >= 1")
        if self.l2 < 0:
            raise TrainingError("l2 must be >= 0")
        if self.head not in (BINARY, VECTORIAL):
            raise TrainingError(f"unknown head {self.head!r}")


@dataclass
class Example:
    tree: Tree
    encodings: np.ndarray
    mask: list[int]


def prepare_examples(
    records: list[CorpusRecord], encoder: NodeEncoder
) -> list[Example]:
    return [
        Example(r.tree, encoder.encode_tree(r.tree), gold_mask(r.tree, r))
        for r in records
    ]


def evaluate_examples(
    examples: list[Example],
    params: ModelParameters,
    *,
    threshold: float = 0.5,
    table: EmbeddingTable | None = None,
) -> metrics.MetricsReport:
    preds = [
        predict_mask(ex.tree, ex.encodings, params, threshold=threshold, table=table)
        for ex in examples
    ]
    return metrics.evaluate_masks(
        [leaf_tokens(ex.tree) for ex in examples],
        preds,
        [ex.mask for ex in examples],
    )


def train(
    train_records: list[CorpusRecord],
    val_records: list[CorpusRecord],
    encoder: NodeEncoder,
    config: TrainingConfig,
) -> tuple[ModelParameters, list[dict]]:
    """Full training loop, returning the best-on-validation parameters and
    a per-epoch history of (train loss, validation accuracy/compression/t)."""
    if not train_records or not val_records:
        raise EmptySplitError("training and validation splits must be non-empty")
    train_ex = prepare_examples(train_records, encoder)
    val_ex = prepare_examples(val_records, encoder)
    table = encoder.table
    d_out = table.dimension if config.head == VECTORIAL else None
    params = init_parameters(
        encoder.d_in,
        config.hidden_size,
        config.head,
        d_out=d_out,
        seed=config.seed,
        forget_bias=config.forget_bias,
    )
    opt = Adam(alpha=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    history: list[dict] = []
    best_t = -np.inf
    best_params = params.clone()
    since_best = 0
    head_table = table if config.head == VECTORIAL else None

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_ex))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            acc = zero_grads(params)
            for idx in batch:
                ex = train_ex[idx]
                states = unfold(ex.tree, ex.encodings, params)
                epoch_loss += tree_loss(
                    ex.tree, ex.encodings, ex.mask, params, table, config.l2,
                    states=states,
                )
                g = backward(
                    ex.tree, ex.encodings, states, ex.mask, params, table, config.l2
                )
                for name in acc:
                    acc[name] += g[name]
            for name in acc:
                acc[name] /= len(batch)
            opt.step(params, acc)
        epoch_loss /= len(train_ex)
        if not np.isfinite(epoch_loss):
            raise DivergedLossError(f"non-finite loss at epoch {epoch}")
        report = evaluate_examples(
            val_ex, params, threshold=config.threshold, table=head_table
        )
        history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss,
                "val_accuracy": report.accuracy,
                "val_compression": report.compression_rate,
                "val_t": report.t,
            }
        )
        if report.t > best_t:
            best_t = report.t
            best_params = params.clone()
            since_best = 0
        else:
            since_best += 1
            if since_best > config.patience:
                break
    return best_params, history


def grid_search(
    train_records: list[CorpusRecord],
    val_records: list[CorpusRecord],
    encoder: NodeEncoder,
    config: TrainingConfig,
    sizes: list[int],
) -> tuple[list[dict], int, ModelParameters]:
    """Train one model per hidden size; rank by validation t."""
    if not sizes:
        raise TrainingError("grid search needs at least one size")
    rows = []
    best = None
    for size in sizes:
        cfg = TrainingConfig(**{**asdict(config), "hidden_size": size})
        params, history = train(train_records, val_records, encoder, cfg)
        report = evaluate_examples(
            prepare_examples(val_records, encoder),
            params,
            threshold=cfg.threshold,
            table=encoder.table if cfg.head == VECTORIAL else None,
        )
        rows.append(
            {
                "hidden_size": size,
                "accuracy": report.accuracy,
                "compression_rate": report.compression_rate,
                "gold_compression_rate": report.gold_compression_rate,
                "f1": report.f1,
                "t": report.t,
            }
        )
        if best is None or report.t > best[1]:
            best = (size, report.t, params)
    return rows, best[0], best[2]


def history_csv(history: list[dict]) -> str:
    lines = ["epoch,train_loss,val_accuracy,val_compression,val_t"]
    for row in history:
        lines.append(
            f"{row['epoch']},{row['train_loss']:.12g},{row['val_accuracy']:.12g},"
            f"{row['val_compression']:.12g},{row['val_t']:.12g}"
        )
    return "\n".join(lines) + "\n"


CHECKPOINT_MAGIC = b"TDTC"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path,
    params: ModelParameters,
    config: TrainingConfig,
    vocab: Vocabulary,
    table: EmbeddingTable,
) -> None:
    """Self-describing binary checkpoint; round-trips bit-exactly.

    Layout: magic, format version, JSON header (config, vocabulary,
    fingerprint, tensor manifest), then row-major little-endian float64
    payloads in manifest order, embedding matrix last.
    """
    tensors = params.tensors()
    header = {
        "config": asdict(config),
        "head_kind": params.head.kind,
        "words": list(vocab.words),
        "pos_tags": list(vocab.pos_tags),
        "fingerprint": vocab.fingerprint(),
        "embedding_dim": table.dimension,
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in tensors],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for _, a in tensors:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(table.matrix, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`.

    Returns (params, config, vocab, table). Raises VersionMismatchError on
    an unknown format version and CorruptFileError on truncation or
    inconsistent dimensions.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    buf = io.BytesIO(data)
    if buf.read(4) != CHECKPOINT_MAGIC:
        raise CorruptFileError("bad magic: not a checkpoint file")
    head = buf.read(6)
    if len(head) < 6:
        raise CorruptFileError("truncated header")
    version, blob_len = struct.unpack("<HI", head)
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"unsupported checkpoint version {version}")
    blob = buf.read(blob_len)
    if len(blob) < blob_len:
        raise CorruptFileError("truncated JSON header")
    try:
        header = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptFileError(f"unreadable header: {e}") from e

    def read_array(shape):
        count = int(np.prod(shape)) if shape else 1
        raw = buf.read(8 * count)
        if len(raw) < 8 * count:
            raise CorruptFileError("truncated tensor payload")
        return np.frombuffer(raw, dtype="<f8").reshape(shape).copy()

    arrays = {
        spec["name"]: read_array(spec["shape"]) for spec in header["tensors"]
    }
    vocab = Vocabulary(
        words=tuple(header["words"]), pos_tags=tuple(header["pos_tags"])
    )
    if vocab.fingerprint() != header["fingerprint"]:
        raise CorruptFileError("vocabulary fingerprint does not match contents")
    emb = read_array([len(vocab.words), header["embedding_dim"]])
    if buf.read(1):
        raise CorruptFileError("trailing bytes after payload")
    table = EmbeddingTable(vocab, emb)
    config = TrainingConfig(**header["config"])
    from .model import CellParameters, HeadParameters  # local to avoid cycle noise

    try:
        cell = CellParameters(
            w={g: arrays[f"cell.w.{g}"] for g in GATES},
            u={g: arrays[f"cell.u.{g}"] for g in GATES},
            b={g: arrays[f"cell.b.{g}"] for g in GATES},
        )
        head_params = HeadParameters(
            kind=header["head_kind"],
            wh=arrays["head.wh"],
            wc=arrays["head.wc"],
            b=arrays["head.b"],
        )
    except KeyError as e:
        raise CorruptFileError(f"missing tensor {e}") from e
    params = ModelParameters(cell=cell, head=head_params)
    if params.cell.d_h != config.hidden_size:
        raise CorruptFileError(
            f"tensor hidden size {params.cell.d_h} disagrees with "
            f"config hidden size {config.hidden_size}"
        )
    return params, config, vocab, table


def check_fingerprint(vocab: Vocabulary, expected: str, strict: bool = False) -> bool:
    """Compare a corpus vocabulary against a checkpoint fingerprint."""
    ok = vocab.fingerprint() == expected
    if not ok and strict:
        raise FingerprintMismatchError(
            "corpus vocabulary differs from the checkpoint's"
        )
    return ok
