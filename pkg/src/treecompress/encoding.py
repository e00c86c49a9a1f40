"""Per-node input vectors: one-hot POS tags, word-embedding leaves.

The common input dimension is ``max(number of tags, embedding dimension)``
with zero padding of the shorter representation; when the two sizes are
equal no padding happens on either side.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .ptb import CorpusRecord, leaf_tokens
from .tree import Tree

UNK = "<unk>"


class EncodingError(ValueError):
    pass


class EmptyCorpusError(EncodingError):
    pass


class UnknownTagError(EncodingError):
    pass


class InconsistentDimensionError(EncodingError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


@dataclass(frozen=True)
class Vocabulary:
    """Frozen word and POS-tag inventories with dense, stable indices.

    ``words`` always contains the UNK token exactly once, at index 0;
    the remaining words are sorted lexicographically.
    """

    words: tuple[str, ...]
    pos_tags: tuple[str, ...]
    word_index: dict = field(repr=False, compare=False, default=None)
    tag_index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.words.count(UNK) != 1:
            raise EncodingError("vocabulary must contain UNK exactly once")
        object.__setattr__(
            self, "word_index", {w: i for i, w in enumerate(self.words)}
        )
        object.__setattr__(
            self, "tag_index", {t: i for i, t in enumerate(self.pos_tags)}
        )

    @property
    def unk_index(self) -> int:
        return self.word_index[UNK]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for w in self.words:
            h.update(w.encode("utf-8") + b"\x00")
        h.update(b"\x01")
        for t in self.pos_tags:
            h.update(t.encode("utf-8") + b"\x00")
        return h.hexdigest()


def build_vocab(records: list[CorpusRecord] | list[Tree]) -> Vocabulary:
    """Collect words from leaves and tags from internal nodes, then freeze."""
    if not records:
        raise EmptyCorpusError("cannot build a vocabulary from an empty corpus")
    words: set[str] = set()
    tags: set[str] = set()
    for r in records:
        t = r.tree if isinstance(r, CorpusRecord) else r
        for u in range(len(t)):
            if t.is_leaf(u):
                words.add(t.labels[u])
            else:
                tags.add(t.labels[u])
    words.discard(UNK)
    return Vocabulary(
        words=(UNK,) + tuple(sorted(words)), pos_tags=tuple(sorted(tags))
    )


class EmbeddingTable:
    """Word -> vector table aligned with a vocabulary.

    Row ``i`` of ``matrix`` is the vector of ``vocab.words[i]``; UNK and any
    word missing from the source file get the all-zeros vector.
    """

    def __init__(self, vocab: Vocabulary, matrix: np.ndarray, coverage=None):
        if matrix.shape[0] != len(vocab.words):
            raise EncodingError("embedding matrix row count != vocabulary size")
        self.vocab = vocab
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self.dimension = matrix.shape[1]
        self.coverage = coverage  # (found, total) over non-UNK vocab words

    def lookup(self, word: str) -> np.ndarray:
        idx = self.vocab.word_index.get(word, self.vocab.unk_index)
        return self.matrix[idx]


def load_embeddings(path, vocab: Vocabulary) -> EmbeddingTable:
    """Load a plain-text embedding file (``word v1 v2 ... vd`` per line)."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            word, vals = parts[0], parts[1:]
            if dim is None:
                dim = len(vals)
            elif len(vals) != dim:
                raise InconsistentDimensionError(
                    lineno, f"expected {dim} values, found {len(vals)}"
                )
            if word in vocab.word_index:
                vectors[word] = np.array([float(v) for v in vals])
    if dim is None:
        raise EncodingError(f"no embedding rows found in {path}")
    matrix = np.zeros((len(vocab.words), dim))
    found = 0
    for w, vec in vectors.items():
        if w != UNK:
            found += 1
        matrix[vocab.word_index[w]] = vec
    total = len(vocab.words) - 1  # UNK always falls back to zeros
    return EmbeddingTable(vocab, matrix, coverage=(found, total))


def random_embeddings(vocab: Vocabulary, dimension: int, seed: int) -> EmbeddingTable:
    """Deterministic uniform [-0.1, 0.1] embeddings, stable per (word, seed)."""
    if dimension < 1:
        raise EncodingError("dimension must be >= 1")
    matrix = np.zeros((len(vocab.words), dimension))
    for w, i in vocab.word_index.items():
        if w == UNK:
            continue
        digest = hashlib.sha256(f"{seed}:{w}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        matrix[i] = rng.uniform(-0.1, 0.1, size=dimension)
    return EmbeddingTable(vocab, matrix, coverage=(len(vocab.words) - 1,) * 2)


class NodeEncoder:
    """Turn every node of a parse tree into its input vector."""

    def __init__(self, vocab: Vocabulary, table: EmbeddingTable):
        self.vocab = vocab
        self.table = table
        self.d_in = max(len(vocab.pos_tags), table.dimension)

    def encode_node(self, t: Tree, u: int) -> np.ndarray:
        x = np.zeros(self.d_in)
        label = t.labels[u]
        if t.is_leaf(u):
            vec = self.table.lookup(label)
            x[: len(vec)] = vec
        else:
            idx = self.vocab.tag_index.get(label)
            if idx is None:
                raise UnknownTagError(f"tag {label!r} not in vocabulary")
            x[idx] = 1.0
        return x

    def encode_tree(self, t: Tree) -> np.ndarray:
        return np.stack([self.encode_node(t, u) for u in range(len(t))])
