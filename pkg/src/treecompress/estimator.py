"""Scikit-learn-style wrapper around the tree compression model.

X is a list of parse trees (or bracketed strings); y is a list of per-leaf
keep masks. ``predict`` returns masks, ``score`` the mean per-leaf
decision accuracy.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .encoding import NodeEncoder, build_vocab, random_embeddings
from .model import VECTORIAL, predict_mask
from .ptb import CorpusRecord, parse_bracketed, serialize_bracketed
from .training import TrainingConfig, train
from .tree import Tree


class TreeCompressor(BaseEstimator):
    """Extractive sentence compressor driven by a top-down tree recursion."""

    def __init__(
        self,
        hidden_size: int = 64,
        head: str = "binary",
        learning_rate: float = 1e-3,
        l2: float = 1e-4,
        max_epochs: int = 100,
        patience: int = 15,
        batch_size: int = 16,
        seed: int = 0,
        threshold: float = 0.5,
        embedding_dim: int | None = None,
        validation_fraction: float = 0.0,
    ):
        self.hidden_size = hidden_size
        self.head = head
        self.learning_rate = learning_rate
        self.l2 = l2
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.seed = seed
        self.threshold = threshold
        self.embedding_dim = embedding_dim
        self.validation_fraction = validation_fraction

    @staticmethod
    def _as_tree(x) -> Tree:
        return x if isinstance(x, Tree) else parse_bracketed(x)

    def _config(self) -> TrainingConfig:
        return TrainingConfig(
            hidden_size=self.hidden_size,
            head=self.head,
            learning_rate=self.learning_rate,
            l2=self.l2,
            max_epochs=self.max_epochs,
            patience=self.patience,
            batch_size=self.batch_size,
            seed=self.seed,
            threshold=self.threshold,
            embedding_dim=self.embedding_dim,
        )

    def fit(self, X, y):
        trees = [self._as_tree(x) for x in X]
        if len(trees) != len(y):
            raise ValueError("X and y must have the same length")
        records = [
            CorpusRecord(
                id=str(k), tree_text=serialize_bracketed(t), keep_mask=list(m)
            )
            for k, (t, m) in enumerate(zip(trees, y))
        ]
        config = self._config()
        vocab = build_vocab(records)
        dim = self.embedding_dim or max(len(vocab.pos_tags), 1)
        table = random_embeddings(vocab, dim, self.seed)
        self.encoder_ = NodeEncoder(vocab, table)
        n_val = max(1, int(len(records) * self.validation_fraction))
        val = records[-n_val:] if self.validation_fraction > 0 else records
        self.params_, self.history_ = train(records, val, self.encoder_, config)
        return self

    def predict(self, X):
        if not hasattr(self, "params_"):
            raise NotFittedError("fit the compressor before predicting")
        table = self.encoder_.table if self.head == VECTORIAL else None
        masks = []
        for x in X:
            t = self._as_tree(x)
            masks.append(
                predict_mask(
                    t,
                    self.encoder_.encode_tree(t),
                    self.params_,
                    threshold=self.threshold,
                    table=table,
                )
            )
        return masks

    def transform(self, X):
        """Compressed token lists for each input tree."""
        out = []
        for x, mask in zip(X, self.predict(X)):
            t = self._as_tree(x)
            leaves = t.leaves()
            out.append([t.labels[u] for u, b in zip(leaves, mask) if b])
        return out

    def score(self, X, y):
        """Mean per-leaf keep/delete decision accuracy."""
        preds = self.predict(X)
        correct = total = 0
        for pred, gold in zip(preds, y):
            if len(pred) != len(gold):
                raise ValueError("gold mask length mismatch")
            correct += sum(int(p == g) for p, g in zip(pred, gold))
            total += len(gold)
        return correct / total if total else 0.0
