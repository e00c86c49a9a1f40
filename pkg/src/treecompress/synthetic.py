"""Synthetic parse trees and corpora for corpus-free testing and demos."""

from __future__ import annotations

import numpy as np

from .ptb import CorpusRecord, serialize_bracketed
from .tree import Tree

TAGS = ("S", "NP", "VP", "PP", "ADJP")
WORDS = ("alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf")


def random_parse_tree(
    rng: np.random.Generator,
    max_depth: int = 4,
    max_children: int = 3,
    tags=TAGS,
    words=WORDS,
) -> Tree:
    """Random tree with tag-labeled internal nodes and word-labeled leaves."""
    labels: list[str] = []
    parents: list[int | None] = []

    def grow(parent: int | None, depth: int) -> None:
        u = len(labels)
        leaf = depth >= max_depth or (parent is not None and rng.random() < 0.35)
        labels.append(
            str(rng.choice(words)) if leaf else str(rng.choice(tags))
        )
        parents.append(parent)
        if not leaf:
            for _ in range(int(rng.integers(1, max_children + 1))):
                grow(u, depth + 1)

    grow(None, 0)
    t = Tree(labels, parents)
    # Leaves as direct children of the root would be words at depth 1; fine
    # structurally, but regrow degenerate single-node trees.
    if len(t) == 1:
        return random_parse_tree(rng, max_depth, max_children, tags, words)
    return t


def keep_rule_corpus(rng: np.random.Generator, n: int, prefix="ex") -> list[CorpusRecord]:
    """Corpus whose gold masks follow a deterministic, learnable rule:
    a leaf is kept iff its parent tag is not 'PP'."""
    records = []
    while len(records) < n:
        t = random_parse_tree(rng, max_depth=4, max_children=3)
        mask = [
            0 if t.labels[t.parents[u]] == "PP" else 1 for u in t.leaves()
        ]
        if not any(mask) or all(mask):
            continue  # keep both classes present
        records.append(
            CorpusRecord(
                id=f"{prefix}{len(records)}",
                tree_text=serialize_bracketed(t),
                keep_mask=mask,
            )
        )
    return records


def ancestor_context_corpus(
    rng: np.random.Generator, n: int, word: str = "token", prefix="ctx"
) -> list[CorpusRecord]:
    """Corpus where every leaf carries the same word and its keep label is a
    function of its ancestor tags only: kept under 'KEEP', deleted under
    'DROP'. A predictor keyed on the leaf label alone is capped at the
    majority-class rate (exactly 0.5 by construction)."""
    records = []
    for k in range(n):
        n_pairs = int(rng.integers(2, 5))
        labels: list[str] = ["S"]
        parents: list[int | None] = [None]
        mask: list[int] = []
        slots = []
        for _ in range(n_pairs):
            slots.extend([1, 0])
        rng.shuffle(slots)
        for keep in slots:
            mid = len(labels)
            labels.append("KEEP" if keep else "DROP")
            parents.append(0)
            labels.append(word)
            parents.append(mid)
            mask.append(keep)
        t = Tree(labels, parents)
        records.append(
            CorpusRecord(
                id=f"{prefix}{k}",
                tree_text=serialize_bracketed(t),
                keep_mask=mask,
            )
        )
    return records
