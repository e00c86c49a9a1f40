"""Conversions between compressed sentences and per-leaf keep masks."""

from __future__ import annotations

import warnings
from typing import Sequence

from .ptb import MaskLengthMismatchError, leaf_tokens
from .tree import Tree


class NotASubsequenceError(ValueError):
    def __init__(self, token: str, position: int):
        self.token = token
        self.position = position
        super().__init__(
            f"compressed token {token!r} (position {position}) cannot be "
            "matched as a subsequence of the source"
        )


def align_compression(
    source_tokens: Sequence[str], compressed_tokens: Sequence[str]
) -> list[int]:
    """Align a compressed sentence onto its source as a keep mask.

    Duplicate words are resolved by leftmost-greedy matching, which is
    deterministic and linear-time.
    """
    mask = [0] * len(source_tokens)
    i = 0
    for j, tok in enumerate(compressed_tokens):
        while i < len(source_tokens) and source_tokens[i] != tok:
            i += 1
        if i == len(source_tokens):
            raise NotASubsequenceError(tok, j)
        mask[i] = 1
        i += 1
    return mask


def _check_mask(t: Tree, mask: Sequence[int]) -> list[int]:
    leaves = t.leaves()
    if len(mask) != len(leaves):
        raise MaskLengthMismatchError(
            f"mask length {len(mask)} != leaf count {len(leaves)}"
        )
    return leaves


def apply_mask(t: Tree, mask: Sequence[int]) -> Tree:
    """Prune the tree down to the leaves kept by the mask.

    Deleted leaves are removed; internal nodes left with no surviving
    children are removed too, cascading upward. The root is always kept,
    so an all-zeros mask yields a root-only tree (flagged with a warning).
    """
    leaves = _check_mask(t, mask)
    if mask and not any(mask):
        warnings.warn("all-zeros mask: result is a root-only tree")
    keep = [False] * len(t)
    for u, bit in zip(leaves, mask):
        keep[u] = bool(bit)
    # A node survives iff it is the root, a kept leaf, or has a kept descendant.
    for u in reversed(t.topdown_order()):
        if keep[u] and t.parents[u] is not None:
            keep[t.parents[u]] = True
    keep[t.root] = True
    dead_roots = [
        u
        for u in range(len(t))
        if not keep[u] and (t.parents[u] is None or keep[t.parents[u]])
    ]
    pruned, _ = t.prune(dead_roots)
    return pruned


def mask_to_sentence(t: Tree, mask: Sequence[int]) -> list[str]:
    """Kept leaf labels in left-to-right order."""
    leaves = _check_mask(t, mask)
    return [t.labels[u] for u, bit in zip(leaves, mask) if bit]


def compressed_tokens_of(t: Tree, record_mask: Sequence[int]) -> list[str]:
    return mask_to_sentence(t, record_mask)


def gold_mask(t: Tree, record) -> list[int]:
    """Keep mask of a corpus record, aligning compressed tokens if needed."""
    if record.keep_mask is not None:
        return list(record.keep_mask)
    return align_compression(leaf_tokens(t), record.compressed_tokens)
