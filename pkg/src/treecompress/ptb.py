"""Bracketed constituency-tree parsing/serialization and the corpus format.

Trees travel as Penn-treebank-style ``(TAG child child ...)`` strings; a
bare token is a leaf. Corpora are JSON-lines files with fields ``id``,
``tree`` and exactly one of ``compressed_tokens`` or ``keep_mask``, plus an
optional ``annotator``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .tree import Tree

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")

# Treebank escape convention for parentheses inside tokens.


class PtbError(ValueError):
    pass


class UnbalancedParensError(PtbError):
    pass


class EmptyNodeError(PtbError):
    pass


class TrailingGarbageError(PtbError):
    pass


class CorpusError(ValueError):
    pass


class MalformedRecordError(CorpusError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class MaskLengthMismatchError(CorpusError):
    pass


def _escape(token: str) -> str:
    return token.replace("(", "-LRB-").replace(")", "-RRB-")


def _unescape(token: str) -> str:
    return token.replace("-LRB-", "(").replace("-RRB-", ")")


def parse_bracketed(text: str) -> Tree:
    """Parse a bracketed tree string into a :class:`Tree`.

    A bare single token is accepted as a degenerate one-node tree.
    """
    toks = _TOKEN_RE.findall(text)
    if not toks:
        raise EmptyNodeError("empty input")

    labels: list[str] = []
    parents: list[int | None] = []
    children: list[list[int]] = []

    def new_node(label: str, parent: int | None) -> int:
        u = len(labels)
        labels.append(label)
        parents.append(parent)
        children.append([])
        if parent is not None:
            children[parent].append(u)
        return u

    stack: list[int] = []  # open internal nodes
    root: int | None = None
    pos = 0
    while pos < len(toks):
        tok = toks[pos]
        if root is not None and not stack:
            raise TrailingGarbageError(f"unexpected content after tree: {tok!r}")
        if tok == "(":
            pos += 1
            if pos >= len(toks) or toks[pos] in "()":
                raise EmptyNodeError("node without a tag")
            u = new_node(_unescape(toks[pos]), stack[-1] if stack else None)
            if root is None:
                root = u
            stack.append(u)
        elif tok == ")":
            if not stack:
                raise UnbalancedParensError("unexpected ')'")
            closing = stack.pop()
            if not children[closing]:
                raise EmptyNodeError(
                    f"internal node {labels[closing]!r} has no children"
                )
        else:
            u = new_node(_unescape(tok), stack[-1] if stack else None)
            if root is None:
                root = u
        pos += 1
    if stack:
        raise UnbalancedParensError(f"{len(stack)} unclosed '('")
    return Tree(labels, parents, children)


def serialize_bracketed(t: Tree) -> str:
    """Canonical single-space bracketed form; inverse of :func:`parse_bracketed`."""

    def emit(u: int) -> str:
        label = _escape(str(t.labels[u]))
        if t.is_leaf(u):
            return label
        return "(" + " ".join([label] + [emit(c) for c in t.children[u]]) + ")"

    return emit(t.root)


def leaf_tokens(t: Tree) -> list[str]:
    """Sentence tokens of a parse tree: leaf labels in order."""
    return [t.labels[u] for u in t.leaves()]


def validate_parse_tree(t: Tree) -> None:
    """Check the parse-tree labeling convention: string labels everywhere."""
    for lab in t.labels:
        if not isinstance(lab, str):
            raise PtbError(f"non-string label {lab!r}")


@dataclass
class CorpusRecord:
    """One sentence-compression example.

    Exactly one of ``compressed_tokens`` (raw target sentence) or
    ``keep_mask`` (per-leaf binary labels) is set.
    """

    id: str
    tree_text: str
    compressed_tokens: list[str] | None = None
    keep_mask: list[int] | None = None
    annotator: int | None = None
    tree: Tree = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if (self.compressed_tokens is None) == (self.keep_mask is None):
            raise CorpusError(
                f"record {self.id}: need exactly one of "
                "compressed_tokens / keep_mask"
            )
        self.tree = parse_bracketed(self.tree_text)
        if self.keep_mask is not None:
            n_leaves = len(self.tree.leaves())
            if len(self.keep_mask) != n_leaves:
                raise MaskLengthMismatchError(
                    f"record {self.id}: mask length {len(self.keep_mask)} "
                    f"!= leaf count {n_leaves}"
                )
            if any(b not in (0, 1) for b in self.keep_mask):
                raise CorpusError(f"record {self.id}: non-binary mask entry")

    @property
    def source_tokens(self) -> list[str]:
        return leaf_tokens(self.tree)


def load_corpus(path) -> list[CorpusRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedRecordError(lineno, f"invalid JSON: {e}") from e
            if not isinstance(obj, dict) or "id" not in obj or "tree" not in obj:
                raise MalformedRecordError(lineno, "missing 'id' or 'tree'")
            try:
                records.append(
                    CorpusRecord(
                        id=str(obj["id"]),
                        tree_text=obj["tree"],
                        compressed_tokens=obj.get("compressed_tokens"),
                        keep_mask=obj.get("keep_mask"),
                        annotator=obj.get("annotator"),
                    )
                )
            except MaskLengthMismatchError:
                raise
            except (PtbError, CorpusError, TypeError) as e:
                raise MalformedRecordError(lineno, str(e)) from e
    return records


def write_corpus(records: list[CorpusRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj: dict = {"id": r.id, "tree": r.tree_text}
            if r.compressed_tokens is not None:
                obj["compressed_tokens"] = r.compressed_tokens
            if r.keep_mask is not None:
                obj["keep_mask"] = r.keep_mask
            if r.annotator is not None:
                obj["annotator"] = r.annotator
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
